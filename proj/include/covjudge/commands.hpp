#pragma once

#include "covjudge/benchmark.hpp"
#include "covjudge/corpus.hpp"
#include "covjudge/judge.hpp"
#include "covjudge/metrics.hpp"
#include "covjudge/prompt.hpp"
#include "covjudge/provider.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace covjudge {

/// Process exit codes; stable across versions.
enum class ExitCode : int { Ok = 0, Usage = 1, Data = 2, Provider = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::filesystem::path corpus;
    std::filesystem::path ledger;
    std::vector<ModelConfig> models;
    int runs = 5;
    int parallelism = 1;
    std::uint64_t seed = 0;
    RetryPolicy retry;
    std::optional<std::filesystem::path> prompt_config;

    void validate() const;
};

/// Relative paths inside the document resolve against `base_dir`.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Builds one provider per config: a seeded MockProvider whose simulated
/// judge returns the corpus ground truth plus bounded integer noise, or the
/// shared HTTP provider. Throws ProviderAuthError for live configs whose
/// secret is unset.
std::map<std::string, std::shared_ptr<Provider>> make_providers(const RunConfig& config,
                                                                const Corpus& corpus);

// --- report ---------------------------------------------------------------

/// "6.07±0.08" for (6.07, 0.0837, 2).
std::string format_mean_std(double mean, double std, int decimals);
int display_decimals(Metric metric);

std::string report_to_text(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);
std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(std::string_view json_text);
MetricsReport load_report(const std::filesystem::path& path);

// --- project --------------------------------------------------------------

struct Projection {
    double monthly_usd = 0.0;
    double annual_usd = 0.0;
    std::optional<double> ratio;  // versus / base
};

/// Throws std::invalid_argument for non-positive inputs.
Projection project_cost(double cost_per_1k, std::int64_t monthly_volume,
                        std::optional<double> versus_cost_per_1k = std::nullopt);

/// "$7,896" for whole-dollar amounts, "$1,234.56" otherwise.
std::string format_usd(double amount);
/// Nearest integer multiple, e.g. "78×" for 78.18.
std::string format_ratio(double ratio);
std::string projection_to_text(const Projection& projection);

// --- compare --------------------------------------------------------------

struct Comparison {
    std::string config_a;
    std::string config_b;
    double maae_a = 0.0, maae_b = 0.0;
    double delta_maae_pp = 0.0;  // b - a
    double ecr_a = 0.0, ecr_b = 0.0;
    double delta_ecr_pp = 0.0;  // b - a
    double cost_a = 0.0, cost_b = 0.0;
    double delta_cost_usd = 0.0;  // b - a
    // Savings as % of the higher cost, increases as % of the lower; negative
    // for savings.
    double delta_cost_pct = 0.0;
};

/// Compares adjusted cost, MAAE and ECR@1 means; throws std::out_of_range for
/// unknown config ids.
Comparison compare_configs(const MetricsReport& report, std::string_view config_a,
                           std::string_view config_b);
std::string comparison_to_text(const Comparison& comparison);

// --- subcommands ------------------------------------------------------------

struct RunCommandOptions {
    std::filesystem::path config_path;
    bool resume = false;
    std::optional<std::size_t> limit;
    bool quiet = false;
};

ExitCode cmd_run(const RunCommandOptions& options, std::ostream& out, std::ostream& err);

struct ReportCommandOptions {
    std::filesystem::path ledger;
    std::filesystem::path corpus;
    std::optional<std::filesystem::path> csv;
    std::optional<std::filesystem::path> json;
};

ExitCode cmd_report(const ReportCommandOptions& options, std::ostream& out, std::ostream& err);
ExitCode cmd_project(double cost_per_1k, std::int64_t volume, std::optional<double> versus,
                     std::ostream& out, std::ostream& err);
ExitCode cmd_compare(const std::filesystem::path& report, const std::string& config_a,
                     const std::string& config_b, std::ostream& out, std::ostream& err);

}  // namespace covjudge
