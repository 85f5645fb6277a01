#pragma once

#include "covjudge/corpus.hpp"
#include "covjudge/judge.hpp"
#include "covjudge/provider.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace covjudge {

class MetricsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kCloseMatchThreshold = 5.0;

struct AccuracyResult {
    double maae = 0.0;  // mean absolute error, percentage points
    double aps = 0.0;   // 100 - maae
    double pmr = 0.0;   // % exact matches
    double cmr = 0.0;   // % within the close-match threshold (inclusive)
    std::size_t n = 0;
};

/// Throws MetricsError on empty input or length mismatch.
AccuracyResult compute_accuracy(std::span<const double> predictions, std::span<const double> truths,
                                double close_threshold = kCloseMatchThreshold);

struct ReliabilityResult {
    double ecr_at_1 = 0.0;  // % of evaluations valid on the first attempt
    // Total attempts / completed evaluations; absent when nothing completed.
    std::optional<double> mean_attempts;
    std::size_t evaluations = 0;
    std::size_t completed = 0;
    std::size_t total_calls = 0;
};

ReliabilityResult compute_reliability(std::span<const EvaluationRecord> records);

struct CostResult {
    double mean_cost = 0.0;    // USD per completed evaluation, successful attempt only
    double cost_per_1k = 0.0;  // 1000 x mean_cost
    // cost_per_1k x 100 / ECR@1; absent when ECR@1 is zero.
    std::optional<double> adjusted_cost_per_1k;
    // Every attempt's reported tokens, per 1,000 completed evaluations.
    double measured_cost_per_1k = 0.0;
};

/// USD for one call at the config's per-million-token rates.
double token_cost(std::int64_t prompt_tokens, std::int64_t completion_tokens, const ModelConfig& config);

/// Throws MetricsError when no record completed.
CostResult compute_cost(std::span<const EvaluationRecord> records, const ModelConfig& config,
                        double ecr_at_1);

/// Retry-overhead model: nominal x 100 / ecr. Absent for ecr <= 0.
std::optional<double> adjusted_cost(double cost_per_1k, double ecr_at_1);

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // sample (n - 1); 0 for a single value
    std::size_t n = 0;
};

/// Throws MetricsError on empty input.
Aggregate aggregate_runs(std::span<const double> values);

enum class Metric {
    Maae,
    Aps,
    Pmr,
    Cmr,
    EcrAt1,
    MeanAttempts,
    CostPer1k,
    AdjustedCostPer1k,
    MeasuredCostPer1k,
};

inline constexpr std::array<Metric, 9> kAllMetrics{
    Metric::Maae,         Metric::Aps,       Metric::Pmr,
    Metric::Cmr,          Metric::EcrAt1,    Metric::MeanAttempts,
    Metric::CostPer1k,    Metric::AdjustedCostPer1k, Metric::MeasuredCostPer1k,
};

std::string_view metric_key(Metric metric);
std::optional<Metric> parse_metric_key(std::string_view key);
/// True when smaller values are better (errors, attempts, cost).
bool lower_is_better(Metric metric);

struct RunMetrics {
    int run_index = 0;
    std::array<std::optional<double>, kAllMetrics.size()> values{};

    std::optional<double> get(Metric m) const { return values[static_cast<std::size_t>(m)]; }
};

struct ConfigMetrics {
    std::string config_id;
    std::size_t runs = 0;
    std::size_t evaluations = 0;
    std::size_t never_completed = 0;
    std::vector<RunMetrics> per_run;
    std::array<std::optional<Aggregate>, kAllMetrics.size()> aggregates{};
    // Adjusted cost computed from the run means rather than per run.
    std::optional<double> adjusted_cost_of_means;

    std::optional<Aggregate> get(Metric m) const { return aggregates[static_cast<std::size_t>(m)]; }
};

struct MetricsReport {
    std::vector<ConfigMetrics> configs;

    const ConfigMetrics* find(std::string_view config_id) const;
};

/// Per config and run: accuracy against the corpus ground truth, reliability
/// and cost; then mean/std across runs. Configs appear in `configs` order.
/// Throws MetricsError if a record references a ticket missing from the corpus.
MetricsReport build_report(std::span<const EvaluationRecord> records, const Corpus& corpus,
                           const std::vector<ModelConfig>& configs);

}  // namespace covjudge
