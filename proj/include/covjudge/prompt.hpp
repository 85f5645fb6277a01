#pragma once

#include "covjudge/corpus.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace covjudge {

enum class PromptErrorKind { MissingField, UnknownMethod, InvalidRubric, InvalidGuidelines, Config };

std::string_view to_string(PromptErrorKind kind);

class PromptError : public std::runtime_error {
public:
    PromptError(PromptErrorKind kind, const std::string& detail);
    PromptErrorKind kind() const noexcept { return kind_; }

private:
    PromptErrorKind kind_;
};

struct RubricDimension {
    std::string key;  // used for annotation dimensions and verdict rubric_flags
    std::string name;
    double weight = 0.0;
    std::string description;
};

/// Ordered weighted rubric. Weights lie in [0, 1] and sum to 1 within 1e-9.
class Rubric {
public:
    explicit Rubric(std::vector<RubricDimension> dimensions);

    const std::vector<RubricDimension>& dimensions() const noexcept { return dimensions_; }
    bool has_key(std::string_view key) const;

private:
    std::vector<RubricDimension> dimensions_;
};

/// Completeness 40%, criteria alignment 30%, HTTP method concerns 20%,
/// assertion quality 10%.
Rubric default_rubric();

/// Per-HTTP-method coverage expectations. Every present method has a
/// non-empty list.
class Guidelines {
public:
    explicit Guidelines(std::map<HttpMethod, std::vector<std::string>> per_method);

    const std::map<HttpMethod, std::vector<std::string>>& per_method() const noexcept {
        return per_method_;
    }

private:
    std::map<HttpMethod, std::vector<std::string>> per_method_;
};

Guidelines default_guidelines();

const std::vector<std::string>& select_guidelines(HttpMethod method, const Guidelines& guidelines);
/// String form for callers holding raw method names; unknown names (PATCH,
/// lower case, ...) raise PromptErrorKind::UnknownMethod.
const std::vector<std::string>& select_guidelines(std::string_view method,
                                                  const Guidelines& guidelines);

struct PromptConfig {
    Rubric rubric = default_rubric();
    Guidelines guidelines = default_guidelines();
};

/// Reads `{"rubric": [...], "guidelines": {"GET": [...], ...}}`. Either key may
/// be omitted to keep the built-in default.
PromptConfig load_prompt_config(const std::filesystem::path& path);
PromptConfig parse_prompt_config(std::string_view json_text);
std::string prompt_config_to_json(const PromptConfig& config);

std::string render_rubric(const Rubric& rubric);
std::string render_system_prompt(const Rubric& rubric);

/// Pretty-printed verdict document used to anchor the output schema: coverage
/// 85, one covered scenario, one gap, one recommendation and a flag per
/// rubric dimension.
std::string default_example_output(const Rubric& rubric);

std::string render_user_prompt(const JiraTicket& ticket, std::string_view gherkin_source,
                               const Guidelines& guidelines, std::string_view example_output);

struct PromptPair {
    std::string system_text;
    std::string user_text;

    /// SHA-256 over both texts; equal prompts hash equally.
    std::string digest() const;
};

PromptPair build_prompt(const CorpusItem& item, const PromptConfig& config);

}  // namespace covjudge
