#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace covjudge {

enum class HttpMethod { Get, Post, Put, Delete };

inline constexpr std::array<HttpMethod, 4> kHttpMethods{HttpMethod::Get, HttpMethod::Post,
                                                        HttpMethod::Put, HttpMethod::Delete};

std::string_view to_string(HttpMethod method);
std::optional<HttpMethod> parse_http_method(std::string_view text);

struct JiraTicket {
    std::string id;
    std::string title;
    std::string description;
    std::vector<std::string> acceptance_criteria;
    std::vector<std::string> success_scenarios;
    std::vector<std::string> error_scenarios;
    HttpMethod http_method = HttpMethod::Get;
};

/// Expert scores per rubric dimension, each on a 0-10 scale.
struct RubricScores {
    double scenario_completeness = 0.0;
    double acceptance_alignment = 0.0;
    double method_concerns = 0.0;
    double assertion_quality = 0.0;
};

/// Annotation keys for the four dimensions, in rubric order.
inline constexpr std::array<std::string_view, 4> kDimensionKeys{
    "scenario_completeness", "acceptance_alignment", "method_concerns", "assertion_quality"};

struct GroundTruth {
    std::string ticket_id;
    // Absent when the annotation publishes only the normalized score.
    std::optional<RubricScores> dimensions;
    double normalized_score = 0.0;
};

/// 10 x (0.4 completeness + 0.3 alignment + 0.2 method + 0.1 assertions), in [0, 100].
/// Throws std::invalid_argument if any dimension is outside [0, 10].
double ground_truth_score(const RubricScores& dims);

struct CorpusItem {
    JiraTicket ticket;
    std::string gherkin_source;
    GroundTruth ground_truth;
};

enum class CorpusErrorKind { MissingFile, DuplicateId, AnnotationMismatch, SchemaError };

std::string_view to_string(CorpusErrorKind kind);

class CorpusError : public std::runtime_error {
public:
    CorpusError(CorpusErrorKind kind, const std::string& detail);
    CorpusErrorKind kind() const noexcept { return kind_; }

private:
    CorpusErrorKind kind_;
};

/// Immutable, id-ordered collection of benchmark items.
class Corpus {
public:
    Corpus() = default;
    /// Sorts by ticket id; throws CorpusError{DuplicateId} on a repeated id.
    explicit Corpus(std::vector<CorpusItem> items);

    const std::vector<CorpusItem>& items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    const CorpusItem* find(std::string_view ticket_id) const;

    /// Content hash over tickets and scripts. Annotations are excluded so that
    /// ground-truth corrections do not invalidate existing run ledgers.
    std::string digest() const;

private:
    std::vector<CorpusItem> items_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

/// Loads `<root>/<dir>/{ticket.json,script.feature,annotation.json}` for every
/// subdirectory of `root`.
Corpus load_corpus(const std::filesystem::path& root);

struct ItemStatus {
    std::string ticket_id;
    bool parses = true;
    std::string diagnostic;
};

struct ValidationReport {
    std::map<HttpMethod, std::size_t> method_counts;
    std::vector<ItemStatus> items;
    std::vector<std::string> ids;

    std::size_t parse_failures() const;
};

ValidationReport validate_corpus(const Corpus& corpus);

}  // namespace covjudge
