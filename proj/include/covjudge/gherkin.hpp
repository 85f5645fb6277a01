#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace covjudge::gherkin {

enum class Keyword { Given, When, Then, And, But };

std::string_view to_string(Keyword kw);

struct Step {
    Keyword keyword = Keyword::Given;
    // Never And/But: those inherit from the closest preceding primary step.
    Keyword resolved_keyword = Keyword::Given;
    std::string text;

    bool operator==(const Step&) const = default;
};

struct Scenario {
    std::string name;
    std::vector<std::string> tags;
    std::vector<Step> steps;

    bool operator==(const Scenario&) const = default;
};

struct Feature {
    std::string name;
    std::vector<std::string> tags;
    // Free-text lines between the header and the first scenario, joined with '\n'.
    std::string description;
    std::vector<Scenario> scenarios;

    bool operator==(const Feature&) const = default;
};

enum class ParseErrorKind {
    EmptyInput,
    NoFeatureHeader,
    ScenarioWithoutSteps,
    StepBeforeScenario,
    DanglingAnd,
    ScenarioStartsWithThen,
    EmptyName,
    EmptyStepText,
    MisplacedTags,
    DuplicateFeature,
    UnexpectedLine,
    Unsupported,
};

std::string_view to_string(ParseErrorKind kind);

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, std::size_t line, const std::string& detail);

    ParseErrorKind kind() const noexcept { return kind_; }
    // 1-based; 0 when the error is not tied to a line (empty input).
    std::size_t line() const noexcept { return line_; }

private:
    ParseErrorKind kind_;
    std::size_t line_;
};

/// Parses the supported Gherkin subset: Feature, Scenario, Given/When/Then/And/But
/// steps, tags and free-text feature descriptions. CRLF input is normalized to LF.
/// Outlines, Examples, Background, Rule, data tables and docstrings raise
/// ParseErrorKind::Unsupported.
Feature parse_feature(std::string_view source);

/// Canonical text: two spaces per nesting level, a blank line before each
/// scenario, original step keywords, LF line endings.
std::string render_feature(const Feature& feature);

struct ScenarioStats {
    std::size_t scenario_count = 0;
    std::size_t step_count = 0;
    std::map<Keyword, std::size_t> steps_by_resolved_keyword;
};

ScenarioStats scenario_stats(const Feature& feature);

}  // namespace covjudge::gherkin
