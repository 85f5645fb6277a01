#include "covjudge/gherkin.hpp"

#include <array>
#include <optional>
#include <utility>

namespace covjudge::gherkin {

namespace {

constexpr std::string_view kWhitespace = " \t\r\f\v";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(kWhitespace);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(kWhitespace);
    return s.substr(first, last - first + 1);
}

bool is_space(char c) { return kWhitespace.find(c) != std::string_view::npos; }

// Matches `word` at the start of `line` followed by end-of-line or whitespace.
std::optional<std::string_view> match_word(std::string_view line, std::string_view word) {
    if (!line.starts_with(word)) {
        return std::nullopt;
    }
    const auto rest = line.substr(word.size());
    if (!rest.empty() && !is_space(rest.front())) {
        return std::nullopt;
    }
    return trim(rest);
}

std::optional<std::string_view> match_header(std::string_view line, std::string_view header) {
    if (!line.starts_with(header)) {
        return std::nullopt;
    }
    return trim(line.substr(header.size()));
}

constexpr std::array<std::pair<std::string_view, Keyword>, 5> kStepKeywords{{
    {"Given", Keyword::Given},
    {"When", Keyword::When},
    {"Then", Keyword::Then},
    {"And", Keyword::And},
    {"But", Keyword::But},
}};

constexpr std::array<std::string_view, 7> kUnsupportedHeaders{
    "Scenario Outline:", "Scenario Template:", "Examples:", "Scenarios:",
    "Background:",       "Rule:",              "Example:",
};

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::string normalize_newlines(std::string_view source) {
    std::string out;
    out.reserve(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source[i] == '\r' && i + 1 < source.size() && source[i + 1] == '\n') {
            continue;
        }
        out.push_back(source[i]);
    }
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view text) : lines_(split_lines(text)) {}

    Feature run() {
        bool any_content = false;
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            line_no_ = i + 1;
            const auto line = trim(lines_[i]);
            if (line.empty()) {
                continue;
            }
            any_content = true;
            if (line.front() == '#') {
                continue;
            }
            handle(line);
        }
        if (!any_content) {
            throw ParseError(ParseErrorKind::EmptyInput, 0, "input contains no text");
        }
        if (!have_feature_) {
            throw ParseError(ParseErrorKind::NoFeatureHeader, line_no_, "missing 'Feature:' header");
        }
        if (!pending_tags_.empty()) {
            throw ParseError(ParseErrorKind::MisplacedTags, pending_tags_line_,
                             "tags at end of file are not followed by a scenario");
        }
        close_scenario();
        if (feature_.scenarios.empty()) {
            throw ParseError(ParseErrorKind::ScenarioWithoutSteps, line_no_,
                             "feature has no scenarios");
        }
        return std::move(feature_);
    }

private:
    void handle(std::string_view line) {
        for (auto header : kUnsupportedHeaders) {
            if (line.starts_with(header)) {
                fail(ParseErrorKind::Unsupported,
                     "'" + std::string(header) + "' is outside the supported Gherkin subset");
            }
        }
        if (line.starts_with("\"\"\"") || line.starts_with("```")) {
            fail(ParseErrorKind::Unsupported, "docstrings are not supported");
        }
        if (line.front() == '|') {
            fail(ParseErrorKind::Unsupported, "data tables are not supported");
        }
        if (line.front() == '@') {
            handle_tags(line);
            return;
        }
        if (auto name = match_header(line, "Feature:")) {
            handle_feature(*name);
            return;
        }
        if (auto name = match_header(line, "Scenario:")) {
            handle_scenario(*name);
            return;
        }
        for (const auto& [word, kw] : kStepKeywords) {
            if (auto text = match_word(line, word)) {
                handle_step(kw, *text);
                return;
            }
        }
        handle_text(line);
    }

    void handle_tags(std::string_view line) {
        if (pending_tags_.empty()) {
            pending_tags_line_ = line_no_;
        }
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && is_space(line[pos])) {
                ++pos;
            }
            if (pos >= line.size()) {
                break;
            }
            if (line[pos] == '#') {
                break;  // trailing comment
            }
            auto end = pos;
            while (end < line.size() && !is_space(line[end])) {
                ++end;
            }
            const auto token = line.substr(pos, end - pos);
            if (token.size() < 2 || token.front() != '@') {
                fail(ParseErrorKind::UnexpectedLine,
                     "malformed tag '" + std::string(token) + "'");
            }
            pending_tags_.emplace_back(token);
            pos = end;
        }
    }

    void handle_feature(std::string_view name) {
        if (have_feature_) {
            fail(ParseErrorKind::DuplicateFeature, "only one 'Feature:' is allowed per file");
        }
        if (name.empty()) {
            fail(ParseErrorKind::EmptyName, "feature name is empty");
        }
        have_feature_ = true;
        feature_.name = std::string(name);
        feature_.tags = std::exchange(pending_tags_, {});
    }

    void handle_scenario(std::string_view name) {
        if (!have_feature_) {
            fail(ParseErrorKind::NoFeatureHeader, "scenario appears before 'Feature:'");
        }
        if (name.empty()) {
            fail(ParseErrorKind::EmptyName, "scenario name is empty");
        }
        close_scenario();
        current_ = Scenario{std::string(name), std::exchange(pending_tags_, {}), {}};
        current_line_ = line_no_;
        last_primary_.reset();
    }

    void handle_step(Keyword kw, std::string_view text) {
        if (!pending_tags_.empty()) {
            fail(ParseErrorKind::MisplacedTags, "tags must be followed by a scenario");
        }
        if (!current_) {
            fail(ParseErrorKind::StepBeforeScenario, "step appears outside a scenario");
        }
        if (text.empty()) {
            fail(ParseErrorKind::EmptyStepText, "step has no text");
        }
        Keyword resolved = kw;
        if (kw == Keyword::And || kw == Keyword::But) {
            if (!last_primary_) {
                fail(ParseErrorKind::DanglingAnd,
                     std::string(to_string(kw)) + " step has no preceding Given/When/Then");
            }
            resolved = *last_primary_;
        } else {
            if (current_->steps.empty() && kw == Keyword::Then) {
                fail(ParseErrorKind::ScenarioStartsWithThen,
                     "a scenario must start with Given or When");
            }
            last_primary_ = kw;
        }
        current_->steps.push_back(Step{kw, resolved, std::string(text)});
    }

    void handle_text(std::string_view line) {
        if (!have_feature_) {
            fail(ParseErrorKind::NoFeatureHeader, "text before 'Feature:' header");
        }
        if (!pending_tags_.empty()) {
            fail(ParseErrorKind::MisplacedTags, "tags must be followed by a scenario");
        }
        if (current_ || !feature_.scenarios.empty()) {
            fail(ParseErrorKind::UnexpectedLine,
                 "expected a step or scenario, found '" + std::string(line.substr(0, 60)) + "'");
        }
        if (!feature_.description.empty()) {
            feature_.description.push_back('\n');
        }
        feature_.description.append(line);
    }

    void close_scenario() {
        if (!current_) {
            return;
        }
        if (current_->steps.empty()) {
            throw ParseError(ParseErrorKind::ScenarioWithoutSteps, current_line_,
                             "scenario '" + current_->name + "' has no steps");
        }
        feature_.scenarios.push_back(std::move(*current_));
        current_.reset();
    }

    [[noreturn]] void fail(ParseErrorKind kind, const std::string& detail) const {
        throw ParseError(kind, line_no_, detail);
    }

    std::vector<std::string_view> lines_;
    std::size_t line_no_ = 0;
    bool have_feature_ = false;
    Feature feature_;
    std::optional<Scenario> current_;
    std::size_t current_line_ = 0;
    std::optional<Keyword> last_primary_;
    std::vector<std::string> pending_tags_;
    std::size_t pending_tags_line_ = 0;
};

void append_tags(std::string& out, const std::vector<std::string>& tags, std::string_view indent) {
    if (tags.empty()) {
        return;
    }
    out.append(indent);
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        out.append(tags[i]);
    }
    out.push_back('\n');
}

}  // namespace

std::string_view to_string(Keyword kw) {
    switch (kw) {
        case Keyword::Given: return "Given";
        case Keyword::When: return "When";
        case Keyword::Then: return "Then";
        case Keyword::And: return "And";
        case Keyword::But: return "But";
    }
    return "?";
}

std::string_view to_string(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::EmptyInput: return "empty-input";
        case ParseErrorKind::NoFeatureHeader: return "no-feature-header";
        case ParseErrorKind::ScenarioWithoutSteps: return "scenario-without-steps";
        case ParseErrorKind::StepBeforeScenario: return "step-before-scenario";
        case ParseErrorKind::DanglingAnd: return "dangling-and";
        case ParseErrorKind::ScenarioStartsWithThen: return "scenario-starts-with-then";
        case ParseErrorKind::EmptyName: return "empty-name";
        case ParseErrorKind::EmptyStepText: return "empty-step-text";
        case ParseErrorKind::MisplacedTags: return "misplaced-tags";
        case ParseErrorKind::DuplicateFeature: return "duplicate-feature";
        case ParseErrorKind::UnexpectedLine: return "unexpected-line";
        case ParseErrorKind::Unsupported: return "unsupported";
    }
    return "?";
}

ParseError::ParseError(ParseErrorKind kind, std::size_t line, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) +
                         (line > 0 ? " at line " + std::to_string(line) : std::string()) + ": " +
                         detail),
      kind_(kind),
      line_(line) {}

Feature parse_feature(std::string_view source) {
    const auto text = normalize_newlines(source);
    return Parser(text).run();
}

std::string render_feature(const Feature& feature) {
    std::string out;
    append_tags(out, feature.tags, "");
    out += "Feature: " + feature.name + "\n";
    for (auto line : split_lines(feature.description)) {
        if (!line.empty()) {
            out += "  ";
            out.append(line);
            out.push_back('\n');
        }
    }
    for (const auto& scenario : feature.scenarios) {
        out.push_back('\n');
        append_tags(out, scenario.tags, "  ");
        out += "  Scenario: " + scenario.name + "\n";
        for (const auto& step : scenario.steps) {
            out += "    ";
            out.append(to_string(step.keyword));
            out += " " + step.text + "\n";
        }
    }
    return out;
}

ScenarioStats scenario_stats(const Feature& feature) {
    ScenarioStats stats;
    stats.scenario_count = feature.scenarios.size();
    for (const auto& scenario : feature.scenarios) {
        stats.step_count += scenario.steps.size();
        for (const auto& step : scenario.steps) {
            ++stats.steps_by_resolved_keyword[step.resolved_keyword];
        }
    }
    return stats;
}

}  // namespace covjudge::gherkin
