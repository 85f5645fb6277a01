#include "covjudge/gherkin.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace covjudge::gherkin;
using testsupport::minimal_feature;

namespace {

ParseErrorKind error_kind(std::string_view source) {
    try {
        parse_feature(source);
    } catch (const ParseError& e) {
        return e.kind();
    }
    FAIL("expected a parse error");
    return ParseErrorKind::UnexpectedLine;
}

std::size_t error_line(std::string_view source) {
    try {
        parse_feature(source);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_SUITE("gherkin") {

TEST_CASE("minimal feature") {
    const auto f = parse_feature(minimal_feature());
    CHECK(f.name == "F");
    REQUIRE(f.scenarios.size() == 1);
    CHECK(f.scenarios[0].name == "S");
    REQUIRE(f.scenarios[0].steps.size() == 3);
    CHECK(f.scenarios[0].steps[0].keyword == Keyword::Given);
    CHECK(f.scenarios[0].steps[1].text == "b");
    CHECK(f.scenarios[0].steps[2].resolved_keyword == Keyword::Then);
}

TEST_CASE("And inherits the preceding primary keyword") {
    const auto f = parse_feature(minimal_feature() + "\n    And d");
    const auto& step = f.scenarios[0].steps.at(3);
    CHECK(step.keyword == Keyword::And);
    CHECK(step.resolved_keyword == Keyword::Then);
    CHECK(step.text == "d");

    const auto g = parse_feature("Feature: F\n Scenario: S\n  Given a\n  But b\n  When c\n  And d\n");
    CHECK(g.scenarios[0].steps[1].resolved_keyword == Keyword::Given);
    CHECK(g.scenarios[0].steps[3].resolved_keyword == Keyword::When);
}

TEST_CASE("error kinds") {
    CHECK(error_kind("") == ParseErrorKind::EmptyInput);
    CHECK(error_kind("  \n\t\n") == ParseErrorKind::EmptyInput);
    CHECK(error_kind("Scenario: S\n  Given a") == ParseErrorKind::NoFeatureHeader);
    CHECK(error_kind("# only a comment") == ParseErrorKind::NoFeatureHeader);
    CHECK(error_kind("Feature: F\n  Scenario: S\n  Scenario: T\n    Given a") ==
          ParseErrorKind::ScenarioWithoutSteps);
    CHECK(error_kind("Feature: F") == ParseErrorKind::ScenarioWithoutSteps);
    CHECK(error_kind("Feature: F\n  Given a\n  Scenario: S\n    Given b") == ParseErrorKind::StepBeforeScenario);
    CHECK(error_kind("Feature: F\n  Scenario: S\n    And a") == ParseErrorKind::DanglingAnd);
    CHECK(error_kind("Feature: F\n  Scenario: S\n    But a") == ParseErrorKind::DanglingAnd);
    CHECK(error_kind("Feature: F\n  Scenario: S\n    Then a") == ParseErrorKind::ScenarioStartsWithThen);
    CHECK(error_kind("Feature:\n  Scenario: S\n    Given a") == ParseErrorKind::EmptyName);
    CHECK(error_kind("Feature: F\n  Scenario: S\n    Given") == ParseErrorKind::EmptyStepText);
    CHECK(error_kind("Feature: F\n  Scenario: S\n    Given a\n  @dangling") == ParseErrorKind::MisplacedTags);
    CHECK(error_kind("Feature: F\nFeature: G\n  Scenario: S\n    Given a") == ParseErrorKind::DuplicateFeature);
    CHECK(error_kind("Feature: F\n  Scenario: S\n    Given a\n  stray words") == ParseErrorKind::UnexpectedLine);
}

TEST_CASE("unsupported constructs are rejected") {
    const char* cases[] = {
        "Feature: F\n  Scenario Outline: S\n    Given <a>\n  Examples:\n    | a |\n    | 1 |",
        "Feature: F\n  Background:\n    Given a\n  Scenario: S\n    Given b",
        "Feature: F\n  Scenario: S\n    Given a\n      \"\"\"\n      doc\n      \"\"\"",
        "Feature: F\n  Scenario: S\n    Given a\n      | x | y |",
        "Feature: F\n  Rule: R\n  Scenario: S\n    Given a",
    };
    for (const char* c : cases) {
        CAPTURE(c);
        CHECK(error_kind(c) == ParseErrorKind::Unsupported);
    }
}

TEST_CASE("line numbers are 1-based") {
    CHECK(error_line("Feature: F\n  Scenario: S\n    And a") == 3);
    CHECK(error_line("\n\nFeature: F\n  Given a") == 4);
    CHECK(error_line("") == 0);
}

TEST_CASE("keywords are case-sensitive and need a word boundary") {
    CHECK(error_kind("Feature: F\n  Scenario: S\n    given a") == ParseErrorKind::UnexpectedLine);
    CHECK(error_kind("Feature: F\n  Scenario: S\n    Givena") == ParseErrorKind::UnexpectedLine);
}

TEST_CASE("CRLF input and comments") {
    const auto lf = parse_feature(minimal_feature());
    std::string crlf;
    for (char c : minimal_feature()) {
        if (c == '\n') {
            crlf += '\r';
        }
        crlf += c;
    }
    CHECK(parse_feature(crlf) == lf);
    CHECK(parse_feature("# header comment\nFeature: F\n  # note\n  Scenario: S\n    Given a\n    # c\n    When b\n    Then c") ==
          lf);
}

TEST_CASE("tags attach to the following scenario") {
    const auto f = parse_feature("@api\nFeature: F\n  @smoke @fast\n  Scenario: S\n    Given a\n  Scenario: T\n    When b");
    CHECK(f.tags == std::vector<std::string>{"@api"});
    CHECK(f.scenarios[0].tags == std::vector<std::string>{"@smoke", "@fast"});
    CHECK(f.scenarios[1].tags.empty());
}

TEST_CASE("description lines") {
    const auto f = parse_feature("Feature: F\n  As an operator\n  I want things\n\n  Scenario: S\n    Given a");
    CHECK(f.description == "As an operator\nI want things");
}

TEST_CASE("render: round trip and layout") {
    const auto f = parse_feature(minimal_feature());
    const auto text = render_feature(f);
    CHECK(parse_feature(text) == f);
    CHECK(text.back() == '\n');
    CHECK(text.find("    Given a\n") != std::string::npos);

    const auto two = parse_feature(minimal_feature() + "\n  Scenario: T\n    When x");
    const auto rendered = render_feature(two);
    const auto between = rendered.substr(rendered.find("Then c\n"), rendered.find("  Scenario: T") - rendered.find("Then c\n"));
    CHECK(between == "Then c\n\n");
    CHECK(rendered.find("\n\n\n") == std::string::npos);

    const auto tagged = parse_feature("Feature: F\n@smoke\nScenario: S\nGiven a");
    CHECK(render_feature(tagged).find("  @smoke\n  Scenario: S\n") != std::string::npos);

    const auto with_and = parse_feature(minimal_feature() + "\n    But d");
    CHECK(render_feature(with_and).find("    But d\n") != std::string::npos);
}

TEST_CASE("scenario_stats") {
    const auto s = scenario_stats(parse_feature(minimal_feature()));
    CHECK(s.scenario_count == 1);
    CHECK(s.step_count == 3);
    CHECK(s.steps_by_resolved_keyword.at(Keyword::Given) == 1);
    CHECK(s.steps_by_resolved_keyword.at(Keyword::When) == 1);
    CHECK(s.steps_by_resolved_keyword.at(Keyword::Then) == 1);

    std::string src = "Feature: Four by five\n";
    for (int i = 0; i < 4; ++i) {
        src += "  Scenario: S" + std::to_string(i) + "\n    Given a\n    And b\n    When c\n    Then d\n    But e\n";
    }
    const auto t = scenario_stats(parse_feature(src));
    CHECK(t.scenario_count == 4);
    CHECK(t.step_count == 20);
    CHECK(t.steps_by_resolved_keyword.at(Keyword::Given) == 8);
    CHECK(t.steps_by_resolved_keyword.at(Keyword::When) == 4);
    CHECK(t.steps_by_resolved_keyword.at(Keyword::Then) == 8);
}

TEST_CASE("property: generated features round-trip and keep keyword invariants") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        const auto f = testsupport::random_feature(rng);
        const auto text = render_feature(f);
        CAPTURE(text);
        const auto parsed = parse_feature(text);
        REQUIRE(parsed == f);
        CHECK(parse_feature(render_feature(parsed)) == parsed);
        const auto stats = scenario_stats(parsed);
        std::size_t sum = 0;
        for (const auto& [kw, n] : stats.steps_by_resolved_keyword) {
            CHECK(kw != Keyword::And);
            CHECK(kw != Keyword::But);
            sum += n;
        }
        CHECK(sum == stats.step_count);
    }
}

TEST_CASE("property: fuzz input yields a feature or a located diagnostic") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 2000; ++i) {
        const auto input = testsupport::fuzz_input(rng);
        try {
            const auto f = parse_feature(input);
            CHECK_FALSE(f.scenarios.empty());
        } catch (const ParseError& e) {
            const auto lines = static_cast<std::size_t>(std::count(input.begin(), input.end(), '\n')) + 1;
            CHECK(e.line() <= lines);
        }
    }
}

}  // TEST_SUITE
