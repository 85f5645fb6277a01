#include "covjudge/prompt.hpp"

#include "covjudge/judge.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace covjudge;

namespace {

PromptErrorKind prompt_error(auto&& fn) {
    try {
        fn();
    } catch (const PromptError& e) {
        return e.kind();
    }
    FAIL("expected a prompt error");
    return PromptErrorKind::Config;
}

bool contains(const std::string& haystack, std::string_view needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("prompt") {

TEST_CASE("default rubric") {
    const auto r = default_rubric();
    REQUIRE(r.dimensions().size() == 4);
    CHECK(r.dimensions()[0].weight == doctest::Approx(0.4));
    CHECK(r.dimensions()[1].weight == doctest::Approx(0.3));
    CHECK(r.dimensions()[2].weight == doctest::Approx(0.2));
    CHECK(r.dimensions()[3].weight == doctest::Approx(0.1));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r.dimensions()[i].key == kDimensionKeys[i]);
    }
}

TEST_CASE("rubric validation") {
    auto dim = [](std::string key, double w) { return RubricDimension{key, key, w, "d"}; };
    CHECK(prompt_error([&] { Rubric({dim("a", 0.5), dim("b", 0.4)}); }) == PromptErrorKind::InvalidRubric);
    CHECK(prompt_error([&] { Rubric({dim("a", 1.5), dim("b", -0.5)}); }) == PromptErrorKind::InvalidRubric);
    CHECK(prompt_error([&] { Rubric({dim("a", 0.5), dim("a", 0.5)}); }) == PromptErrorKind::InvalidRubric);
    CHECK(prompt_error([&] { Rubric({}); }) == PromptErrorKind::InvalidRubric);
    CHECK_NOTHROW(Rubric({dim("a", 0.1), dim("b", 0.2), dim("c", 0.7)}));
}

TEST_CASE("system prompt") {
    const auto text = render_system_prompt(default_rubric());
    CHECK(text.starts_with("You are a senior QA engineer specializing in behavior-driven development"));
    CHECK(contains(text, "Scenario completeness (40%)"));
    CHECK(contains(text, "Acceptance criteria alignment (30%)"));
    CHECK(contains(text, "HTTP method-specific concerns (20%)"));
    CHECK(contains(text, "Assertion quality (10%)"));
    CHECK_FALSE(contains(text, "{four_dimensional_weighted_rubric}"));
    CHECK(text == render_system_prompt(default_rubric()));
}

TEST_CASE("user prompt slots") {
    auto ticket = testsupport::sample_ticket("KB-42");
    const auto feature = testsupport::minimal_feature();
    const auto example = default_example_output(default_rubric());
    const auto text = render_user_prompt(ticket, feature, default_guidelines(), example);
    CHECK(contains(text, "ID: \"KB-42\"\n"));
    CHECK(contains(text, "Title: \"Ticket KB-42\""));
    CHECK(contains(text, "pagination"));
    CHECK(contains(text, "caching headers"));
    CHECK_FALSE(contains(text, "soft deletes"));
    CHECK(contains(text, feature));
    CHECK(contains(text, example));
    CHECK(contains(text, "criterion two"));
    CHECK(contains(text, "it fails cleanly"));
    CHECK(text == render_user_prompt(ticket, feature, default_guidelines(), example));

    ticket.http_method = HttpMethod::Delete;
    const auto del = render_user_prompt(ticket, feature, default_guidelines(), example);
    CHECK(contains(del, "soft deletes"));
    CHECK_FALSE(contains(del, "pagination"));
}

TEST_CASE("user prompt missing fields") {
    auto ticket = testsupport::sample_ticket("KB-1");
    ticket.title.clear();
    CHECK(prompt_error([&] { render_user_prompt(ticket, "Feature: x", default_guidelines(), "{}"); }) ==
          PromptErrorKind::MissingField);
    ticket = testsupport::sample_ticket("KB-1");
    CHECK(prompt_error([&] { render_user_prompt(ticket, "", default_guidelines(), "{}"); }) ==
          PromptErrorKind::MissingField);
}

TEST_CASE("substitution is single pass") {
    auto ticket = testsupport::sample_ticket("KB-7");
    ticket.title = "Inject {gherkin_tests} and {jira_id} {{";
    ticket.description = "{example_output} stays literal }";
    const auto text = render_user_prompt(ticket, "Feature: G", default_guidelines(), "EXAMPLE");
    CHECK(contains(text, "Title: \"Inject {gherkin_tests} and {jira_id} {{\""));
    CHECK(contains(text, "{example_output} stays literal }"));
    CHECK(text.find("EXAMPLE") == text.rfind("EXAMPLE"));
    CHECK(text.find("Feature: G") == text.rfind("Feature: G"));
}

TEST_CASE("select_guidelines") {
    const auto g = default_guidelines();
    const auto& get = select_guidelines(HttpMethod::Get, g);
    CHECK(std::find(get.begin(), get.end(), "rate limiting") != get.end());
    CHECK(std::find(get.begin(), get.end(), "caching headers") != get.end());
    const auto& del = select_guidelines("DELETE", g);
    CHECK(std::find(del.begin(), del.end(), "soft deletes") != del.end());
    CHECK(prompt_error([&] { select_guidelines("PATCH", g); }) == PromptErrorKind::UnknownMethod);
    CHECK(prompt_error([&] { select_guidelines("get", g); }) == PromptErrorKind::UnknownMethod);

    const Guidelines partial({{HttpMethod::Get, {"x"}}});
    CHECK(prompt_error([&] { select_guidelines(HttpMethod::Put, partial); }) == PromptErrorKind::UnknownMethod);
    CHECK(prompt_error([&] { Guidelines(std::map<HttpMethod, std::vector<std::string>>{{HttpMethod::Get, {}}}); }) == PromptErrorKind::InvalidGuidelines);
}

TEST_CASE("example output is a valid verdict") {
    const auto rubric = default_rubric();
    const auto v = parse_verdict(default_example_output(rubric), rubric);
    CHECK(v.coverage_percentage == 85.0);
    CHECK(v.covered.size() == 1);
    CHECK(v.gaps.size() == 1);
    CHECK(v.recommendations.size() == 1);
    CHECK(v.rubric_flags.size() == 4);
}

TEST_CASE("prompt config round trip and overrides") {
    const PromptConfig defaults;
    const auto json = prompt_config_to_json(defaults);
    const auto back = parse_prompt_config(json);
    CHECK(prompt_config_to_json(back) == json);

    const auto custom = parse_prompt_config(R"({"guidelines":{"GET":["only this"]}})");
    CHECK(select_guidelines(HttpMethod::Get, custom.guidelines) == std::vector<std::string>{"only this"});
    CHECK(custom.rubric.dimensions().size() == 4);

    CHECK(prompt_error([] { parse_prompt_config("{"); }) == PromptErrorKind::Config);
    CHECK(prompt_error([] { parse_prompt_config(R"({"guidelines":{"PATCH":["x"]}})"); }) ==
          PromptErrorKind::UnknownMethod);

    const auto shipped = load_prompt_config(testsupport::source_dir() / "config" / "prompt_defaults.json");
    CHECK(prompt_config_to_json(shipped) == json);
}

TEST_CASE("build_prompt digest") {
    const auto item = testsupport::sample_item("KB-1", 50);
    const PromptConfig config;
    const auto a = build_prompt(item, config);
    const auto b = build_prompt(item, config);
    CHECK(a.digest() == b.digest());
    CHECK(a.digest().size() == 64);
    CHECK(contains(a.user_text, item.gherkin_source));
    auto other = item;
    other.ticket.title += "!";
    CHECK(build_prompt(other, config).digest() != a.digest());
}

}  // TEST_SUITE
