#include "covjudge/prompt.hpp"

#include "covjudge/digest.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace covjudge {

using nlohmann::json;

namespace {

constexpr std::string_view kSystemTemplate =
    "You are a senior QA engineer specializing in behavior-driven development and test coverage "
    "analysis. Your task is to analyze how well a set of Gherkin-style acceptance tests cover the "
    "requirements of a given Jira story, based on a defined set of testing guidelines. Provide a "
    "coverage percentage, highlight what's covered, identify gaps or missing scenarios, and "
    "recommend improvements if needed. Use the following rubric for your assessment:\n"
    "{four_dimensional_weighted_rubric}";

constexpr std::string_view kUserTemplate =
    "Below is a Jira story, a set of Gherkin acceptance tests,\n"
    "and standard testing guidelines. Analyze how well the\n"
    "Gherkin tests cover the story based on the guidelines.\n"
    "Jira Story:\n"
    "  ID: \"{jira_id}\"\n"
    "  Title: \"{jira_title}\"\n"
    "  Description: \"{jira_description}\"\n"
    "Gherkin Test Cases:\n"
    "  {gherkin_tests}\n"
    "Standard Guidelines:\n"
    "  {guidelines}\n"
    "Output format (strict JSON):\n"
    "  {example_output}\n";

struct Slot {
    std::string_view name;
    std::string_view value;
};

// Single left-to-right pass: substituted values are copied verbatim and never
// rescanned, so slot names inside ticket text stay literal.
std::string substitute(std::string_view tmpl, std::initializer_list<Slot> slots) {
    std::string out;
    out.reserve(tmpl.size() * 2);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            bool matched = false;
            for (const auto& slot : slots) {
                const auto token_len = slot.name.size() + 2;
                if (tmpl.size() - i >= token_len && tmpl.compare(i + 1, slot.name.size(), slot.name) == 0 &&
                    tmpl[i + 1 + slot.name.size()] == '}') {
                    out.append(slot.value);
                    i += token_len;
                    matched = true;
                    break;
                }
            }
            if (matched) {
                continue;
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::string format_percent(double weight) {
    const double pct = weight * 100.0;
    std::ostringstream out;
    if (std::abs(pct - std::round(pct)) < 1e-9) {
        out << static_cast<long long>(std::llround(pct));
    } else {
        out.precision(2);
        out << std::fixed << pct;
        auto s = out.str();
        while (s.back() == '0') {
            s.pop_back();
        }
        return s;
    }
    return out.str();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out.append(sep);
        }
        out.append(parts[i]);
    }
    return out;
}

void append_section(std::string& out, std::string_view label, const std::vector<std::string>& entries) {
    if (entries.empty()) {
        return;
    }
    out += "\n\n";
    out.append(label);
    out += ":";
    for (const auto& e : entries) {
        out += "\n- " + e;
    }
}

std::string describe_ticket(const JiraTicket& ticket) {
    std::string out = ticket.description;
    append_section(out, "Acceptance Criteria", ticket.acceptance_criteria);
    append_section(out, "Success Scenarios", ticket.success_scenarios);
    append_section(out, "Error Scenarios", ticket.error_scenarios);
    return out;
}

void require_nonempty(std::string_view value, std::string_view field) {
    if (value.empty()) {
        throw PromptError(PromptErrorKind::MissingField, std::string(field) + " is empty");
    }
}

}  // namespace

std::string_view to_string(PromptErrorKind kind) {
    switch (kind) {
        case PromptErrorKind::MissingField: return "missing-field";
        case PromptErrorKind::UnknownMethod: return "unknown-method";
        case PromptErrorKind::InvalidRubric: return "invalid-rubric";
        case PromptErrorKind::InvalidGuidelines: return "invalid-guidelines";
        case PromptErrorKind::Config: return "config-error";
    }
    return "?";
}

PromptError::PromptError(PromptErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

Rubric::Rubric(std::vector<RubricDimension> dimensions) : dimensions_(std::move(dimensions)) {
    if (dimensions_.empty()) {
        throw PromptError(PromptErrorKind::InvalidRubric, "rubric has no dimensions");
    }
    double total = 0.0;
    for (const auto& d : dimensions_) {
        if (d.key.empty() || d.name.empty()) {
            throw PromptError(PromptErrorKind::InvalidRubric, "dimension key and name are required");
        }
        if (!(d.weight >= 0.0 && d.weight <= 1.0)) {
            throw PromptError(PromptErrorKind::InvalidRubric,
                              "weight of '" + d.name + "' outside [0, 1]");
        }
        total += d.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw PromptError(PromptErrorKind::InvalidRubric, "weights sum to " + std::to_string(total));
    }
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        for (std::size_t j = i + 1; j < dimensions_.size(); ++j) {
            if (dimensions_[i].key == dimensions_[j].key) {
                throw PromptError(PromptErrorKind::InvalidRubric,
                                  "duplicate dimension key '" + dimensions_[i].key + "'");
            }
        }
    }
}

bool Rubric::has_key(std::string_view key) const {
    for (const auto& d : dimensions_) {
        if (d.key == key) {
            return true;
        }
    }
    return false;
}

Rubric default_rubric() {
    return Rubric({
        {"scenario_completeness", "Scenario completeness", 0.4,
         "coverage of happy path, error conditions, edge cases"},
        {"acceptance_alignment", "Acceptance criteria alignment", 0.3,
         "explicit validation of specified requirements"},
        {"method_concerns", "HTTP method-specific concerns", 0.2,
         "appropriate handling of idempotency, caching, state changes"},
        {"assertion_quality", "Assertion quality", 0.1,
         "depth and specificity of validation steps"},
    });
}

Guidelines::Guidelines(std::map<HttpMethod, std::vector<std::string>> per_method)
    : per_method_(std::move(per_method)) {
    for (const auto& [method, entries] : per_method_) {
        if (entries.empty()) {
            throw PromptError(PromptErrorKind::InvalidGuidelines,
                              "no expectations listed for " + std::string(to_string(method)));
        }
    }
}

Guidelines default_guidelines() {
    return Guidelines({
        {HttpMethod::Get,
         {"Valid requests", "empty responses", "pagination", "query parameters",
          "authorization (401/403)", "rate limiting", "caching headers"}},
        {HttpMethod::Post,
         {"Valid/invalid payloads", "duplicates", "validation", "large payloads",
          "error handling (500)"}},
        {HttpMethod::Put,
         {"Valid updates", "partial updates", "non-existent resources", "concurrency"}},
        {HttpMethod::Delete,
         {"Valid deletion", "non-existent resources", "soft deletes", "concurrency"}},
    });
}

const std::vector<std::string>& select_guidelines(HttpMethod method, const Guidelines& guidelines) {
    const auto it = guidelines.per_method().find(method);
    if (it == guidelines.per_method().end()) {
        throw PromptError(PromptErrorKind::UnknownMethod,
                          "no guidelines configured for " + std::string(to_string(method)));
    }
    return it->second;
}

const std::vector<std::string>& select_guidelines(std::string_view method,
                                                  const Guidelines& guidelines) {
    const auto parsed = parse_http_method(method);
    if (!parsed) {
        throw PromptError(PromptErrorKind::UnknownMethod,
                          "unsupported HTTP method '" + std::string(method) + "'");
    }
    return select_guidelines(*parsed, guidelines);
}

PromptConfig parse_prompt_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw PromptError(PromptErrorKind::Config, e.what());
    }
    if (!doc.is_object()) {
        throw PromptError(PromptErrorKind::Config, "prompt configuration must be an object");
    }
    PromptConfig config;
    try {
        if (const auto it = doc.find("rubric"); it != doc.end()) {
            std::vector<RubricDimension> dims;
            for (const auto& d : it->at("dimensions")) {
                dims.push_back({d.at("key").get<std::string>(), d.at("name").get<std::string>(),
                                d.at("weight").get<double>(),
                                d.value("description", std::string())});
            }
            config.rubric = Rubric(std::move(dims));
        }
        if (const auto it = doc.find("guidelines"); it != doc.end()) {
            std::map<HttpMethod, std::vector<std::string>> per_method;
            for (const auto& [name, entries] : it->items()) {
                const auto method = parse_http_method(name);
                if (!method) {
                    throw PromptError(PromptErrorKind::UnknownMethod,
                                      "unsupported HTTP method '" + name + "'");
                }
                per_method[*method] = entries.get<std::vector<std::string>>();
            }
            config.guidelines = Guidelines(std::move(per_method));
        }
    } catch (const json::exception& e) {
        throw PromptError(PromptErrorKind::Config, e.what());
    }
    return config;
}

PromptConfig load_prompt_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw PromptError(PromptErrorKind::Config, "cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_prompt_config(buf.str());
}

std::string prompt_config_to_json(const PromptConfig& config) {
    nlohmann::ordered_json doc;
    auto& dims = doc["rubric"]["dimensions"] = nlohmann::ordered_json::array();
    for (const auto& d : config.rubric.dimensions()) {
        dims.push_back({{"key", d.key}, {"name", d.name}, {"weight", d.weight},
                        {"description", d.description}});
    }
    auto& guidelines = doc["guidelines"] = nlohmann::ordered_json::object();
    for (const auto& [method, entries] : config.guidelines.per_method()) {
        guidelines[std::string(to_string(method))] = entries;
    }
    return doc.dump(2) + "\n";
}

std::string render_rubric(const Rubric& rubric) {
    std::string out;
    for (const auto& d : rubric.dimensions()) {
        out += "- " + d.name + " (" + format_percent(d.weight) + "%) [" + d.key + "]";
        if (!d.description.empty()) {
            out += ": " + d.description;
        }
        out += "\n";
    }
    out +=
        "Score each dimension from 0 to 10, combine the scores with the weights above, and report "
        "the weighted total scaled to 0-100 as coverage_percentage. In rubric_flags, set each "
        "bracketed dimension key to true when the tests adequately address that dimension.";
    return out;
}

std::string render_system_prompt(const Rubric& rubric) {
    const auto rendered = render_rubric(rubric);
    return substitute(kSystemTemplate, {{"four_dimensional_weighted_rubric", rendered}});
}

std::string default_example_output(const Rubric& rubric) {
    nlohmann::ordered_json doc;
    doc["coverage_percentage"] = 85;
    doc["covered"] = {"Successful request returns the expected resource"};
    doc["gaps"] = {"No scenario for unauthorized access (401/403)"};
    doc["recommendations"] = {"Add a scenario asserting the 401 response for missing credentials"};
    auto& flags = doc["rubric_flags"] = nlohmann::ordered_json::object();
    for (const auto& d : rubric.dimensions()) {
        flags[d.key] = true;
    }
    return doc.dump(2);
}

std::string render_user_prompt(const JiraTicket& ticket, std::string_view gherkin_source,
                               const Guidelines& guidelines, std::string_view example_output) {
    require_nonempty(ticket.id, "ticket id");
    require_nonempty(ticket.title, "ticket title");
    require_nonempty(ticket.description, "ticket description");
    require_nonempty(gherkin_source, "gherkin source");
    require_nonempty(example_output, "example output");

    const auto& selected = select_guidelines(ticket.http_method, guidelines);
    const auto guideline_text = std::string(to_string(ticket.http_method)) + ": " + join(selected, ", ");
    const auto description = describe_ticket(ticket);
    return substitute(kUserTemplate, {{"jira_id", ticket.id},
                                      {"jira_title", ticket.title},
                                      {"jira_description", description},
                                      {"gherkin_tests", gherkin_source},
                                      {"guidelines", guideline_text},
                                      {"example_output", example_output}});
}

std::string PromptPair::digest() const {
    Sha256 h;
    h.update(system_text).update(user_text);
    return h.hex_digest();
}

PromptPair build_prompt(const CorpusItem& item, const PromptConfig& config) {
    return {render_system_prompt(config.rubric),
            render_user_prompt(item.ticket, item.gherkin_source, config.guidelines,
                               default_example_output(config.rubric))};
}

}  // namespace covjudge
