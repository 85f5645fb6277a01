#include "support.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace testsupport {

using namespace covjudge;

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("covjudge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string minimal_feature() { return "Feature: F\n  Scenario: S\n    Given a\n    When b\n    Then c"; }

JiraTicket sample_ticket(const std::string& id, HttpMethod method) {
    JiraTicket t;
    t.id = id;
    t.title = "Ticket " + id;
    t.description = "Description of " + id;
    t.acceptance_criteria = {"criterion one", "criterion two"};
    t.success_scenarios = {"it works"};
    t.error_scenarios = {"it fails cleanly"};
    t.http_method = method;
    return t;
}

CorpusItem sample_item(const std::string& id, double truth, HttpMethod method) {
    CorpusItem item;
    item.ticket = sample_ticket(id, method);
    item.gherkin_source = minimal_feature() + "\n";
    item.ground_truth.ticket_id = id;
    item.ground_truth.normalized_score = truth;
    return item;
}

void write_item(const fs::path& root, const std::string& dir, const JiraTicket& ticket,
                const std::string& feature, const std::string& annotation) {
    nlohmann::json t{{"id", ticket.id},
                     {"title", ticket.title},
                     {"description", ticket.description},
                     {"acceptance_criteria", ticket.acceptance_criteria},
                     {"success_scenarios", ticket.success_scenarios},
                     {"error_scenarios", ticket.error_scenarios},
                     {"http_method", std::string(to_string(ticket.http_method))}};
    write_file(root / dir / "ticket.json", t.dump(2));
    write_file(root / dir / "script.feature", feature);
    write_file(root / dir / "annotation.json", annotation);
}

std::string annotation_json(const std::string& ticket_id, double a, double b, double c, double d) {
    nlohmann::json doc{{"ticket_id", ticket_id},
                       {"dimensions",
                        {{"scenario_completeness", a},
                         {"acceptance_alignment", b},
                         {"method_concerns", c},
                         {"assertion_quality", d}}},
                       {"normalized_score", 4 * a + 3 * b + 2 * c + d}};
    return doc.dump(2);
}

std::string annotation_json_score_only(const std::string& ticket_id, double score) {
    return nlohmann::json{{"ticket_id", ticket_id}, {"normalized_score", score}}.dump(2);
}

namespace {

const std::vector<std::string> kWords{
    "account", "invoice", "payment", "the",  "a",      "request", "returns", "200",   "404",
    "\"acme\"", "status", "should",  "be",   "créé",   "subscription", "tenant", "x=1", "<id>",
    "{slot}",  "ümlaut", "with",    "key",  "listed", "empty",   "page",    "2",     "日本",
};

std::string words(std::mt19937_64& rng, int lo, int hi) {
    std::uniform_int_distribution<int> count(lo, hi);
    std::uniform_int_distribution<std::size_t> pick(0, kWords.size() - 1);
    std::string out;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += kWords[pick(rng)];
    }
    return out;
}

std::vector<std::string> tags(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(0, 2);
    std::vector<std::string> out;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        out.push_back("@tag" + std::to_string(rng() % 50));
    }
    return out;
}

}  // namespace

gherkin::Feature random_feature(std::mt19937_64& rng) {
    using gherkin::Keyword;
    gherkin::Feature f;
    f.name = words(rng, 1, 5);
    f.tags = tags(rng);
    const int desc_lines = static_cast<int>(rng() % 3);
    for (int i = 0; i < desc_lines; ++i) {
        if (i > 0) {
            f.description += '\n';
        }
        f.description += "so that " + words(rng, 1, 6);
    }
    const int scenarios = 1 + static_cast<int>(rng() % 5);
    for (int s = 0; s < scenarios; ++s) {
        gherkin::Scenario sc;
        sc.name = words(rng, 1, 5);
        sc.tags = tags(rng);
        const int steps = 1 + static_cast<int>(rng() % 7);
        Keyword primary = Keyword::Given;
        for (int i = 0; i < steps; ++i) {
            gherkin::Step st;
            if (i == 0) {
                st.keyword = (rng() % 2) ? Keyword::Given : Keyword::When;
            } else {
                constexpr Keyword kAll[] = {Keyword::Given, Keyword::When, Keyword::Then, Keyword::And,
                                            Keyword::But};
                st.keyword = kAll[rng() % 5];
            }
            if (st.keyword != Keyword::And && st.keyword != Keyword::But) {
                primary = st.keyword;
            }
            st.resolved_keyword = primary;
            st.text = words(rng, 1, 8);
            sc.steps.push_back(std::move(st));
        }
        f.scenarios.push_back(std::move(sc));
    }
    return f;
}

std::string fuzz_input(std::mt19937_64& rng) {
    static const std::vector<std::string> fragments{
        "Feature:", "Scenario:", "Given ", "When ", "Then ", "And ", "But ", "@tag ", "# c", "\n", "\r\n",
        "  ",       "\t",        "Examples:", "| a | b |", "\"\"\"", "Background:", "Scenario Outline:", "x",
    };
    std::string out;
    if (rng() % 2 == 0) {
        // A valid feature with a few byte-level mutations.
        out = covjudge::gherkin::render_feature(random_feature(rng));
        const auto edits = rng() % 4;
        for (std::size_t i = 0; i < edits && !out.empty(); ++i) {
            const auto pos = rng() % out.size();
            switch (rng() % 3) {
                case 0: out[pos] = static_cast<char>(rng() & 0xFF); break;
                case 1: out.erase(pos, 1 + rng() % 8); break;
                default: out.insert(pos, fragments[rng() % fragments.size()]); break;
            }
        }
        return out;
    }
    const auto len = rng() % 200;
    for (std::size_t i = 0; i < len; ++i) {
        if (rng() % 3 == 0) {
            out += fragments[rng() % fragments.size()];
        } else {
            out.push_back(static_cast<char>(rng() & 0xFF));
        }
    }
    return out;
}

EvaluationRecord random_record(std::mt19937_64& rng, const std::string& ticket_id, const std::string& config_id,
                               int run_index, double truth) {
    EvaluationRecord r;
    r.ticket_id = ticket_id;
    r.config_id = config_id;
    r.run_index = run_index;
    r.prompt_hash = std::string(64, 'a');
    constexpr AttemptStatus kFailures[] = {AttemptStatus::ParseError, AttemptStatus::SchemaError,
                                           AttemptStatus::Timeout, AttemptStatus::RateLimited,
                                           AttemptStatus::TransportError, AttemptStatus::ServerError};
    const int attempts = 1 + static_cast<int>(rng() % 4);
    const bool completes = rng() % 8 != 0;
    for (int i = 1; i <= attempts; ++i) {
        AttemptRecord a;
        a.index = i;
        const bool last = i == attempts;
        a.status = (last && completes) ? AttemptStatus::Success : kFailures[rng() % 6];
        a.prompt_tokens = static_cast<std::int64_t>(rng() % 3000);
        a.completion_tokens = static_cast<std::int64_t>(rng() % 1500);
        a.latency = std::chrono::milliseconds(rng() % 5000);
        r.attempts.push_back(a);
    }
    r.completed = completes;
    r.first_attempt_success = r.attempts.front().status == AttemptStatus::Success;
    if (completes) {
        JudgeVerdict v;
        const int noise = static_cast<int>(rng() % 21) - 10;
        v.coverage_percentage = std::clamp(truth + (rng() % 3 == 0 ? 0 : noise), 0.0, 100.0);
        v.covered = {"happy path"};
        r.verdict = v;
    }
    return r;
}

fs::path source_dir() { return fs::path(COVJUDGE_SOURCE_DIR); }

}  // namespace testsupport
