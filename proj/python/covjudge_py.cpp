#include "covjudge/commands.hpp"
#include "covjudge/corpus.hpp"
#include "covjudge/gherkin.hpp"
#include "covjudge/judge.hpp"
#include "covjudge/ledger.hpp"
#include "covjudge/metrics.hpp"
#include "covjudge/prompt.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace covjudge;

namespace {

py::dict feature_to_dict(const gherkin::Feature& f) {
    py::list scenarios;
    for (const auto& s : f.scenarios) {
        py::list steps;
        for (const auto& st : s.steps) {
            steps.append(py::dict(py::arg("keyword") = std::string(gherkin::to_string(st.keyword)),
                                  py::arg("resolved_keyword") = std::string(gherkin::to_string(st.resolved_keyword)),
                                  py::arg("text") = st.text));
        }
        scenarios.append(py::dict(py::arg("name") = s.name, py::arg("tags") = s.tags, py::arg("steps") = steps));
    }
    return py::dict(py::arg("name") = f.name, py::arg("tags") = f.tags, py::arg("description") = f.description,
                    py::arg("scenarios") = scenarios);
}

py::dict item_to_dict(const CorpusItem& item) {
    py::dict d;
    d["ticket_id"] = item.ticket.id;
    d["title"] = item.ticket.title;
    d["http_method"] = std::string(to_string(item.ticket.http_method));
    d["normalized_score"] = item.ground_truth.normalized_score;
    return d;
}

const CorpusItem& item_or_throw(const Corpus& corpus, const std::string& ticket_id) {
    const auto* item = corpus.find(ticket_id);
    if (!item) {
        throw py::key_error("no corpus item '" + ticket_id + "'");
    }
    return *item;
}

py::dict aggregate_to_dict(const Aggregate& a) {
    return py::dict(py::arg("mean") = a.mean, py::arg("std") = a.std, py::arg("n") = a.n);
}

// Runs a subcommand and returns (exit code, stdout, stderr).
template <typename F>
py::tuple captured(F&& f) {
    std::ostringstream out, err;
    ExitCode code;
    {
        py::gil_scoped_release release;
        code = f(out, err);
    }
    return py::make_tuple(static_cast<int>(code), out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "LLM-as-a-judge scoring of Gherkin test coverage";
    m.attr("__version__") = std::string(kToolVersion);

    py::register_exception<gherkin::ParseError>(m, "GherkinParseError", PyExc_ValueError);
    py::register_exception<CorpusError>(m, "CorpusError", PyExc_ValueError);
    py::register_exception<VerdictError>(m, "VerdictError", PyExc_ValueError);
    py::register_exception<MetricsError>(m, "MetricsError", PyExc_ValueError);
    py::register_exception<LedgerError>(m, "LedgerError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);

    // gherkin
    m.def("parse_feature", [](const std::string& text) { return feature_to_dict(gherkin::parse_feature(text)); },
          py::arg("text"));
    m.def("canonicalize_feature",
          [](const std::string& text) { return gherkin::render_feature(gherkin::parse_feature(text)); },
          py::arg("text"), "Parse and re-render in canonical layout.");
    m.def(
        "scenario_stats",
        [](const std::string& text) {
            const auto s = gherkin::scenario_stats(gherkin::parse_feature(text));
            py::dict by_kw;
            for (const auto& [kw, n] : s.steps_by_resolved_keyword) {
                by_kw[py::str(std::string(gherkin::to_string(kw)))] = n;
            }
            return py::dict(py::arg("scenario_count") = s.scenario_count, py::arg("step_count") = s.step_count,
                            py::arg("steps_by_keyword") = by_kw);
        },
        py::arg("text"));

    // corpus
    m.def(
        "ground_truth_score",
        [](double completeness, double alignment, double method, double assertions) {
            return ground_truth_score({completeness, alignment, method, assertions});
        },
        py::arg("scenario_completeness"), py::arg("acceptance_alignment"), py::arg("method_concerns"),
        py::arg("assertion_quality"));
    m.def(
        "load_corpus",
        [](const std::filesystem::path& root) {
            const auto corpus = load_corpus(root);
            py::list items;
            for (const auto& item : corpus.items()) {
                items.append(item_to_dict(item));
            }
            return py::dict(py::arg("digest") = corpus.digest(), py::arg("items") = items);
        },
        py::arg("root"));
    m.def(
        "validate_corpus",
        [](const std::filesystem::path& root) {
            const auto report = validate_corpus(load_corpus(root));
            py::dict methods;
            for (const auto& [method, n] : report.method_counts) {
                methods[py::str(std::string(to_string(method)))] = n;
            }
            py::list failures;
            for (const auto& s : report.items) {
                if (!s.parses) {
                    failures.append(py::make_tuple(s.ticket_id, s.diagnostic));
                }
            }
            return py::dict(py::arg("method_counts") = methods, py::arg("parse_failures") = failures);
        },
        py::arg("root"));

    // prompt and verdict
    m.def(
        "build_prompt",
        [](const std::filesystem::path& corpus_root, const std::string& ticket_id,
           std::optional<std::filesystem::path> prompt_config) {
            const auto corpus = load_corpus(corpus_root);
            const auto config = prompt_config ? load_prompt_config(*prompt_config) : PromptConfig{};
            const auto p = build_prompt(item_or_throw(corpus, ticket_id), config);
            return py::dict(py::arg("system") = p.system_text, py::arg("user") = p.user_text,
                            py::arg("digest") = p.digest());
        },
        py::arg("corpus_root"), py::arg("ticket_id"), py::arg("prompt_config") = py::none());
    m.def(
        "parse_verdict",
        [](const std::string& raw) {
            const auto v = parse_verdict(raw, default_rubric());
            return py::dict(py::arg("coverage_percentage") = v.coverage_percentage, py::arg("covered") = v.covered,
                            py::arg("gaps") = v.gaps, py::arg("recommendations") = v.recommendations,
                            py::arg("rubric_flags") = v.rubric_flags);
        },
        py::arg("raw"));

    // metrics
    m.def(
        "compute_accuracy",
        [](const std::vector<double>& predictions, const std::vector<double>& truths) {
            const auto a = compute_accuracy(predictions, truths);
            return py::dict(py::arg("maae") = a.maae, py::arg("aps") = a.aps, py::arg("pmr") = a.pmr,
                            py::arg("cmr") = a.cmr, py::arg("n") = a.n);
        },
        py::arg("predictions"), py::arg("truths"));
    m.def("adjusted_cost", &adjusted_cost, py::arg("cost_per_1k"), py::arg("ecr_at_1"));
    m.def(
        "aggregate_runs", [](const std::vector<double>& values) { return aggregate_to_dict(aggregate_runs(values)); },
        py::arg("values"));
    m.def(
        "build_report",
        [](const std::filesystem::path& ledger_path, const std::filesystem::path& corpus_root) {
            const auto ledger = load_ledger(ledger_path);
            const auto corpus = load_corpus(corpus_root);
            py::dict out;
            for (const auto& c : build_report(ledger.entries, corpus, ledger.header.configs).configs) {
                py::dict metrics;
                for (auto metric : kAllMetrics) {
                    if (const auto a = c.get(metric)) {
                        metrics[py::str(std::string(metric_key(metric)))] = aggregate_to_dict(*a);
                    }
                }
                out[py::str(c.config_id)] = metrics;
            }
            return out;
        },
        py::arg("ledger"), py::arg("corpus_root"), "Per-config metric aggregates as nested dicts.");

    // project and compare
    m.def(
        "project_cost",
        [](double cost_per_1k, std::int64_t volume, std::optional<double> versus) {
            const auto p = project_cost(cost_per_1k, volume, versus);
            return py::dict(py::arg("monthly_usd") = p.monthly_usd, py::arg("annual_usd") = p.annual_usd,
                            py::arg("ratio") = p.ratio, py::arg("text") = projection_to_text(p));
        },
        py::arg("cost_per_1k"), py::arg("monthly_volume"), py::arg("versus") = py::none());
    m.def("format_usd", &format_usd, py::arg("amount"));
    m.def(
        "compare",
        [](const std::filesystem::path& report, const std::string& a, const std::string& b) {
            const auto c = compare_configs(load_report(report), a, b);
            return py::dict(py::arg("delta_maae_pp") = c.delta_maae_pp, py::arg("delta_ecr_pp") = c.delta_ecr_pp,
                            py::arg("delta_cost_usd") = c.delta_cost_usd,
                            py::arg("delta_cost_pct") = c.delta_cost_pct, py::arg("text") = comparison_to_text(c));
        },
        py::arg("report"), py::arg("a"), py::arg("b"));

    // subcommands: each returns (exit_code, stdout, stderr)
    m.def(
        "run",
        [](const std::filesystem::path& config, bool resume, std::optional<std::size_t> limit) {
            return captured([&](std::ostream& out, std::ostream& err) {
                return cmd_run(RunCommandOptions{config, resume, limit, true}, out, err);
            });
        },
        py::arg("config"), py::arg("resume") = false, py::arg("limit") = py::none());
    m.def(
        "report",
        [](const std::filesystem::path& ledger, const std::filesystem::path& corpus,
           std::optional<std::filesystem::path> csv, std::optional<std::filesystem::path> json) {
            return captured([&](std::ostream& out, std::ostream& err) {
                return cmd_report(ReportCommandOptions{ledger, corpus, csv, json}, out, err);
            });
        },
        py::arg("ledger"), py::arg("corpus"), py::arg("csv") = py::none(), py::arg("json") = py::none());
}
