#include "covjudge/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace covjudge;

int main(int argc, char** argv) {
    CLI::App app{"covjudge: score Gherkin test coverage with an LLM judge"};
    app.require_subcommand(1);

    RunCommandOptions run_opts;
    std::size_t limit = 0;
    auto* run = app.add_subcommand("run", "Evaluate every (ticket, config, run) triple into a ledger");
    run->add_option("--config", run_opts.config_path, "Run configuration (JSON)")->required();
    run->add_flag("--resume", run_opts.resume, "Continue an existing ledger");
    auto* limit_opt = run->add_option("--limit", limit, "Stop after this many new records")->check(CLI::PositiveNumber);
    run->add_flag("--quiet", run_opts.quiet, "Suppress progress output");

    ReportCommandOptions report_opts;
    std::string csv_path;
    std::string json_path;
    auto* report = app.add_subcommand("report", "Compute metrics from a ledger");
    report->add_option("--ledger", report_opts.ledger, "Ledger file")->required();
    report->add_option("--corpus", report_opts.corpus, "Corpus directory")->required();
    auto* csv_opt = report->add_option("--csv", csv_path, "Also write CSV here");
    auto* json_opt = report->add_option("--json", json_path, "Also write JSON here");

    double cost = 0.0;
    std::int64_t volume = 0;
    double versus = 0.0;
    auto* project = app.add_subcommand("project", "Project monthly and annual spend");
    project->add_option("--cost", cost, "Cost per 1K evaluations (USD)")->required();
    project->add_option("--volume", volume, "Evaluations per month")->required();
    auto* versus_opt = project->add_option("--versus", versus, "Cost per 1K of a configuration to compare against");

    std::string report_path;
    std::string config_a;
    std::string config_b;
    auto* compare = app.add_subcommand("compare", "Compare two configurations from a report JSON");
    compare->add_option("--report", report_path, "Report JSON written by `report --json`")->required();
    compare->add_option("--a", config_a, "Baseline config id")->required();
    compare->add_option("--b", config_b, "Candidate config id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
    }

    ExitCode rc = ExitCode::Ok;
    if (run->parsed()) {
        if (*limit_opt) {
            run_opts.limit = limit;
        }
        rc = cmd_run(run_opts, std::cout, std::cerr);
    } else if (report->parsed()) {
        if (*csv_opt) {
            report_opts.csv = csv_path;
        }
        if (*json_opt) {
            report_opts.json = json_path;
        }
        rc = cmd_report(report_opts, std::cout, std::cerr);
    } else if (project->parsed()) {
        rc = cmd_project(cost, volume, *versus_opt ? std::optional<double>(versus) : std::nullopt, std::cout,
                         std::cerr);
    } else if (compare->parsed()) {
        rc = cmd_compare(report_path, config_a, config_b, std::cout, std::cerr);
    }
    return static_cast<int>(rc);
}
