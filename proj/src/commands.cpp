#include "covjudge/commands.hpp"

#include "covjudge/ledger.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace covjudge {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Extracts the ticket id from the `ID: "<id>"` line of a rendered user prompt.
std::string prompt_ticket_id(const ChatRequest& request) {
    constexpr std::string_view marker = "  ID: \"";
    for (const auto& m : request.messages) {
        if (m.role != Role::User) {
            continue;
        }
        const auto pos = m.content.find(marker);
        if (pos == std::string::npos) {
            continue;
        }
        const auto start = pos + marker.size();
        const auto end = m.content.find("\"\n", start);
        if (end != std::string::npos) {
            return m.content.substr(start, end - start);
        }
    }
    return {};
}

std::string fmt_fixed(double v, int decimals) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(decimals) << v;
    auto s = out.str();
    if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) {
        s.erase(0, 1);  // no "-0.00"
    }
    return s;
}

std::string fmt_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_signed(double v, int decimals) {
    auto s = fmt_fixed(v, decimals);
    if (!s.starts_with("-") && s.find_first_not_of("0.") != std::string::npos) {
        s.insert(0, "+");
    }
    return s;
}

std::string with_thousands(const std::string& digits) {
    std::string out;
    const auto n = digits.size();
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[i]);
        const auto left = n - i - 1;
        if (left > 0 && left % 3 == 0) {
            out.push_back(',');
        }
    }
    return out;
}

struct Column {
    std::string title;
    Metric metric;
};

const std::vector<Column>& table_columns() {
    static const std::vector<Column> cols{
        {"MAAE (%)", Metric::Maae},          {"APS (%)", Metric::Aps},
        {"PMR (%)", Metric::Pmr},            {"CMR (%)", Metric::Cmr},
        {"ECR@1 (%)", Metric::EcrAt1},       {"Attempts", Metric::MeanAttempts},
        {"Cost ($/1K)", Metric::AdjustedCostPer1k},
    };
    return cols;
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(header.size(), 0);
    auto width_of = [](const std::string& s) {
        // Display width in code points; "±" is two bytes.
        std::size_t w = 0;
        for (unsigned char c : s) {
            w += (c & 0xC0) != 0x80 ? 1 : 0;
        }
        return w;
    };
    for (std::size_t c = 0; c < header.size(); ++c) {
        widths[c] = width_of(header[c]);
        for (const auto& r : rows) {
            widths[c] = std::max(widths[c], width_of(r[c]));
        }
    }
    auto emit = [&](const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto pad = widths[c] - width_of(cells[c]);
            if (c == 0) {
                line += cells[c] + std::string(pad, ' ');
            } else {
                line += "  " + std::string(pad, ' ') + cells[c];
            }
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        return line + "\n";
    };
    std::string out = emit(header);
    std::size_t total = 0;
    for (auto w : widths) {
        total += w + 2;
    }
    out += std::string(total - 2, '-') + "\n";
    for (const auto& r : rows) {
        out += emit(r);
    }
    return out;
}

}  // namespace

// --- configuration ----------------------------------------------------------

void RunConfig::validate() const {
    if (runs < 1) {
        throw ConfigError("runs must be at least 1 (got " + std::to_string(runs) + ")");
    }
    if (parallelism < 1) {
        throw ConfigError("parallelism must be at least 1 (got " + std::to_string(parallelism) + ")");
    }
    if (models.empty()) {
        throw ConfigError("at least one model configuration is required");
    }
    if (!retry.valid()) {
        throw ConfigError("invalid retry policy");
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            if (models[i].id == models[j].id) {
                throw ConfigError("duplicate model config id '" + models[i].id + "'");
            }
        }
    }
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    RunConfig c;
    try {
        c.corpus = resolve(base_dir, doc.at("corpus").get<std::string>());
        c.ledger = resolve(base_dir, doc.at("ledger").get<std::string>());
        c.runs = doc.value("runs", 5);
        c.parallelism = doc.value("parallelism", 1);
        c.seed = doc.value("seed", std::uint64_t{0});
        if (const auto it = doc.find("prompt_config"); it != doc.end() && !it->is_null()) {
            c.prompt_config = resolve(base_dir, it->get<std::string>());
        }
        if (const auto it = doc.find("retry"); it != doc.end()) {
            const auto& r = *it;
            c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
            c.retry.backoff_base = std::chrono::milliseconds(r.value("backoff_base_ms", c.retry.backoff_base.count()));
            c.retry.backoff_multiplier = r.value("backoff_multiplier", c.retry.backoff_multiplier);
            c.retry.backoff_cap = std::chrono::milliseconds(r.value("backoff_cap_ms", c.retry.backoff_cap.count()));
            if (const auto on = r.find("retry_on"); on != r.end()) {
                c.retry.retry_on.clear();
                for (const auto& s : *on) {
                    const auto status = parse_attempt_status(s.get<std::string>());
                    if (!status) {
                        throw ConfigError("unknown retry_on status '" + s.get<std::string>() + "'");
                    }
                    c.retry.retry_on.insert(*status);
                }
            }
        }
        for (const auto& m : doc.at("models")) {
            c.models.push_back(model_config_from_json(m));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    return parse_run_config(read_text(path), path.parent_path());
}

std::map<std::string, std::shared_ptr<Provider>> make_providers(const RunConfig& config,
                                                                const Corpus& corpus) {
    std::map<std::string, std::shared_ptr<Provider>> providers;
    std::shared_ptr<Provider> http;
    for (const auto& model : config.models) {
        if (model.family != ModelFamily::Mock) {
            resolve_auth(model);
            if (!http) {
                http = std::make_shared<HttpProvider>();
            }
            providers[model.id] = http;
            continue;
        }
        MockOptions opts;
        opts.seed = model.mock.seed.value_or(config.seed ^ fnv1a(model.id));
        opts.failure_rate = model.mock.failure_rate;
        opts.failure_kinds = model.mock.failure_kinds;
        opts.prompt_tokens = model.mock.prompt_tokens;
        opts.completion_tokens = model.mock.completion_tokens;
        opts.retry_after = model.mock.retry_after;
        const int noise = model.mock.score_noise;
        opts.responder = [&corpus, noise](const ChatRequest& request, std::mt19937_64& rng) {
            const auto* item = corpus.find(prompt_ticket_id(request));
            double score = item ? item->ground_truth.normalized_score : 50.0;
            if (noise > 0) {
                const auto span = static_cast<double>(2 * noise + 1);
                const auto offset = static_cast<int>(std::floor(unit_uniform(rng) * span)) - noise;
                score = std::clamp(std::round(score) + offset, 0.0, 100.0);
            }
            return mock_verdict(score);
        };
        providers[model.id] = make_mock(std::move(opts));
    }
    return providers;
}

// --- report -----------------------------------------------------------------

std::string format_mean_std(double mean, double std, int decimals) {
    return fmt_fixed(mean, decimals) + "±" + fmt_fixed(std, decimals);
}

int display_decimals(Metric metric) {
    switch (metric) {
        case Metric::Pmr:
        case Metric::Cmr:
        case Metric::EcrAt1:
            return 1;
        default:
            return 2;
    }
}

std::string report_to_text(const MetricsReport& report) {
    // Best mean per column; exact ties share the mark.
    std::map<Metric, double> best;
    for (const auto& col : table_columns()) {
        for (const auto& c : report.configs) {
            const auto a = c.get(col.metric);
            if (!a) {
                continue;
            }
            auto it = best.find(col.metric);
            if (it == best.end()) {
                best[col.metric] = a->mean;
            } else if (lower_is_better(col.metric) ? a->mean < it->second : a->mean > it->second) {
                it->second = a->mean;
            }
        }
    }

    std::vector<std::string> header{"Config"};
    for (const auto& col : table_columns()) {
        header.push_back(col.title);
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : report.configs) {
        std::vector<std::string> row{c.config_id};
        for (const auto& col : table_columns()) {
            const auto a = c.get(col.metric);
            if (!a) {
                row.emplace_back("n/a");
                continue;
            }
            auto cell = format_mean_std(a->mean, a->std, display_decimals(col.metric));
            cell += (best.contains(col.metric) && a->mean == best[col.metric]) ? "*" : " ";
            row.push_back(std::move(cell));
        }
        rows.push_back(std::move(row));
    }

    std::string out = render_table(header, rows);
    out += "\n";

    std::vector<std::string> cost_header{"Config", "Runs", "Evaluations", "Never completed",
                                         "Nominal ($/1K)", "Measured ($/1K)", "Adj. of means ($/1K)"};
    std::vector<std::vector<std::string>> cost_rows;
    for (const auto& c : report.configs) {
        auto cell = [&](Metric m) {
            const auto a = c.get(m);
            return a ? format_mean_std(a->mean, a->std, 2) : std::string("n/a");
        };
        cost_rows.push_back({c.config_id, std::to_string(c.runs), std::to_string(c.evaluations),
                             std::to_string(c.never_completed), cell(Metric::CostPer1k),
                             cell(Metric::MeasuredCostPer1k),
                             c.adjusted_cost_of_means ? fmt_fixed(*c.adjusted_cost_of_means, 2) : "n/a"});
    }
    out += render_table(cost_header, cost_rows);
    out +=
        "\nValues are mean±std (sample, n-1) over runs; * marks the best value per column.\n"
        "Cost is the adjusted cost per 1K evaluations: nominal x 100 / ECR@1, computed per run.\n"
        "Attempts = total API calls / completed evaluations; never-completed evaluations add calls "
        "but not completions.\n"
        "Accuracy metrics use completed evaluations only.\n";
    return out;
}

std::string report_to_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "config_id,runs,evaluations,never_completed";
    for (auto m : kAllMetrics) {
        out << ',' << metric_key(m) << "_mean," << metric_key(m) << "_std," << metric_key(m) << "_n";
    }
    out << ",adjusted_cost_per_1k_of_means\n";
    for (const auto& c : report.configs) {
        std::string id = c.config_id;
        if (id.find_first_of(",\"\n") != std::string::npos) {
            std::string quoted = "\"";
            for (char ch : id) {
                quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            }
            id = quoted + "\"";
        }
        out << id << ',' << c.runs << ',' << c.evaluations << ',' << c.never_completed;
        for (auto m : kAllMetrics) {
            if (const auto a = c.get(m)) {
                out << ',' << fmt_exact(a->mean) << ',' << fmt_exact(a->std) << ',' << a->n;
            } else {
                out << ",,,";
            }
        }
        out << ',' << (c.adjusted_cost_of_means ? fmt_exact(*c.adjusted_cost_of_means) : "") << '\n';
    }
    return out.str();
}

std::string report_to_json(const MetricsReport& report) {
    ojson doc{{"report", "covjudge-report"}, {"version", 1}};
    auto& configs = doc["configs"] = ojson::array();
    for (const auto& c : report.configs) {
        ojson metrics = ojson::object();
        for (auto m : kAllMetrics) {
            if (const auto a = c.get(m)) {
                metrics[std::string(metric_key(m))] = {{"mean", a->mean}, {"std", a->std}, {"n", a->n}};
            }
        }
        ojson per_run = ojson::array();
        for (const auto& rm : c.per_run) {
            ojson run{{"run", rm.run_index}};
            for (auto m : kAllMetrics) {
                const auto v = rm.get(m);
                run[std::string(metric_key(m))] = v ? ojson(*v) : ojson(nullptr);
            }
            per_run.push_back(std::move(run));
        }
        configs.push_back({{"id", c.config_id},
                           {"runs", c.runs},
                           {"evaluations", c.evaluations},
                           {"never_completed", c.never_completed},
                           {"metrics", metrics},
                           {"adjusted_cost_per_1k_of_means",
                            c.adjusted_cost_of_means ? ojson(*c.adjusted_cost_of_means) : ojson(nullptr)},
                           {"per_run", per_run}});
    }
    return doc.dump(2) + "\n";
}

MetricsReport report_from_json(std::string_view json_text) {
    MetricsReport report;
    try {
        const auto doc = json::parse(json_text);
        for (const auto& c : doc.at("configs")) {
            ConfigMetrics cm;
            cm.config_id = c.at("id").get<std::string>();
            cm.runs = c.value("runs", std::size_t{0});
            cm.evaluations = c.value("evaluations", std::size_t{0});
            cm.never_completed = c.value("never_completed", std::size_t{0});
            for (const auto& [key, value] : c.at("metrics").items()) {
                const auto m = parse_metric_key(key);
                if (!m) {
                    continue;
                }
                cm.aggregates[static_cast<std::size_t>(*m)] =
                    Aggregate{value.at("mean").get<double>(), value.value("std", 0.0),
                              value.value("n", cm.runs)};
            }
            if (const auto it = c.find("adjusted_cost_per_1k_of_means"); it != c.end() && !it->is_null()) {
                cm.adjusted_cost_of_means = it->get<double>();
            }
            if (const auto it = c.find("per_run"); it != c.end()) {
                for (const auto& r : *it) {
                    RunMetrics rm;
                    rm.run_index = r.at("run").get<int>();
                    for (auto m : kAllMetrics) {
                        const auto v = r.find(std::string(metric_key(m)));
                        if (v != r.end() && !v->is_null()) {
                            rm.values[static_cast<std::size_t>(m)] = v->get<double>();
                        }
                    }
                    cm.per_run.push_back(rm);
                }
            }
            report.configs.push_back(std::move(cm));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("report document: ") + e.what());
    }
    return report;
}

MetricsReport load_report(const fs::path& path) { return report_from_json(read_text(path)); }

// --- project ----------------------------------------------------------------

Projection project_cost(double cost_per_1k, std::int64_t monthly_volume, std::optional<double> versus) {
    if (!(cost_per_1k > 0.0) || monthly_volume <= 0 || (versus && !(*versus > 0.0))) {
        throw std::invalid_argument("cost, volume and comparison cost must be positive");
    }
    Projection p;
    p.monthly_usd = cost_per_1k * static_cast<double>(monthly_volume) / 1000.0;
    p.annual_usd = p.monthly_usd * 12.0;
    if (versus) {
        p.ratio = *versus / cost_per_1k;
    }
    return p;
}

std::string format_usd(double amount) {
    const auto cents = std::llround(amount * 100.0);
    const auto sign = cents < 0 ? "-" : "";
    const auto abs_cents = cents < 0 ? -cents : cents;
    auto out = std::string(sign) + "$" + with_thousands(std::to_string(abs_cents / 100));
    if (abs_cents % 100 != 0) {
        char frac[4];
        std::snprintf(frac, sizeof frac, "%02lld", static_cast<long long>(abs_cents % 100));
        out += ".";
        out += frac;
    }
    return out;
}

std::string format_ratio(double ratio) { return std::to_string(std::llround(ratio)) + "×"; }

std::string projection_to_text(const Projection& p) {
    std::string out = "Monthly cost: " + format_usd(p.monthly_usd) + "\n";
    out += "Annual cost:  " + format_usd(p.annual_usd) + "\n";
    if (p.ratio) {
        out += "Comparison:   " + format_ratio(*p.ratio) + " (" + fmt_fixed(*p.ratio, 2) + ")\n";
    }
    return out;
}

// --- compare ----------------------------------------------------------------

Comparison compare_configs(const MetricsReport& report, std::string_view config_a, std::string_view config_b) {
    const auto* a = report.find(config_a);
    const auto* b = report.find(config_b);
    if (a == nullptr) {
        throw std::out_of_range("unknown config '" + std::string(config_a) + "'");
    }
    if (b == nullptr) {
        throw std::out_of_range("unknown config '" + std::string(config_b) + "'");
    }
    auto mean_of = [](const ConfigMetrics& c, Metric m) {
        const auto v = c.get(m);
        if (!v) {
            throw std::out_of_range("config '" + c.config_id + "' has no " + std::string(metric_key(m)));
        }
        return v->mean;
    };
    Comparison cmp;
    cmp.config_a = a->config_id;
    cmp.config_b = b->config_id;
    cmp.maae_a = mean_of(*a, Metric::Maae);
    cmp.maae_b = mean_of(*b, Metric::Maae);
    cmp.delta_maae_pp = cmp.maae_b - cmp.maae_a;
    cmp.ecr_a = mean_of(*a, Metric::EcrAt1);
    cmp.ecr_b = mean_of(*b, Metric::EcrAt1);
    cmp.delta_ecr_pp = cmp.ecr_b - cmp.ecr_a;
    cmp.cost_a = mean_of(*a, Metric::AdjustedCostPer1k);
    cmp.cost_b = mean_of(*b, Metric::AdjustedCostPer1k);
    cmp.delta_cost_usd = cmp.cost_b - cmp.cost_a;
    if (cmp.cost_b < cmp.cost_a) {
        cmp.delta_cost_pct = -100.0 * (cmp.cost_a - cmp.cost_b) / std::max(cmp.cost_a, cmp.cost_b);
    } else if (cmp.cost_b > cmp.cost_a) {
        cmp.delta_cost_pct = 100.0 * (cmp.cost_b - cmp.cost_a) / std::min(cmp.cost_a, cmp.cost_b);
    }
    return cmp;
}

std::string comparison_to_text(const Comparison& c) {
    std::ostringstream out;
    out << c.config_a << " -> " << c.config_b << "\n";
    out << "  MAAE:  " << fmt_signed(c.delta_maae_pp, 2) << " pp (" << fmt_fixed(c.maae_a, 2) << " -> "
        << fmt_fixed(c.maae_b, 2) << ", " << (c.delta_maae_pp > 0 ? "less accurate" : c.delta_maae_pp < 0 ? "more accurate" : "unchanged")
        << ")\n";
    out << "  ECR@1: " << fmt_signed(c.delta_ecr_pp, 1) << " pp (" << fmt_fixed(c.ecr_a, 1) << " -> "
        << fmt_fixed(c.ecr_b, 1) << ")\n";
    const char* direction = c.delta_cost_usd < 0 ? "savings" : c.delta_cost_usd > 0 ? "increase" : "unchanged";
    out << "  Cost:  " << fmt_signed(c.delta_cost_pct, 1) << "% " << direction << " (" << format_usd(c.cost_a)
        << " -> " << format_usd(c.cost_b) << " per 1K, " << (c.delta_cost_usd < 0 ? "-" : c.delta_cost_usd > 0 ? "+" : "")
        << format_usd(std::abs(c.delta_cost_usd)) << ")\n";
    return out.str();
}

// --- subcommands --------------------------------------------------------------

ExitCode cmd_run(const RunCommandOptions& options, std::ostream& out, std::ostream& err) {
    RunConfig config;
    PromptConfig prompts;
    try {
        config = load_run_config(options.config_path);
        if (config.prompt_config) {
            prompts = load_prompt_config(*config.prompt_config);
        }
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return ExitCode::Usage;
    }

    Corpus corpus;
    try {
        corpus = load_corpus(config.corpus);
    } catch (const std::exception& e) {
        err << "corpus error: " << e.what() << "\n";
        return ExitCode::Data;
    }
    const auto validation = validate_corpus(corpus);
    if (validation.parse_failures() > 0) {
        for (const auto& s : validation.items) {
            if (!s.parses) {
                err << "corpus error: " << s.ticket_id << ": " << s.diagnostic << "\n";
            }
        }
        return ExitCode::Data;
    }

    std::map<std::string, std::shared_ptr<Provider>> providers;
    try {
        providers = make_providers(config, corpus);
    } catch (const ProviderAuthError& e) {
        err << "provider error: " << e.what() << "\n";
        return ExitCode::Provider;
    }

    const auto digest = config_digest(config.models, config.runs, config.retry,
                                      config.prompt_config ? prompt_config_to_json(prompts) : std::string());
    std::optional<LedgerWriter> writer;
    try {
        std::error_code ec;
        const bool exists = fs::exists(config.ledger, ec) && fs::file_size(config.ledger, ec) > 0;
        if (exists && !options.resume) {
            err << "config error: ledger " << config.ledger << " already exists; pass --resume to continue it\n";
            return ExitCode::Usage;
        }
        if (exists) {
            const auto ledger = load_ledger(config.ledger);
            for (const auto& w : ledger.warnings) {
                err << "warning: " << w << "\n";
            }
            if (ledger.header.corpus_digest != corpus.digest()) {
                err << "data error: ledger was written against a different corpus\n";
                return ExitCode::Data;
            }
            if (ledger.header.config_digest != digest) {
                err << "config error: ledger was written with a different configuration\n";
                return ExitCode::Usage;
            }
            writer.emplace(LedgerWriter::open(config.ledger));
        } else {
            LedgerHeader header;
            header.created_at = utc_timestamp();
            header.config_digest = digest;
            header.corpus_digest = corpus.digest();
            header.seed = config.seed;
            header.runs = config.runs;
            header.configs = config.models;
            writer.emplace(LedgerWriter::create(config.ledger, header));
        }
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "\n";
        return ExitCode::Data;
    }

    BenchmarkOptions bench;
    bench.runs = config.runs;
    bench.parallelism = config.parallelism;
    bench.policy = config.retry;
    bench.judge.prompts = prompts;
    bench.judge.seed = config.seed;
    bench.max_new_records = options.limit;
    if (!options.quiet) {
        bench.on_progress = [&err](const BenchmarkProgress& p) {
            if (p.done % 10 == 0 || p.done == p.planned) {
                const double ecr = p.done ? 100.0 * static_cast<double>(p.first_attempt_successes) /
                                                static_cast<double>(p.done)
                                          : 0.0;
                err << "[" << p.done << "/" << p.planned << "] ECR@1 " << fmt_fixed(ecr, 1) << "%\n";
            }
        };
    }

    BenchmarkSummary summary;
    try {
        summary = run_benchmark(corpus, config.models, providers, *writer, bench);
    } catch (const ProviderAuthError& e) {
        err << "provider error: " << e.what() << "\n";
        return ExitCode::Provider;
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "; completed records are kept, rerun with --resume\n";
        return ExitCode::Data;
    }

    out << "ledger: " << config.ledger.string() << "\n";
    out << "records written: " << summary.records_written << " (skipped " << summary.skipped
        << " already present)\n";
    out << "never completed: " << summary.failures << "\n";
    out << "wall time: " << summary.wall_time.count() << " ms\n";
    if (summary.interrupted) {
        out << "stopped early: " << (summary.planned - summary.records_written)
            << " records pending; rerun with --resume\n";
    }
    return ExitCode::Ok;
}

ExitCode cmd_report(const ReportCommandOptions& options, std::ostream& out, std::ostream& err) {
    RunLedger ledger;
    Corpus corpus;
    try {
        ledger = load_ledger(options.ledger);
        corpus = load_corpus(options.corpus);
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "\n";
        return ExitCode::Data;
    }
    for (const auto& w : ledger.warnings) {
        err << "warning: " << w << "\n";
    }
    if (ledger.header.corpus_digest != corpus.digest()) {
        err << "data error: ledger-corpus mismatch (ledger " << ledger.header.corpus_digest << ", corpus "
            << corpus.digest() << ")\n";
        return ExitCode::Data;
    }
    for (const auto& e : ledger.entries) {
        if (ledger.find_config(e.config_id) == nullptr) {
            err << "data error: missing pricing for config '" << e.config_id << "'\n";
            return ExitCode::Data;
        }
    }
    MetricsReport report;
    try {
        report = build_report(ledger.entries, corpus, ledger.header.configs);
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "\n";
        return ExitCode::Data;
    }
    out << report_to_text(report);
    try {
        if (options.csv) {
            write_text(*options.csv, report_to_csv(report));
        }
        if (options.json) {
            write_text(*options.json, report_to_json(report));
        }
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "\n";
        return ExitCode::Data;
    }
    return ExitCode::Ok;
}

ExitCode cmd_project(double cost_per_1k, std::int64_t volume, std::optional<double> versus, std::ostream& out,
                     std::ostream& err) {
    try {
        out << projection_to_text(project_cost(cost_per_1k, volume, versus));
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return ExitCode::Usage;
    }
    return ExitCode::Ok;
}

ExitCode cmd_compare(const fs::path& report_path, const std::string& config_a, const std::string& config_b,
                     std::ostream& out, std::ostream& err) {
    MetricsReport report;
    try {
        report = load_report(report_path);
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "\n";
        return ExitCode::Data;
    }
    try {
        out << comparison_to_text(compare_configs(report, config_a, config_b));
    } catch (const std::out_of_range& e) {
        err << "usage error: " << e.what() << "\n";
        return ExitCode::Usage;
    }
    return ExitCode::Ok;
}

}  // namespace covjudge
