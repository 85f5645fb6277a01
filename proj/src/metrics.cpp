#include "covjudge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace covjudge {

AccuracyResult compute_accuracy(std::span<const double> predictions, std::span<const double> truths,
                                double close_threshold) {
    if (predictions.size() != truths.size()) {
        throw MetricsError("compute_accuracy: length mismatch (" + std::to_string(predictions.size()) +
                           " predictions, " + std::to_string(truths.size()) + " truths)");
    }
    if (predictions.empty()) {
        throw MetricsError("compute_accuracy: empty input");
    }
    double abs_sum = 0.0;
    std::size_t exact = 0;
    std::size_t close = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double err = std::abs(predictions[i] - truths[i]);
        abs_sum += err;
        exact += err == 0.0 ? 1 : 0;
        close += err <= close_threshold ? 1 : 0;
    }
    const auto n = static_cast<double>(predictions.size());
    AccuracyResult r;
    r.n = predictions.size();
    r.maae = abs_sum / n;
    r.aps = 100.0 - r.maae;
    r.pmr = 100.0 * static_cast<double>(exact) / n;
    r.cmr = 100.0 * static_cast<double>(close) / n;
    return r;
}

ReliabilityResult compute_reliability(std::span<const EvaluationRecord> records) {
    if (records.empty()) {
        throw MetricsError("compute_reliability: empty input");
    }
    ReliabilityResult r;
    r.evaluations = records.size();
    std::size_t first_ok = 0;
    for (const auto& rec : records) {
        first_ok += rec.first_attempt_success ? 1 : 0;
        r.completed += rec.completed ? 1 : 0;
        r.total_calls += rec.attempts.size();
    }
    r.ecr_at_1 = 100.0 * static_cast<double>(first_ok) / static_cast<double>(records.size());
    if (r.completed > 0) {
        r.mean_attempts = static_cast<double>(r.total_calls) / static_cast<double>(r.completed);
    }
    return r;
}

double token_cost(std::int64_t prompt_tokens, std::int64_t completion_tokens, const ModelConfig& config) {
    return static_cast<double>(prompt_tokens) / 1e6 * config.prompt_rate +
           static_cast<double>(completion_tokens) / 1e6 * config.completion_rate;
}

std::optional<double> adjusted_cost(double cost_per_1k, double ecr_at_1) {
    if (!(ecr_at_1 > 0.0)) {
        return std::nullopt;
    }
    // Multiplying by 100 / ecr keeps the result >= nominal after rounding.
    return cost_per_1k * (100.0 / ecr_at_1);
}

CostResult compute_cost(std::span<const EvaluationRecord> records, const ModelConfig& config,
                        double ecr_at_1) {
    double nominal_sum = 0.0;
    double all_attempts_sum = 0.0;
    std::size_t completed = 0;
    for (const auto& rec : records) {
        for (const auto& a : rec.attempts) {
            all_attempts_sum += token_cost(a.prompt_tokens, a.completion_tokens, config);
        }
        if (rec.completed && !rec.attempts.empty()) {
            const auto& ok = rec.attempts.back();
            nominal_sum += token_cost(ok.prompt_tokens, ok.completion_tokens, config);
            ++completed;
        }
    }
    if (completed == 0) {
        throw MetricsError("compute_cost: no completed evaluations");
    }
    CostResult r;
    r.mean_cost = nominal_sum / static_cast<double>(completed);
    r.cost_per_1k = r.mean_cost * 1000.0;
    r.adjusted_cost_per_1k = adjusted_cost(r.cost_per_1k, ecr_at_1);
    r.measured_cost_per_1k = all_attempts_sum / static_cast<double>(completed) * 1000.0;
    return r;
}

Aggregate aggregate_runs(std::span<const double> values) {
    if (values.empty()) {
        throw MetricsError("aggregate_runs: empty input");
    }
    Aggregate a;
    a.n = values.size();
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    a.mean = sum / static_cast<double>(a.n);
    const bool constant = std::all_of(values.begin(), values.end(),
                                      [&](double v) { return v == values.front(); });
    if (constant) {
        a.mean = values.front();
        return a;
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - a.mean) * (v - a.mean);
    }
    a.std = std::sqrt(ss / static_cast<double>(a.n - 1));
    return a;
}

std::string_view metric_key(Metric metric) {
    switch (metric) {
        case Metric::Maae: return "maae";
        case Metric::Aps: return "aps";
        case Metric::Pmr: return "pmr";
        case Metric::Cmr: return "cmr";
        case Metric::EcrAt1: return "ecr_at_1";
        case Metric::MeanAttempts: return "mean_attempts";
        case Metric::CostPer1k: return "cost_per_1k";
        case Metric::AdjustedCostPer1k: return "adjusted_cost_per_1k";
        case Metric::MeasuredCostPer1k: return "measured_cost_per_1k";
    }
    return "?";
}

std::optional<Metric> parse_metric_key(std::string_view key) {
    for (auto m : kAllMetrics) {
        if (metric_key(m) == key) {
            return m;
        }
    }
    return std::nullopt;
}

bool lower_is_better(Metric metric) {
    switch (metric) {
        case Metric::Maae:
        case Metric::MeanAttempts:
        case Metric::CostPer1k:
        case Metric::AdjustedCostPer1k:
        case Metric::MeasuredCostPer1k:
            return true;
        default:
            return false;
    }
}

const ConfigMetrics* MetricsReport::find(std::string_view config_id) const {
    for (const auto& c : configs) {
        if (c.config_id == config_id) {
            return &c;
        }
    }
    return nullptr;
}

MetricsReport build_report(std::span<const EvaluationRecord> records, const Corpus& corpus,
                           const std::vector<ModelConfig>& configs) {
    MetricsReport report;
    for (const auto& config : configs) {
        std::map<int, std::vector<EvaluationRecord>> by_run;
        for (const auto& rec : records) {
            if (rec.config_id == config.id) {
                by_run[rec.run_index].push_back(rec);
            }
        }
        ConfigMetrics cm;
        cm.config_id = config.id;
        cm.runs = by_run.size();
        for (const auto& [run, recs] : by_run) {
            RunMetrics rm;
            rm.run_index = run;
            auto set = [&rm](Metric m, std::optional<double> v) { rm.values[static_cast<std::size_t>(m)] = v; };

            std::vector<double> preds;
            std::vector<double> truths;
            for (const auto& rec : recs) {
                ++cm.evaluations;
                if (!rec.completed) {
                    ++cm.never_completed;
                    continue;
                }
                const auto* item = corpus.find(rec.ticket_id);
                if (item == nullptr) {
                    throw MetricsError("ticket '" + rec.ticket_id + "' is not in the corpus");
                }
                preds.push_back(rec.verdict->coverage_percentage);
                truths.push_back(item->ground_truth.normalized_score);
            }
            if (!preds.empty()) {
                const auto acc = compute_accuracy(preds, truths);
                set(Metric::Maae, acc.maae);
                set(Metric::Aps, acc.aps);
                set(Metric::Pmr, acc.pmr);
                set(Metric::Cmr, acc.cmr);
            }
            const auto rel = compute_reliability(recs);
            set(Metric::EcrAt1, rel.ecr_at_1);
            set(Metric::MeanAttempts, rel.mean_attempts);
            if (rel.completed > 0) {
                const auto cost = compute_cost(recs, config, rel.ecr_at_1);
                set(Metric::CostPer1k, cost.cost_per_1k);
                set(Metric::AdjustedCostPer1k, cost.adjusted_cost_per_1k);
                set(Metric::MeasuredCostPer1k, cost.measured_cost_per_1k);
            }
            cm.per_run.push_back(rm);
        }
        for (auto m : kAllMetrics) {
            std::vector<double> values;
            for (const auto& rm : cm.per_run) {
                if (const auto v = rm.get(m)) {
                    values.push_back(*v);
                }
            }
            if (!values.empty()) {
                cm.aggregates[static_cast<std::size_t>(m)] = aggregate_runs(values);
            }
        }
        const auto nominal = cm.get(Metric::CostPer1k);
        const auto ecr = cm.get(Metric::EcrAt1);
        if (nominal && ecr) {
            cm.adjusted_cost_of_means = adjusted_cost(nominal->mean, ecr->mean);
        }
        report.configs.push_back(std::move(cm));
    }
    return report;
}

}  // namespace covjudge
