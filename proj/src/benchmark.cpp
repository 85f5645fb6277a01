#include "covjudge/benchmark.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace covjudge {

BenchmarkSummary run_benchmark(const Corpus& corpus, const std::vector<ModelConfig>& configs,
                               const std::map<std::string, std::shared_ptr<Provider>>& providers,
                               LedgerWriter& ledger, const BenchmarkOptions& options) {
    if (options.runs < 1 || options.parallelism < 1) {
        throw std::invalid_argument("runs and parallelism must be at least 1");
    }
    if (!options.policy.valid()) {
        throw std::invalid_argument("invalid retry policy");
    }
    for (const auto& c : configs) {
        if (!providers.contains(c.id) || !providers.at(c.id)) {
            throw std::invalid_argument("no provider for model config '" + c.id + "'");
        }
    }

    const auto start = std::chrono::steady_clock::now();
    struct Task {
        const CorpusItem* item;
        const ModelConfig* config;
        int run;
    };
    // Run-major order so an interrupted benchmark leaves whole early runs.
    std::vector<Task> tasks;
    BenchmarkSummary summary;
    for (int run = 1; run <= options.runs; ++run) {
        for (const auto& config : configs) {
            for (const auto& item : corpus.items()) {
                if (ledger.contains({item.ticket.id, config.id, run})) {
                    ++summary.skipped;
                } else {
                    tasks.push_back({&item, &config, run});
                }
            }
        }
    }
    summary.planned = tasks.size();
    const std::size_t budget = options.max_new_records.value_or(tasks.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex state_mutex;
    std::exception_ptr failure;
    BenchmarkProgress progress;
    progress.planned = tasks.size();

    auto worker = [&] {
        while (!stop.load()) {
            const auto i = next.fetch_add(1);
            if (i >= tasks.size() || i >= budget) {
                return;
            }
            const auto& task = tasks[i];
            try {
                auto& provider = *providers.at(task.config->id);
                auto record = evaluate_item(provider, *task.config, *task.item, options.policy,
                                            task.run, options.judge);
                ledger.append(record);
                std::lock_guard lock(state_mutex);
                ++summary.records_written;
                if (!record.completed) {
                    ++summary.failures;
                }
                ++progress.done;
                if (record.first_attempt_success) {
                    ++progress.first_attempt_successes;
                }
                if (options.on_progress) {
                    options.on_progress(progress);
                }
            } catch (...) {
                std::lock_guard lock(state_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                stop.store(true);
                return;
            }
        }
    };

    const auto workers = static_cast<std::size_t>(options.parallelism);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    summary.interrupted = summary.records_written < tasks.size();
    summary.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return summary;
}

}  // namespace covjudge
