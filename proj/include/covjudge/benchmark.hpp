#pragma once

#include "covjudge/corpus.hpp"
#include "covjudge/judge.hpp"
#include "covjudge/ledger.hpp"
#include "covjudge/provider.hpp"

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace covjudge {

struct BenchmarkProgress {
    std::size_t done = 0;     // records appended in this invocation
    std::size_t planned = 0;  // records pending at start
    std::size_t first_attempt_successes = 0;
};

struct BenchmarkOptions {
    int runs = 5;
    int parallelism = 1;
    RetryPolicy policy;
    JudgeOptions judge;
    // Stop cleanly after this many new records (simulated interruption).
    std::optional<std::size_t> max_new_records;
    std::function<void(const BenchmarkProgress&)> on_progress;
};

struct BenchmarkSummary {
    std::size_t planned = 0;
    std::size_t records_written = 0;
    std::size_t skipped = 0;   // keys already present in the ledger
    std::size_t failures = 0;  // records that never completed
    bool interrupted = false;
    std::chrono::milliseconds wall_time{0};
};

/// Evaluates every (item, config, run) key missing from `ledger`, appending
/// each record as soon as it completes. Providers are looked up by config id.
/// Up to `parallelism` evaluations run concurrently; each evaluation's
/// attempts are sequential. A ledger write failure stops dispatch, waits for
/// in-flight work and rethrows; everything appended so far stays valid.
BenchmarkSummary run_benchmark(const Corpus& corpus, const std::vector<ModelConfig>& configs,
                               const std::map<std::string, std::shared_ptr<Provider>>& providers,
                               LedgerWriter& ledger, const BenchmarkOptions& options);

}  // namespace covjudge
