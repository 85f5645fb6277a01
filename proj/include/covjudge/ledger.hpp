#pragma once

#include "covjudge/corpus.hpp"
#include "covjudge/judge.hpp"
#include "covjudge/provider.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace covjudge {

inline constexpr std::string_view kToolVersion = "0.3.0";

struct RunKey {
    std::string ticket_id;
    std::string config_id;
    int run_index = 1;

    auto operator<=>(const RunKey&) const = default;
};

RunKey key_of(const EvaluationRecord& record);

struct LedgerHeader {
    std::string created_at;  // ISO-8601 UTC
    std::string config_digest;
    std::string corpus_digest;
    std::uint64_t seed = 0;
    std::string tool_version{kToolVersion};
    int runs = 0;
    // Model configurations the ledger was produced with, pricing included.
    std::vector<ModelConfig> configs;
};

struct RunLedger {
    LedgerHeader header;
    std::vector<EvaluationRecord> entries;
    std::vector<std::string> warnings;

    const ModelConfig* find_config(std::string_view id) const;
};

enum class LedgerErrorKind {
    MissingFile,
    AlreadyExists,
    CorruptHeader,
    CorruptEntry,
    DuplicateKey,
    WriteFailure,
    CorpusMismatch,
};

std::string_view to_string(LedgerErrorKind kind);

class LedgerError : public std::runtime_error {
public:
    LedgerError(LedgerErrorKind kind, const std::string& detail, std::size_t line = 0);
    LedgerErrorKind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    LedgerErrorKind kind_;
    std::size_t line_;
};

/// One JSON line per record; field order is fixed so output is byte-stable.
std::string serialize_record(const EvaluationRecord& record);
EvaluationRecord deserialize_record(std::string_view line);
std::string serialize_header(const LedgerHeader& header);
LedgerHeader deserialize_header(std::string_view line);

/// Reads a ledger. A malformed final line (torn write) is dropped with a
/// warning; any other malformed line is a CorruptEntry error carrying its
/// 1-based line number.
RunLedger load_ledger(const std::filesystem::path& path);

/// Content digest of the configuration snapshot the header records.
std::string config_digest(const std::vector<ModelConfig>& configs, int runs, const RetryPolicy& policy,
                          std::string_view prompt_config_json = {});

/// Planned (ticket, config, run) keys absent from the ledger. Throws
/// LedgerError{CorpusMismatch} if the ledger was written against another corpus.
std::set<RunKey> pending_work(const RunLedger& ledger, const Corpus& corpus,
                              const std::vector<ModelConfig>& configs, int runs);

/// Append-only writer. Every append is flushed and fsync'ed before it
/// returns. Thread-safe; appends are serialized internally.
class LedgerWriter {
public:
    /// Creates a new ledger and writes the header. Fails with AlreadyExists if
    /// the file is present and non-empty.
    static LedgerWriter create(const std::filesystem::path& path, const LedgerHeader& header);
    /// Opens an existing ledger for appending. A torn final line is truncated
    /// away so the next record starts on a clean line.
    static LedgerWriter open(const std::filesystem::path& path);

    LedgerWriter(LedgerWriter&&) noexcept;
    LedgerWriter& operator=(LedgerWriter&&) noexcept;
    ~LedgerWriter();

    /// Throws DuplicateKey if the key was already written, WriteFailure on I/O errors.
    void append(const EvaluationRecord& record);
    bool contains(const RunKey& key) const;
    std::size_t size() const;
    const LedgerHeader& header() const noexcept { return header_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    LedgerWriter(std::filesystem::path path, int fd, LedgerHeader header, std::set<RunKey> keys);
    void write_line(const std::string& line);

    std::filesystem::path path_;
    int fd_ = -1;
    LedgerHeader header_;
    std::set<RunKey> keys_;
    std::unique_ptr<std::mutex> mutex_;
};

std::string utc_timestamp();

}  // namespace covjudge
