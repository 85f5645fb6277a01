#include "covjudge/ledger.hpp"

#include "covjudge/digest.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace covjudge {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using nlohmann::json;

namespace {

constexpr std::string_view kLedgerTag = "covjudge-ledger";
constexpr int kLedgerVersion = 1;

EvaluationRecord parse_record(std::string_view line);

std::string dump_line(const ojson& doc) {
    return doc.dump(-1, ' ', false, ojson::error_handler_t::replace);
}

ojson verdict_to_json(const JudgeVerdict& v) {
    ojson flags = ojson::object();
    for (const auto& [k, b] : v.rubric_flags) {
        flags[k] = b;
    }
    return ojson{{"coverage_percentage", v.coverage_percentage},
                 {"covered", v.covered},
                 {"gaps", v.gaps},
                 {"recommendations", v.recommendations},
                 {"rubric_flags", flags}};
}

JudgeVerdict verdict_from_json(const json& doc) {
    JudgeVerdict v;
    v.coverage_percentage = doc.at("coverage_percentage").get<double>();
    v.covered = doc.at("covered").get<std::vector<std::string>>();
    v.gaps = doc.at("gaps").get<std::vector<std::string>>();
    v.recommendations = doc.at("recommendations").get<std::vector<std::string>>();
    for (const auto& [k, b] : doc.at("rubric_flags").items()) {
        v.rubric_flags[k] = b.get<bool>();
    }
    return v;
}

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LedgerError(LedgerErrorKind::MissingFile, path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct ParsedLedger {
    RunLedger ledger;
    std::size_t valid_bytes = 0;  // length of the prefix made of complete, valid lines
};

ParsedLedger parse_ledger_text(const std::string& text, const fs::path& path) {
    ParsedLedger out;
    std::vector<std::pair<std::size_t, std::size_t>> lines;  // [start, end) without '\n'
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.emplace_back(start, text.size());
            break;
        }
        lines.emplace_back(start, nl);
        start = nl + 1;
    }
    if (lines.empty()) {
        throw LedgerError(LedgerErrorKind::CorruptHeader, path.string() + " is empty", 1);
    }
    const bool last_terminated = !text.empty() && text.back() == '\n';

    const std::string_view view(text);
    try {
        if (lines.size() == 1 && !last_terminated) {
            throw std::invalid_argument("header line is not terminated");
        }
        out.ledger.header = deserialize_header(view.substr(lines[0].first, lines[0].second - lines[0].first));
    } catch (const std::exception& e) {
        throw LedgerError(LedgerErrorKind::CorruptHeader, path.string() + ": " + e.what(), 1);
    }
    out.valid_bytes = lines[0].second + 1;

    std::set<RunKey> keys;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto [b, e] = lines[i];
        const bool is_final = i + 1 == lines.size();
        const auto line_no = i + 1;
        try {
            if (is_final && !last_terminated) {
                throw std::invalid_argument("line is not newline-terminated");
            }
            auto record = parse_record(view.substr(b, e - b));
            if (!keys.insert(key_of(record)).second) {
                throw LedgerError(LedgerErrorKind::DuplicateKey,
                                  "duplicate key " + record.ticket_id + "/" + record.config_id + "/" +
                                      std::to_string(record.run_index),
                                  line_no);
            }
            out.ledger.entries.push_back(std::move(record));
            out.valid_bytes = e + 1;
        } catch (const LedgerError&) {
            throw;
        } catch (const std::exception& ex) {
            if (is_final) {
                out.ledger.warnings.push_back("dropped torn final line " + std::to_string(line_no) +
                                              " of " + path.string() + ": " + ex.what());
                break;
            }
            throw LedgerError(LedgerErrorKind::CorruptEntry,
                              path.string() + " line " + std::to_string(line_no) + ": " + ex.what(),
                              line_no);
        }
    }
    return out;
}

[[noreturn]] void throw_errno(LedgerErrorKind kind, const std::string& what) {
    throw LedgerError(kind, what + ": " + std::strerror(errno));
}

}  // namespace

RunKey key_of(const EvaluationRecord& record) {
    return {record.ticket_id, record.config_id, record.run_index};
}

const ModelConfig* RunLedger::find_config(std::string_view id) const {
    for (const auto& c : header.configs) {
        if (c.id == id) {
            return &c;
        }
    }
    return nullptr;
}

std::string_view to_string(LedgerErrorKind kind) {
    switch (kind) {
        case LedgerErrorKind::MissingFile: return "missing-file";
        case LedgerErrorKind::AlreadyExists: return "already-exists";
        case LedgerErrorKind::CorruptHeader: return "corrupt-header";
        case LedgerErrorKind::CorruptEntry: return "corrupt-entry";
        case LedgerErrorKind::DuplicateKey: return "duplicate-key";
        case LedgerErrorKind::WriteFailure: return "write-failure";
        case LedgerErrorKind::CorpusMismatch: return "corpus-mismatch";
    }
    return "?";
}

LedgerError::LedgerError(LedgerErrorKind kind, const std::string& detail, std::size_t line)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), line_(line) {}

std::string serialize_record(const EvaluationRecord& r) {
    ojson attempts = ojson::array();
    for (const auto& a : r.attempts) {
        attempts.push_back(ojson{{"index", a.index},
                                 {"status", to_string(a.status)},
                                 {"prompt_tokens", a.prompt_tokens},
                                 {"completion_tokens", a.completion_tokens},
                                 {"latency_ms", a.latency.count()},
                                 {"raw_excerpt", a.raw_excerpt}});
    }
    ojson doc{{"ticket_id", r.ticket_id},
              {"config_id", r.config_id},
              {"run_index", r.run_index},
              {"prompt_hash", r.prompt_hash},
              {"attempts", attempts},
              {"verdict", r.verdict ? verdict_to_json(*r.verdict) : ojson(nullptr)},
              {"first_attempt_success", r.first_attempt_success},
              {"completed", r.completed}};
    return dump_line(doc);
}

namespace {

EvaluationRecord parse_record(std::string_view line) {
    const json doc = json::parse(line);
    EvaluationRecord r;
    r.ticket_id = doc.at("ticket_id").get<std::string>();
    r.config_id = doc.at("config_id").get<std::string>();
    r.run_index = doc.at("run_index").get<int>();
    r.prompt_hash = doc.at("prompt_hash").get<std::string>();
    for (const auto& a : doc.at("attempts")) {
        AttemptRecord rec;
        rec.index = a.at("index").get<int>();
        const auto status = parse_attempt_status(a.at("status").get<std::string>());
        if (!status) {
            throw std::invalid_argument("unknown attempt status");
        }
        rec.status = *status;
        rec.prompt_tokens = a.at("prompt_tokens").get<std::int64_t>();
        rec.completion_tokens = a.at("completion_tokens").get<std::int64_t>();
        rec.latency = std::chrono::milliseconds(a.at("latency_ms").get<std::int64_t>());
        rec.raw_excerpt = a.at("raw_excerpt").get<std::string>();
        r.attempts.push_back(std::move(rec));
    }
    if (const auto& v = doc.at("verdict"); !v.is_null()) {
        r.verdict = verdict_from_json(v);
    }
    r.first_attempt_success = doc.at("first_attempt_success").get<bool>();
    r.completed = doc.at("completed").get<bool>();
    if (!r.consistent()) {
        throw std::invalid_argument("record violates attempt-history invariants");
    }
    return r;
}

}  // namespace

EvaluationRecord deserialize_record(std::string_view line) {
    try {
        return parse_record(line);
    } catch (const std::exception& e) {
        throw LedgerError(LedgerErrorKind::CorruptEntry, e.what());
    }
}

std::string serialize_header(const LedgerHeader& h) {
    ojson configs = ojson::array();
    for (const auto& c : h.configs) {
        configs.push_back(ojson::parse(model_config_to_json(c).dump()));
    }
    ojson doc{{"ledger", kLedgerTag},
              {"version", kLedgerVersion},
              {"created_at", h.created_at},
              {"config_digest", h.config_digest},
              {"corpus_digest", h.corpus_digest},
              {"seed", h.seed},
              {"tool_version", h.tool_version},
              {"runs", h.runs},
              {"configs", configs}};
    return dump_line(doc);
}

LedgerHeader deserialize_header(std::string_view line) {
    const json doc = json::parse(line);
    if (doc.at("ledger").get<std::string>() != kLedgerTag) {
        throw std::invalid_argument("not a covjudge ledger");
    }
    if (doc.at("version").get<int>() != kLedgerVersion) {
        throw std::invalid_argument("unsupported ledger version");
    }
    LedgerHeader h;
    h.created_at = doc.at("created_at").get<std::string>();
    h.config_digest = doc.at("config_digest").get<std::string>();
    h.corpus_digest = doc.at("corpus_digest").get<std::string>();
    h.seed = doc.at("seed").get<std::uint64_t>();
    h.tool_version = doc.at("tool_version").get<std::string>();
    h.runs = doc.at("runs").get<int>();
    for (const auto& c : doc.at("configs")) {
        h.configs.push_back(model_config_from_json(c));
    }
    return h;
}

RunLedger load_ledger(const fs::path& path) {
    return parse_ledger_text(read_all(path), path).ledger;
}

std::string config_digest(const std::vector<ModelConfig>& configs, int runs, const RetryPolicy& policy,
                          std::string_view prompt_config_json) {
    ojson doc = ojson::array();
    for (const auto& c : configs) {
        doc.push_back(ojson::parse(model_config_to_json(c).dump()));
    }
    std::vector<std::string> retry_on;
    for (auto s : policy.retry_on) {
        retry_on.emplace_back(to_string(s));
    }
    Sha256 h;
    h.update("covjudge-config-v1")
        .update(doc.dump())
        .update(std::to_string(runs))
        .update(std::to_string(policy.max_attempts))
        .update(std::to_string(policy.backoff_base.count()))
        .update(std::to_string(policy.backoff_multiplier))
        .update(std::to_string(policy.backoff_cap.count()));
    for (const auto& s : retry_on) {
        h.update(s);
    }
    h.update(prompt_config_json);
    return h.hex_digest();
}

std::set<RunKey> pending_work(const RunLedger& ledger, const Corpus& corpus,
                              const std::vector<ModelConfig>& configs, int runs) {
    if (ledger.header.corpus_digest != corpus.digest()) {
        throw LedgerError(LedgerErrorKind::CorpusMismatch,
                          "ledger corpus digest " + ledger.header.corpus_digest +
                              " does not match the supplied corpus " + corpus.digest());
    }
    std::set<RunKey> done;
    for (const auto& e : ledger.entries) {
        done.insert(key_of(e));
    }
    std::set<RunKey> pending;
    for (const auto& item : corpus.items()) {
        for (const auto& config : configs) {
            for (int run = 1; run <= runs; ++run) {
                RunKey key{item.ticket.id, config.id, run};
                if (!done.contains(key)) {
                    pending.insert(std::move(key));
                }
            }
        }
    }
    return pending;
}

LedgerWriter::LedgerWriter(fs::path path, int fd, LedgerHeader header, std::set<RunKey> keys)
    : path_(std::move(path)),
      fd_(fd),
      header_(std::move(header)),
      keys_(std::move(keys)),
      mutex_(std::make_unique<std::mutex>()) {}

LedgerWriter::LedgerWriter(LedgerWriter&& other) noexcept
    : path_(std::move(other.path_)),
      fd_(std::exchange(other.fd_, -1)),
      header_(std::move(other.header_)),
      keys_(std::move(other.keys_)),
      mutex_(std::move(other.mutex_)) {}

LedgerWriter& LedgerWriter::operator=(LedgerWriter&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) {
            ::close(fd_);
        }
        path_ = std::move(other.path_);
        fd_ = std::exchange(other.fd_, -1);
        header_ = std::move(other.header_);
        keys_ = std::move(other.keys_);
        mutex_ = std::move(other.mutex_);
    }
    return *this;
}

LedgerWriter::~LedgerWriter() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

LedgerWriter LedgerWriter::create(const fs::path& path, const LedgerHeader& header) {
    std::error_code ec;
    if (fs::exists(path, ec) && fs::file_size(path, ec) > 0) {
        throw LedgerError(LedgerErrorKind::AlreadyExists, path.string());
    }
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
    }
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw_errno(LedgerErrorKind::WriteFailure, "cannot create " + path.string());
    }
    LedgerWriter writer(path, fd, header, {});
    writer.write_line(serialize_header(header));
    return writer;
}

LedgerWriter LedgerWriter::open(const fs::path& path) {
    const auto text = read_all(path);
    auto parsed = parse_ledger_text(text, path);
    if (parsed.valid_bytes < text.size()) {
        if (::truncate(path.c_str(), static_cast<off_t>(parsed.valid_bytes)) != 0) {
            throw_errno(LedgerErrorKind::WriteFailure, "cannot truncate torn tail of " + path.string());
        }
    }
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (fd < 0) {
        throw_errno(LedgerErrorKind::WriteFailure, "cannot open " + path.string());
    }
    std::set<RunKey> keys;
    for (const auto& e : parsed.ledger.entries) {
        keys.insert(key_of(e));
    }
    return LedgerWriter(path, fd, std::move(parsed.ledger.header), std::move(keys));
}

void LedgerWriter::write_line(const std::string& line) {
    std::string buf = line;
    buf.push_back('\n');
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
        const auto n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw_errno(LedgerErrorKind::WriteFailure, "write to " + path_.string());
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) {
        throw_errno(LedgerErrorKind::WriteFailure, "fsync " + path_.string());
    }
}

void LedgerWriter::append(const EvaluationRecord& record) {
    std::lock_guard lock(*mutex_);
    auto key = key_of(record);
    if (keys_.contains(key)) {
        throw LedgerError(LedgerErrorKind::DuplicateKey,
                          key.ticket_id + "/" + key.config_id + "/" + std::to_string(key.run_index));
    }
    write_line(serialize_record(record));
    keys_.insert(std::move(key));
}

bool LedgerWriter::contains(const RunKey& key) const {
    std::lock_guard lock(*mutex_);
    return keys_.contains(key);
}

std::size_t LedgerWriter::size() const {
    std::lock_guard lock(*mutex_);
    return keys_.size();
}

std::string utc_timestamp() {
    const auto now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace covjudge
