#include "covjudge/ledger.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace covjudge;
using testsupport::TempDir;

namespace {

LedgerHeader header_for(const Corpus& corpus) {
    LedgerHeader h;
    h.created_at = "2024-01-01T00:00:00Z";
    h.config_digest = "cfg";
    h.corpus_digest = corpus.digest();
    h.seed = 3;
    h.runs = 2;
    ModelConfig m;
    m.id = "m1";
    m.prompt_rate = 0.15;
    m.completion_rate = 0.6;
    h.configs = {m};
    return h;
}

Corpus three_items() {
    return Corpus(std::vector<CorpusItem>{testsupport::sample_item("A", 10), testsupport::sample_item("B", 20),
                                          testsupport::sample_item("C", 30)});
}

LedgerErrorKind ledger_error(const std::filesystem::path& path, std::size_t* line = nullptr) {
    try {
        load_ledger(path);
    } catch (const LedgerError& e) {
        if (line) {
            *line = e.line();
        }
        return e.kind();
    }
    FAIL("expected a ledger error");
    return LedgerErrorKind::CorruptEntry;
}

void append_raw(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << text;
}

}  // namespace

TEST_SUITE("ledger") {

TEST_CASE("append then load") {
    TempDir dir;
    const auto corpus = three_items();
    std::mt19937_64 rng(1);
    const auto rec = testsupport::random_record(rng, "A", "m1", 1, 10);
    {
        auto w = LedgerWriter::create(dir / "run.ledger.jsonl", header_for(corpus));
        w.append(rec);
        CHECK(w.contains(key_of(rec)));
        CHECK(w.size() == 1);
    }
    const auto l = load_ledger(dir / "run.ledger.jsonl");
    REQUIRE(l.entries.size() == 1);
    CHECK(l.entries[0] == rec);
    CHECK(l.header.corpus_digest == corpus.digest());
    CHECK(l.header.seed == 3);
    CHECK(l.header.tool_version == kToolVersion);
    REQUIRE(l.find_config("m1") != nullptr);
    CHECK(l.find_config("m1")->completion_rate == 0.6);
    CHECK(l.warnings.empty());
}

TEST_CASE("duplicate keys") {
    TempDir dir;
    std::mt19937_64 rng(2);
    auto w = LedgerWriter::create(dir / "l.jsonl", header_for(three_items()));
    const auto rec = testsupport::random_record(rng, "A", "m1", 1, 10);
    w.append(rec);
    try {
        w.append(rec);
        FAIL("expected duplicate-key");
    } catch (const LedgerError& e) {
        CHECK(e.kind() == LedgerErrorKind::DuplicateKey);
    }

    const auto line = serialize_record(rec);
    append_raw(dir / "l.jsonl", line + "\n");
    append_raw(dir / "l.jsonl", serialize_record(testsupport::random_record(rng, "B", "m1", 1, 1)) + "\n");
    CHECK(ledger_error(dir / "l.jsonl") == LedgerErrorKind::DuplicateKey);
}

TEST_CASE("create refuses an existing ledger") {
    TempDir dir;
    LedgerWriter::create(dir / "l.jsonl", header_for(three_items()));
    try {
        LedgerWriter::create(dir / "l.jsonl", header_for(three_items()));
        FAIL("expected already-exists");
    } catch (const LedgerError& e) {
        CHECK(e.kind() == LedgerErrorKind::AlreadyExists);
    }
}

TEST_CASE("500 appends keep order and bytes") {
    TempDir dir;
    std::mt19937_64 rng(3);
    std::vector<EvaluationRecord> written;
    {
        auto w = LedgerWriter::create(dir / "l.jsonl", header_for(three_items()));
        for (int i = 0; i < 500; ++i) {
            auto rec = testsupport::random_record(rng, "T" + std::to_string(i), "m1", 1 + i % 5, 50);
            rec.attempts[0].raw_excerpt = i % 7 == 0 ? "unicode ✓ \"quoted\"\nnewline" : "";
            w.append(rec);
            written.push_back(rec);
        }
    }
    const auto l = load_ledger(dir / "l.jsonl");
    REQUIRE(l.entries.size() == 500);
    CHECK(l.entries == written);

    const auto text = testsupport::read_file(dir / "l.jsonl");
    std::string expected = serialize_header(l.header) + "\n";
    for (const auto& r : written) {
        expected += serialize_record(r) + "\n";
    }
    CHECK(text == expected);
}

TEST_CASE("torn final line is dropped with a warning") {
    TempDir dir;
    std::mt19937_64 rng(4);
    std::string last;
    {
        auto w = LedgerWriter::create(dir / "l.jsonl", header_for(three_items()));
        for (int i = 0; i < 3; ++i) {
            w.append(testsupport::random_record(rng, "T" + std::to_string(i), "m1", 1, 50));
        }
        last = serialize_record(testsupport::random_record(rng, "T9", "m1", 1, 50));
    }
    append_raw(dir / "l.jsonl", last.substr(0, last.size() / 2));
    const auto l = load_ledger(dir / "l.jsonl");
    CHECK(l.entries.size() == 3);
    REQUIRE(l.warnings.size() == 1);
    CHECK(l.warnings[0].find("line 5") != std::string::npos);

    // The writer truncates the tail so the next record starts cleanly.
    {
        auto w = LedgerWriter::open(dir / "l.jsonl");
        CHECK(w.size() == 3);
        w.append(testsupport::random_record(rng, "T4", "m1", 1, 50));
    }
    const auto again = load_ledger(dir / "l.jsonl");
    CHECK(again.entries.size() == 4);
    CHECK(again.warnings.empty());
}

TEST_CASE("complete but unterminated final line is treated as torn") {
    TempDir dir;
    std::mt19937_64 rng(5);
    LedgerWriter::create(dir / "l.jsonl", header_for(three_items()));
    append_raw(dir / "l.jsonl", serialize_record(testsupport::random_record(rng, "A", "m1", 1, 5)));
    const auto l = load_ledger(dir / "l.jsonl");
    CHECK(l.entries.empty());
    CHECK(l.warnings.size() == 1);
}

TEST_CASE("malformed interior line names its line number") {
    TempDir dir;
    std::mt19937_64 rng(6);
    {
        auto w = LedgerWriter::create(dir / "l.jsonl", header_for(three_items()));
        w.append(testsupport::random_record(rng, "A", "m1", 1, 5));
    }
    append_raw(dir / "l.jsonl", "{\"ticket_id\": \"B\", oops\n");
    append_raw(dir / "l.jsonl", serialize_record(testsupport::random_record(rng, "C", "m1", 1, 5)) + "\n");
    std::size_t line = 0;
    CHECK(ledger_error(dir / "l.jsonl", &line) == LedgerErrorKind::CorruptEntry);
    CHECK(line == 3);
}

TEST_CASE("inconsistent record is corrupt") {
    std::mt19937_64 rng(7);
    auto rec = testsupport::random_record(rng, "A", "m1", 1, 5);
    rec.first_attempt_success = !rec.first_attempt_success;
    CHECK_THROWS_AS(deserialize_record(serialize_record(rec)), LedgerError);
}

TEST_CASE("header problems") {
    TempDir dir;
    CHECK(ledger_error(dir / "absent.jsonl") == LedgerErrorKind::MissingFile);
    testsupport::write_file(dir / "bad.jsonl", "{\"not\": \"a header\"}\n");
    CHECK(ledger_error(dir / "bad.jsonl") == LedgerErrorKind::CorruptHeader);
    testsupport::write_file(dir / "empty.jsonl", "");
    CHECK(ledger_error(dir / "empty.jsonl") == LedgerErrorKind::CorruptHeader);
}

TEST_CASE("pending_work") {
    TempDir dir;
    const auto corpus = three_items();
    ModelConfig m1;
    m1.id = "m1";
    ModelConfig m2;
    m2.id = "m2";
    const std::vector<ModelConfig> configs{m1, m2};
    std::mt19937_64 rng(8);

    auto w = LedgerWriter::create(dir / "l.jsonl", header_for(corpus));
    CHECK(pending_work(load_ledger(dir / "l.jsonl"), corpus, configs, 2).size() == 12);

    int n = 0;
    for (const auto& item : corpus.items()) {
        for (const auto& c : configs) {
            for (int run = 1; run <= 2 && n < 7; ++run, ++n) {
                w.append(testsupport::random_record(rng, item.ticket.id, c.id, run, 5));
            }
        }
    }
    const auto pending = pending_work(load_ledger(dir / "l.jsonl"), corpus, configs, 2);
    CHECK(pending.size() == 5);
    for (const auto& key : pending) {
        w.append(testsupport::random_record(rng, key.ticket_id, key.config_id, key.run_index, 5));
    }
    CHECK(pending_work(load_ledger(dir / "l.jsonl"), corpus, configs, 2).empty());

    const Corpus other(std::vector<CorpusItem>{testsupport::sample_item("Z", 1)});
    try {
        pending_work(load_ledger(dir / "l.jsonl"), other, configs, 2);
        FAIL("expected corpus-mismatch");
    } catch (const LedgerError& e) {
        CHECK(e.kind() == LedgerErrorKind::CorpusMismatch);
    }
}

TEST_CASE("config digest is sensitive to every input") {
    ModelConfig m;
    m.id = "m";
    const RetryPolicy p;
    const auto base = config_digest({m}, 5, p);
    CHECK(base == config_digest({m}, 5, p));
    CHECK(base != config_digest({m}, 4, p));
    auto m2 = m;
    m2.prompt_rate = 1;
    CHECK(base != config_digest({m2}, 5, p));
    auto p2 = p;
    p2.max_attempts = 3;
    CHECK(base != config_digest({m}, 5, p2));
    CHECK(base != config_digest({m}, 5, p, "{\"rubric\":{}}"));
}

}  // TEST_SUITE
