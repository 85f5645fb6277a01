#pragma once

#include "covjudge/corpus.hpp"
#include "covjudge/gherkin.hpp"
#include "covjudge/judge.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

// Unique directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

void write_file(const fs::path& path, const std::string& text);
std::string read_file(const fs::path& path);

std::string minimal_feature();
covjudge::JiraTicket sample_ticket(const std::string& id, covjudge::HttpMethod method = covjudge::HttpMethod::Get);
covjudge::CorpusItem sample_item(const std::string& id, double truth,
                                 covjudge::HttpMethod method = covjudge::HttpMethod::Get);

// Writes one corpus item directory (<root>/<dir>/{ticket.json,script.feature,annotation.json}).
void write_item(const fs::path& root, const std::string& dir, const covjudge::JiraTicket& ticket,
                const std::string& feature, const std::string& annotation_json);
std::string annotation_json(const std::string& ticket_id, double a, double b, double c, double d);
std::string annotation_json_score_only(const std::string& ticket_id, double score);

// Random structurally valid Feature (names and step text free of leading/trailing
// whitespace and of characters the canonical renderer cannot reproduce).
covjudge::gherkin::Feature random_feature(std::mt19937_64& rng);

// Random bytes biased towards Gherkin-looking fragments.
std::string fuzz_input(std::mt19937_64& rng);

// Random consistent evaluation record. `truth` gives the ground truth the
// verdict is scattered around.
covjudge::EvaluationRecord random_record(std::mt19937_64& rng, const std::string& ticket_id,
                                         const std::string& config_id, int run_index, double truth);

fs::path source_dir();  // repository root

}  // namespace testsupport
