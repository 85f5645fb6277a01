#include "covjudge/corpus.hpp"

#include "covjudge/digest.hpp"
#include "covjudge/gherkin.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace covjudge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kConsistencyTolerance = 1e-9;

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw CorpusError(CorpusErrorKind::SchemaError, where + ": " + what);
}

std::string read_file(const fs::path& path, const std::string& component) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CorpusError(CorpusErrorKind::MissingFile, component);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json read_json(const fs::path& path, const std::string& component) {
    const auto text = read_file(path, component);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        schema_error(component, std::string("invalid JSON: ") + e.what());
    }
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        schema_error(where, std::string("missing field '") + key + "'");
    }
    if (!it->is_string()) {
        schema_error(where, std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::vector<std::string> require_string_list(const json& obj, const char* key,
                                             const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        schema_error(where, std::string("missing field '") + key + "'");
    }
    if (!it->is_array()) {
        schema_error(where, std::string("field '") + key + "' must be an array of strings");
    }
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) {
            schema_error(where, std::string("field '") + key + "' must be an array of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

double require_score(const json& value, double hi, const std::string& where,
                     const std::string& name) {
    if (!value.is_number()) {
        schema_error(where, "'" + name + "' must be a number");
    }
    const auto v = value.get<double>();
    if (!(v >= 0.0 && v <= hi)) {
        schema_error(where, "'" + name + "' out of range [0, " +
                                std::to_string(static_cast<int>(hi)) + "]");
    }
    return v;
}

JiraTicket parse_ticket(const json& doc, const std::string& where) {
    if (!doc.is_object()) {
        schema_error(where, "expected an object");
    }
    JiraTicket t;
    t.id = require_string(doc, "id", where);
    t.title = require_string(doc, "title", where);
    t.description = require_string(doc, "description", where);
    t.acceptance_criteria = require_string_list(doc, "acceptance_criteria", where);
    t.success_scenarios = require_string_list(doc, "success_scenarios", where);
    t.error_scenarios = require_string_list(doc, "error_scenarios", where);
    const auto method = require_string(doc, "http_method", where);
    const auto parsed = parse_http_method(method);
    if (!parsed) {
        schema_error(where, "unsupported http_method '" + method + "'");
    }
    t.http_method = *parsed;
    if (t.id.empty() || t.title.empty() || t.description.empty()) {
        schema_error(where, "id, title and description must be non-empty");
    }
    return t;
}

GroundTruth parse_annotation(const json& doc, const std::string& where) {
    if (!doc.is_object()) {
        schema_error(where, "expected an object");
    }
    GroundTruth gt;
    gt.ticket_id = require_string(doc, "ticket_id", where);
    const auto score = doc.find("normalized_score");
    if (score == doc.end()) {
        schema_error(where, "missing field 'normalized_score'");
    }
    gt.normalized_score = require_score(*score, 100.0, where, "normalized_score");

    const auto dims = doc.find("dimensions");
    if (dims == doc.end() || dims->is_null()) {
        return gt;
    }
    if (!dims->is_object()) {
        schema_error(where, "'dimensions' must be an object");
    }
    std::array<double, 4> values{};
    for (std::size_t i = 0; i < kDimensionKeys.size(); ++i) {
        const std::string key(kDimensionKeys[i]);
        const auto it = dims->find(key);
        if (it == dims->end()) {
            schema_error(where, "missing dimension '" + key + "'");
        }
        values[i] = require_score(*it, 10.0, where, key);
    }
    for (const auto& [key, _] : dims->items()) {
        if (std::find(kDimensionKeys.begin(), kDimensionKeys.end(), key) == kDimensionKeys.end()) {
            schema_error(where, "unknown dimension '" + key + "'");
        }
    }
    gt.dimensions = RubricScores{values[0], values[1], values[2], values[3]};
    const auto recomputed = ground_truth_score(*gt.dimensions);
    if (std::abs(recomputed - gt.normalized_score) > kConsistencyTolerance) {
        std::ostringstream msg;
        msg << "normalized_score " << gt.normalized_score
            << " does not match the weighted dimensions (" << recomputed << ")";
        schema_error(where, msg.str());
    }
    return gt;
}

}  // namespace

std::string_view to_string(HttpMethod method) {
    switch (method) {
        case HttpMethod::Get: return "GET";
        case HttpMethod::Post: return "POST";
        case HttpMethod::Put: return "PUT";
        case HttpMethod::Delete: return "DELETE";
    }
    return "?";
}

std::optional<HttpMethod> parse_http_method(std::string_view text) {
    for (auto m : kHttpMethods) {
        if (to_string(m) == text) {
            return m;
        }
    }
    return std::nullopt;
}

double ground_truth_score(const RubricScores& dims) {
    for (double v : {dims.scenario_completeness, dims.acceptance_alignment, dims.method_concerns,
                     dims.assertion_quality}) {
        if (!(v >= 0.0 && v <= 10.0)) {
            throw std::invalid_argument("rubric dimension score outside [0, 10]");
        }
    }
    // 10 * (0.4a + 0.3b + 0.2c + 0.1d) with the factor of ten folded into the
    // weights; exact for integer dimension scores.
    return 4.0 * dims.scenario_completeness + 3.0 * dims.acceptance_alignment +
           2.0 * dims.method_concerns + dims.assertion_quality;
}

std::string_view to_string(CorpusErrorKind kind) {
    switch (kind) {
        case CorpusErrorKind::MissingFile: return "missing-file";
        case CorpusErrorKind::DuplicateId: return "duplicate-id";
        case CorpusErrorKind::AnnotationMismatch: return "annotation-mismatch";
        case CorpusErrorKind::SchemaError: return "schema-error";
    }
    return "?";
}

CorpusError::CorpusError(CorpusErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

Corpus::Corpus(std::vector<CorpusItem> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end(),
              [](const CorpusItem& a, const CorpusItem& b) { return a.ticket.id < b.ticket.id; });
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (!lookup_.emplace(items_[i].ticket.id, i).second) {
            throw CorpusError(CorpusErrorKind::DuplicateId, items_[i].ticket.id);
        }
    }
}

const CorpusItem* Corpus::find(std::string_view ticket_id) const {
    const auto it = lookup_.find(std::string(ticket_id));
    return it == lookup_.end() ? nullptr : &items_[it->second];
}

std::string Corpus::digest() const {
    Sha256 h;
    h.update("covjudge-corpus-v1");
    for (const auto& item : items_) {
        const auto& t = item.ticket;
        h.update(t.id).update(t.title).update(t.description).update(to_string(t.http_method));
        for (const auto* list : {&t.acceptance_criteria, &t.success_scenarios, &t.error_scenarios}) {
            h.update(std::to_string(list->size()));
            for (const auto& s : *list) {
                h.update(s);
            }
        }
        h.update(item.gherkin_source);
    }
    return h.hex_digest();
}

Corpus load_corpus(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw CorpusError(CorpusErrorKind::MissingFile, "corpus root " + root.string());
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());

    std::vector<CorpusItem> items;
    std::unordered_map<std::string, std::string> seen;
    for (const auto& dir : dirs) {
        const auto name = dir.filename().string();
        CorpusItem item;
        item.ticket =
            parse_ticket(read_json(dir / "ticket.json", name + "/ticket.json"), name + "/ticket.json");
        item.gherkin_source = read_file(dir / "script.feature", name + "/script.feature");
        item.ground_truth = parse_annotation(read_json(dir / "annotation.json", name + "/annotation.json"),
                                             name + "/annotation.json");
        if (item.ground_truth.ticket_id != item.ticket.id) {
            throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                              name + "/annotation.json references '" + item.ground_truth.ticket_id +
                                  "' but the ticket id is '" + item.ticket.id + "'");
        }
        if (const auto [it, inserted] = seen.emplace(item.ticket.id, name); !inserted) {
            throw CorpusError(CorpusErrorKind::DuplicateId,
                              item.ticket.id + " (in " + it->second + " and " + name + ")");
        }
        items.push_back(std::move(item));
    }
    return Corpus(std::move(items));
}

std::size_t ValidationReport::parse_failures() const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [](const ItemStatus& s) { return !s.parses; }));
}

ValidationReport validate_corpus(const Corpus& corpus) {
    ValidationReport report;
    for (auto m : kHttpMethods) {
        report.method_counts[m] = 0;
    }
    for (const auto& item : corpus.items()) {
        ++report.method_counts[item.ticket.http_method];
        report.ids.push_back(item.ticket.id);
        ItemStatus status{item.ticket.id, true, {}};
        try {
            gherkin::parse_feature(item.gherkin_source);
        } catch (const gherkin::ParseError& e) {
            status.parses = false;
            status.diagnostic = e.what();
        }
        report.items.push_back(std::move(status));
    }
    return report;
}

}  // namespace covjudge
