#pragma once
// Test-suite model: task kinds, cases, prompt templates and deterministic
// few-shot demo selection. Suites are immutable after load and identified by
// the SHA-256 of their file bytes, so a baseline and a candidate run can
// prove they scored the same cases.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "genaiops/errors.hpp"
#include "genaiops/rng.hpp"
#include "genaiops/sha256.hpp"
#include "genaiops/text.hpp"

namespace genaiops {

using json = nlohmann::json;

enum class TaskKind {
    Summarization,
    ContentGeneration,
    QuestionAnswering,
    EntityExtraction,
};

inline const char* task_kind_name(TaskKind t) {
    switch (t) {
        case TaskKind::Summarization: return "summarization";
        case TaskKind::ContentGeneration: return "content_generation";
        case TaskKind::QuestionAnswering: return "question_answering";
        case TaskKind::EntityExtraction: return "entity_extraction";
    }
    return "unknown";
}

inline TaskKind task_kind_from_name(const std::string& name) {
    if (name == "summarization") return TaskKind::Summarization;
    if (name == "content_generation") return TaskKind::ContentGeneration;
    if (name == "question_answering") return TaskKind::QuestionAnswering;
    if (name == "entity_extraction") return TaskKind::EntityExtraction;
    raise(ErrorCode::MalformedRecord, "unknown task kind '" + name + "'");
}

struct TestCase {
    std::string id;
    TaskKind task = TaskKind::Summarization;
    std::string source;
    std::map<std::string, std::string> input_vars;
    std::vector<std::string> references;
    std::set<std::string> labels;
    std::optional<std::string> group;
    json metadata = json::object();

    // A case needs references unless it is entity extraction with labels.
    bool references_required() const {
        return !(task == TaskKind::EntityExtraction && !labels.empty());
    }
};

struct Suite {
    std::string name;
    std::vector<TestCase> cases;
    std::vector<std::string> segments;  // declared fairness segment names
    std::string content_hash;           // sha256 hex of the file bytes

    const TestCase* find(const std::string& id) const {
        for (const auto& c : cases)
            if (c.id == id) return &c;
        return nullptr;
    }
};

struct PromptTemplate {
    std::string system_preamble;
    std::string body;         // {{name}} placeholders plus optional {{demos}}
    std::string demo_format;  // uses {{demo_input}} / {{demo_output}}

    std::string hash() const {
        json j{{"system_preamble", system_preamble}, {"body", body}, {"demo_format", demo_format}};
        return sha256_hex(j.dump());
    }

    static PromptTemplate from_json(const json& j) {
        PromptTemplate t;
        t.system_preamble = j.value("system_preamble", "");
        t.body = j.at("body").get<std::string>();
        t.demo_format = j.value("demo_format", "Input: {{demo_input}}\nOutput: {{demo_output}}\n");
        return t;
    }
};

enum class DemoStrategy { Random, FirstK, Similarity };

inline const char* demo_strategy_name(DemoStrategy s) {
    switch (s) {
        case DemoStrategy::Random: return "random";
        case DemoStrategy::FirstK: return "first_k";
        case DemoStrategy::Similarity: return "similarity";
    }
    return "unknown";
}

inline DemoStrategy demo_strategy_from_name(const std::string& s) {
    if (s == "random") return DemoStrategy::Random;
    if (s == "first_k") return DemoStrategy::FirstK;
    if (s == "similarity") return DemoStrategy::Similarity;
    raise(ErrorCode::ConfigError, "unknown demo strategy '" + s + "'");
}

struct FewShotConfig {
    int k = 0;
    DemoStrategy strategy = DemoStrategy::Random;
    uint64_t seed = 0;
};

struct DemoPair {
    std::string input;
    std::string output;
};

// Demo derivation rule: input is the case source, output is the first
// reference (or the sorted labels for label-only extraction cases).
inline DemoPair demo_pair(const TestCase& c) {
    DemoPair d;
    d.input = c.source;
    if (!c.references.empty()) {
        d.output = c.references.front();
    } else {
        std::string joined;
        for (const auto& l : c.labels) {
            if (!joined.empty()) joined += ", ";
            joined += l;
        }
        d.output = joined;
    }
    return d;
}

namespace detail {

inline TestCase parse_case(const json& j, size_t line_no) {
    auto fail = [&](const std::string& what) -> void {
        raise(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + what);
    };
    if (!j.is_object()) fail("record is not an object");
    TestCase c;
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
        fail("missing or empty 'id'");
    c.id = j["id"].get<std::string>();
    if (!j.contains("task") || !j["task"].is_string()) fail("missing 'task'");
    try {
        c.task = task_kind_from_name(j["task"].get<std::string>());
    } catch (const Error&) {
        fail("unknown task '" + j["task"].get<std::string>() + "'");
    }
    c.source = j.value("source", "");
    if (j.contains("input_vars")) {
        if (!j["input_vars"].is_object()) fail("'input_vars' is not an object");
        for (auto it = j["input_vars"].begin(); it != j["input_vars"].end(); ++it) {
            if (!it.value().is_string()) fail("input var '" + it.key() + "' is not a string");
            c.input_vars[it.key()] = it.value().get<std::string>();
        }
    }
    if (j.contains("references")) {
        if (!j["references"].is_array()) fail("'references' is not an array");
        for (const auto& r : j["references"]) {
            if (!r.is_string()) fail("reference is not a string");
            c.references.push_back(r.get<std::string>());
        }
    }
    if (j.contains("labels")) {
        if (!j["labels"].is_array()) fail("'labels' is not an array");
        for (const auto& l : j["labels"]) {
            if (!l.is_string()) fail("label is not a string");
            c.labels.insert(l.get<std::string>());
        }
    }
    if (j.contains("group")) {
        if (!j["group"].is_string()) fail("'group' is not a string");
        c.group = j["group"].get<std::string>();
    }
    if (j.contains("metadata")) c.metadata = j["metadata"];
    return c;
}

} // namespace detail

inline Suite load_suite_from_string(const std::string& content, const std::string& origin = "<string>") {
    Suite suite;
    suite.content_hash = sha256_hex(content);

    std::istringstream in(content);
    std::string line;
    size_t line_no = 0;
    bool saw_header = false;
    bool declared_segments = false;
    std::unordered_set<std::string> seen_ids;
    std::unordered_set<std::string> segment_set;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(ErrorCode::MalformedRecord,
                  origin + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!saw_header && suite.cases.empty() && j.is_object() && !j.contains("id") &&
            (j.contains("segments") || j.contains("name"))) {
            // optional suite header: {"name":..., "segments":[...]}
            saw_header = true;
            suite.name = j.value("name", "");
            if (j.contains("segments")) {
                if (!j["segments"].is_array())
                    raise(ErrorCode::MalformedRecord,
                          origin + " line " + std::to_string(line_no) + ": 'segments' is not an array");
                declared_segments = true;
                for (const auto& s : j["segments"]) {
                    suite.segments.push_back(s.get<std::string>());
                    segment_set.insert(s.get<std::string>());
                }
            }
            continue;
        }
        TestCase c = detail::parse_case(j, line_no);
        if (!seen_ids.insert(c.id).second)
            raise(ErrorCode::DuplicateId, "duplicate case id '" + c.id + "'");
        if (c.references_required() && c.references.empty())
            raise(ErrorCode::MissingReferences,
                  "case '" + c.id + "' is reference-based but has no references");
        if (c.group) {
            if (declared_segments) {
                if (!segment_set.count(*c.group))
                    raise(ErrorCode::MalformedRecord,
                          "case '" + c.id + "' group '" + *c.group + "' is not a declared segment");
            } else if (segment_set.insert(*c.group).second) {
                suite.segments.push_back(*c.group);
            }
        }
        suite.cases.push_back(std::move(c));
    }
    return suite;
}

inline Suite load_suite(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::ConfigError, "cannot open suite file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_suite_from_string(buf.str(), path);
}

namespace detail {

inline std::string render_demos(const PromptTemplate& tmpl, const std::vector<DemoPair>& demos) {
    std::string out;
    for (const auto& d : demos) {
        const std::string& fmt = tmpl.demo_format;
        size_t pos = 0;
        while (pos < fmt.size()) {
            size_t open = fmt.find("{{", pos);
            if (open == std::string::npos) {
                out.append(fmt, pos, std::string::npos);
                break;
            }
            out.append(fmt, pos, open - pos);
            size_t close = fmt.find("}}", open + 2);
            if (close == std::string::npos)
                raise(ErrorCode::UnresolvedPlaceholder, "unterminated placeholder in demo_format");
            std::string name = fmt.substr(open + 2, close - open - 2);
            if (name == "demo_input") out += d.input;
            else if (name == "demo_output") out += d.output;
            else raise(ErrorCode::UnresolvedPlaceholder, name);
            pos = close + 2;
        }
    }
    return out;
}

} // namespace detail

// Pure substitution: vars plus a rendered {{demos}} block. Any leftover
// placeholder is an error, so a rendered prompt never contains "{{".
inline std::string render_template(const PromptTemplate& tmpl,
                                   const std::map<std::string, std::string>& vars,
                                   const std::vector<DemoPair>& demos) {
    if (!demos.empty() && tmpl.body.find("{{demos}}") == std::string::npos)
        raise(ErrorCode::MissingDemoSlot, "template has no {{demos}} slot but demos were provided");
    std::string out;
    if (!tmpl.system_preamble.empty()) {
        out += tmpl.system_preamble;
        out += "\n\n";
    }
    const std::string& body = tmpl.body;
    size_t pos = 0;
    while (pos < body.size()) {
        size_t open = body.find("{{", pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        out.append(body, pos, open - pos);
        size_t close = body.find("}}", open + 2);
        if (close == std::string::npos)
            raise(ErrorCode::UnresolvedPlaceholder, "unterminated placeholder in body");
        std::string name = body.substr(open + 2, close - open - 2);
        if (name == "demos") {
            out += detail::render_demos(tmpl, demos);
        } else {
            auto it = vars.find(name);
            if (it == vars.end()) raise(ErrorCode::UnresolvedPlaceholder, name);
            out += it->second;
        }
        pos = close + 2;
    }
    return out;
}

inline std::string render_prompt(const PromptTemplate& tmpl, const TestCase& c,
                                 const std::vector<DemoPair>& demos) {
    std::map<std::string, std::string> vars = c.input_vars;
    vars["source"] = c.source;
    return render_template(tmpl, vars, demos);
}

// Deterministic demo selection. The case under evaluation (exclude_id) is
// never selected; k larger than the pool truncates.
inline std::vector<DemoPair> select_demos(const Suite& pool, int k, DemoStrategy strategy,
                                          uint64_t seed, const std::string& exclude_id) {
    std::vector<DemoPair> out;
    if (k <= 0) return out;

    std::vector<const TestCase*> eligible;
    eligible.reserve(pool.cases.size());
    for (const auto& c : pool.cases)
        if (c.id != exclude_id) eligible.push_back(&c);

    size_t take = std::min<size_t>(size_t(k), eligible.size());
    switch (strategy) {
        case DemoStrategy::FirstK:
            break;
        case DemoStrategy::Random: {
            Pcg32 rng(seed);
            fisher_yates_shuffle(eligible, rng);
            break;
        }
        case DemoStrategy::Similarity: {
            const TestCase* query = pool.find(exclude_id);
            if (!query)
                raise(ErrorCode::ConfigError,
                      "similarity strategy requires the excluded case to be in the pool");
            std::vector<std::pair<double, const TestCase*>> ranked;
            ranked.reserve(eligible.size());
            for (const TestCase* c : eligible)
                ranked.emplace_back(hashed_tf_cosine(query->source, c->source), c);
            std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second->id < b.second->id;
            });
            eligible.clear();
            for (const auto& [sim, c] : ranked) eligible.push_back(c);
            break;
        }
    }
    for (size_t i = 0; i < take; ++i) out.push_back(demo_pair(*eligible[i]));
    return out;
}

inline std::vector<DemoPair> select_demos(const Suite& pool, const FewShotConfig& cfg,
                                          const std::string& exclude_id) {
    return select_demos(pool, cfg.k, cfg.strategy, cfg.seed, exclude_id);
}

} // namespace genaiops
