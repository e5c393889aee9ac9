#pragma once
// Regression-test core: persisted runs (manifest + per-case records +
// summary), baseline/candidate comparison, threshold gate and report
// generation. Runs are plain directories so CI can diff and archive them;
// records are sorted and timestamp-free, which makes replayed runs
// byte-identical.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "genaiops/adapters.hpp"
#include "genaiops/errors.hpp"
#include "genaiops/fairness.hpp"
#include "genaiops/metrics.hpp"
#include "genaiops/safety.hpp"
#include "genaiops/suite.hpp"

namespace genaiops::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Run identifiers
// ---------------------------------------------------------------------------

// ULID-style sortable id: 48-bit millisecond timestamp + 80 random bits in
// Crockford base32.
inline std::string make_run_id() {
    static const char* alphabet = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
    uint64_t ms = uint64_t(std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count());
    static std::atomic<uint64_t> counter{0};
    std::random_device rd;
    uint64_t r1 = (uint64_t(rd()) << 32) ^ rd() ^ (counter.fetch_add(1) << 1);
    uint64_t r2 = (uint64_t(rd()) << 32) ^ rd();

    std::string out(26, '0');
    for (int i = 9; i >= 0; --i) {
        out[size_t(i)] = alphabet[ms & 0x1F];
        ms >>= 5;
    }
    uint64_t rand_hi = r1 & 0xFFFF;          // 16 bits
    uint64_t rand_lo = r2;                   // 64 bits
    for (int i = 25; i >= 13; --i) {
        out[size_t(i)] = alphabet[rand_lo & 0x1F];
        rand_lo >>= 5;
    }
    for (int i = 12; i >= 10; --i) {
        out[size_t(i)] = alphabet[rand_hi & 0x1F];
        rand_hi >>= 5;
    }
    return out;
}

inline std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Run data model
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string run_id;
    std::string created_at;
    ModelSpec model;
    std::string suite_hash;
    std::string template_hash;
    std::string metric_config_hash;
    FewShotConfig fewshot;
    AdapterMode adapter_mode = AdapterMode::Mock;
    json metric_config = metrics::default_constants().to_json();

    json to_json() const {
        return json{{"run_id", run_id},
                    {"created_at", created_at},
                    {"model", model.to_json()},
                    {"suite_hash", suite_hash},
                    {"template_hash", template_hash},
                    {"metric_config_hash", metric_config_hash},
                    {"fewshot",
                     {{"k", fewshot.k},
                      {"strategy", demo_strategy_name(fewshot.strategy)},
                      {"seed", fewshot.seed}}},
                    {"adapter_mode", adapter_mode_name(adapter_mode)},
                    {"metric_config", metric_config}};
    }

    static RunManifest from_json(const json& j) {
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        m.created_at = j.value("created_at", "");
        m.model = ModelSpec::from_json(j.at("model"));
        m.suite_hash = j.at("suite_hash").get<std::string>();
        m.template_hash = j.value("template_hash", "");
        m.metric_config_hash = j.at("metric_config_hash").get<std::string>();
        if (j.contains("fewshot")) {
            m.fewshot.k = j["fewshot"].value("k", 0);
            m.fewshot.strategy = demo_strategy_from_name(j["fewshot"].value("strategy", "random"));
            m.fewshot.seed = j["fewshot"].value("seed", uint64_t(0));
        }
        m.adapter_mode = adapter_mode_from_name(j.value("adapter_mode", "mock"));
        if (j.contains("metric_config")) m.metric_config = j["metric_config"];
        return m;
    }
};

struct RunRecord {
    std::string case_id;
    std::string prompt;
    Completion completion;
    std::map<std::string, metrics::MetricValue> metric_values;  // keyed by metric name
    long pii_in = 0, pii_out = 0;
    double hap_in = 0.0, hap_out = 0.0;
    std::optional<std::string> error;

    json to_json() const {
        json usage{{"completion_tokens", completion.usage.completion_tokens},
                   {"prompt_tokens", completion.usage.prompt_tokens}};
        json comp{{"latency_ms", completion.latency_ms},
                  {"text", completion.text},
                  {"usage", usage}};
        if (completion.token_logprobs) {
            json lps = json::array();
            for (const auto& [tok, lp] : *completion.token_logprobs)
                lps.push_back(json::array({tok, lp}));
            comp["token_logprobs"] = lps;
        }
        json m = json::object();
        for (const auto& [name, mv] : metric_values)
            m[name] = json{{"value", mv.value}, {"details", mv.details}};
        json j{{"case_id", case_id}, {"completion", comp},  {"hap_in", hap_in},
               {"hap_out", hap_out}, {"metrics", m},        {"pii_in", pii_in},
               {"pii_out", pii_out}, {"prompt", prompt}};
        if (error) j["error"] = *error;
        return j;
    }

    static RunRecord from_json(const json& j) {
        RunRecord r;
        r.case_id = j.at("case_id").get<std::string>();
        r.prompt = j.value("prompt", "");
        const json& comp = j.at("completion");
        r.completion.text = comp.value("text", "");
        r.completion.latency_ms = comp.value("latency_ms", 0L);
        if (comp.contains("usage")) {
            r.completion.usage.prompt_tokens = comp["usage"].value("prompt_tokens", 0L);
            r.completion.usage.completion_tokens = comp["usage"].value("completion_tokens", 0L);
        }
        if (comp.contains("token_logprobs")) {
            std::vector<std::pair<std::string, double>> lps;
            for (const auto& e : comp["token_logprobs"])
                lps.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
            r.completion.token_logprobs = std::move(lps);
        }
        if (j.contains("metrics")) {
            for (auto it = j["metrics"].begin(); it != j["metrics"].end(); ++it) {
                metrics::MetricValue mv;
                mv.id = metrics::metric_id_from_name(it.key());
                mv.value = it.value().at("value").get<double>();
                mv.details = it.value().value("details", json::object());
                r.metric_values[it.key()] = mv;
            }
        }
        r.pii_in = j.value("pii_in", 0L);
        r.pii_out = j.value("pii_out", 0L);
        r.hap_in = j.value("hap_in", 0.0);
        r.hap_out = j.value("hap_out", 0.0);
        if (j.contains("error")) r.error = j["error"].get<std::string>();
        return r;
    }
};

struct RunData {
    RunManifest manifest;
    std::vector<RunRecord> records;
    fs::path dir;
};

// ---------------------------------------------------------------------------
// Run store (one directory per run)
// ---------------------------------------------------------------------------

class RunStore {
public:
    explicit RunStore(fs::path root) : root_(std::move(root)) {}

    const fs::path& root() const { return root_; }

    fs::path run_dir(const std::string& run_id) const { return root_ / run_id; }

    fs::path begin_run(const RunManifest& manifest) const {
        fs::path dir = run_dir(manifest.run_id);
        std::error_code ec;
        if (fs::exists(dir))
            raise(ErrorCode::StoreWriteError, "run directory already exists: " + dir.string());
        fs::create_directories(dir, ec);
        if (ec) raise(ErrorCode::StoreWriteError, "cannot create " + dir.string() + ": " + ec.message());
        write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
        return dir;
    }

    void finalize_run(const fs::path& dir, const std::vector<RunRecord>& records) const {
        std::string lines;
        for (const auto& r : records) lines += r.to_json().dump() + "\n";
        write_file(dir / "records.jsonl", lines);
        write_file(dir / "summary.json", summarize(records).dump(2) + "\n");
    }

    static json summarize(const std::vector<RunRecord>& records) {
        std::map<std::string, std::pair<double, size_t>> sums;
        long pii_in = 0, pii_out = 0, errors = 0;
        double hap_in_max = 0, hap_out_max = 0, hap_out_sum = 0;
        for (const auto& r : records) {
            for (const auto& [name, mv] : r.metric_values) {
                sums[name].first += mv.value;
                sums[name].second += 1;
            }
            pii_in += r.pii_in;
            pii_out += r.pii_out;
            hap_in_max = std::max(hap_in_max, r.hap_in);
            hap_out_max = std::max(hap_out_max, r.hap_out);
            hap_out_sum += r.hap_out;
            if (r.error) ++errors;
        }
        json m = json::object();
        for (const auto& [name, sn] : sums)
            m[name] = json{{"mean", sn.first / double(sn.second)}, {"n", sn.second}};
        return json{{"errors", errors},
                    {"metrics", m},
                    {"records", records.size()},
                    {"safety",
                     {{"hap_in_max", hap_in_max},
                      {"hap_out_max", hap_out_max},
                      {"hap_out_mean", records.empty() ? 0.0 : hap_out_sum / double(records.size())},
                      {"pii_in_total", pii_in},
                      {"pii_out_total", pii_out}}}};
    }

    RunData load_run(const std::string& run_id_or_path) const {
        fs::path dir = fs::exists(fs::path(run_id_or_path) / "manifest.json")
                           ? fs::path(run_id_or_path)
                           : run_dir(run_id_or_path);
        if (!fs::exists(dir / "manifest.json"))
            raise(ErrorCode::ConfigError, "no run found at " + dir.string());
        RunData data;
        data.dir = dir;
        data.manifest = RunManifest::from_json(read_json(dir / "manifest.json"));
        std::ifstream in(dir / "records.jsonl", std::ios::binary);
        if (!in) raise(ErrorCode::ConfigError, "missing records.jsonl in " + dir.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            data.records.push_back(RunRecord::from_json(json::parse(line)));
        }
        return data;
    }

private:
    static void write_file(const fs::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) raise(ErrorCode::StoreWriteError, "cannot write " + path.string());
        out << content;
        if (!out) raise(ErrorCode::StoreWriteError, "short write to " + path.string());
    }

    static json read_json(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) raise(ErrorCode::ConfigError, "cannot open " + path.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            raise(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
        }
        return j;
    }

    fs::path root_;
};

// ---------------------------------------------------------------------------
// run_suite
// ---------------------------------------------------------------------------

struct RunOptions {
    int parallelism = 1;
    safety::Lexicon lexicon = safety::Lexicon::from_terms({});  // empty: HAP scores 0
    safety::HapConfig hap;
    bool use_adapter_embeddings = false;
    metrics::MetricConstants constants;
};

namespace detail {

inline RunRecord evaluate_case(const TestCase& c, const Suite& suite, const PromptTemplate& tmpl,
                               const FewShotConfig& fewshot, const ModelSpec& spec,
                               ModelAdapter& adapter, const RunOptions& opts) {
    RunRecord rec;
    rec.case_id = c.id;
    std::string errors;
    auto note = [&](const std::string& what) {
        if (!errors.empty()) errors += "; ";
        errors += what;
    };
    try {
        auto demos = fewshot.k > 0 ? select_demos(suite, fewshot, c.id) : std::vector<DemoPair>{};
        rec.prompt = render_prompt(tmpl, c, demos);
    } catch (const Error& e) {
        rec.error = e.what();
        return rec;
    }
    rec.pii_in = long(safety::scan_pii(rec.prompt).size());
    rec.hap_in = safety::scan_hap(rec.prompt, opts.lexicon, opts.hap).score;

    Completion completion;
    try {
        completion = adapter.complete(spec, rec.prompt);
    } catch (const Error& e) {
        rec.error = e.what();
        return rec;
    }
    rec.completion = completion;
    rec.pii_out = long(safety::scan_pii(completion.text).size());
    rec.hap_out = safety::scan_hap(completion.text, opts.lexicon, opts.hap).score;

    metrics::Embedder embedder;
    if (opts.use_adapter_embeddings && adapter.capability().supports_embeddings)
        embedder = [&](const std::string& text) { return adapter.embed(spec, text); };

    for (metrics::MetricId id : metrics::applicable_metrics(c.task)) {
        try {
            metrics::MetricValue mv =
                metrics::score_case(id, completion.text, c, embedder, opts.constants);
            rec.metric_values[metrics::metric_id_name(id)] = mv;
        } catch (const Error& e) {
            note(std::string("metric ") + metrics::metric_id_name(id) + ": " + e.what());
        }
    }
    if (!errors.empty()) rec.error = errors;
    return rec;
}

} // namespace detail

// One record per case (failures captured per record); manifest written before
// any record, records sorted by case id, summary written last. The returned
// manifest carries the new run id.
inline RunManifest run_suite(const RunStore& store, const Suite& suite, const PromptTemplate& tmpl,
                             const FewShotConfig& fewshot, const ModelSpec& spec,
                             ModelAdapter& adapter, AdapterMode mode, const RunOptions& opts = {}) {
    spec.validate();
    RunManifest manifest;
    manifest.run_id = make_run_id();
    manifest.created_at = utc_timestamp();
    manifest.model = spec;
    manifest.suite_hash = suite.content_hash;
    manifest.template_hash = tmpl.hash();
    manifest.metric_config = opts.constants.to_json();
    manifest.metric_config_hash = opts.constants.hash();
    manifest.fewshot = fewshot;
    manifest.adapter_mode = mode;

    fs::path dir = store.begin_run(manifest);

    std::vector<RunRecord> records(suite.cases.size());
    int workers = std::max(1, opts.parallelism);
    if (workers == 1) {
        for (size_t i = 0; i < suite.cases.size(); ++i)
            records[i] =
                detail::evaluate_case(suite.cases[i], suite, tmpl, fewshot, spec, adapter, opts);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    size_t i = next.fetch_add(1);
                    if (i >= suite.cases.size()) return;
                    records[i] = detail::evaluate_case(suite.cases[i], suite, tmpl, fewshot, spec,
                                                       adapter, opts);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    std::sort(records.begin(), records.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.case_id < b.case_id; });
    store.finalize_run(dir, records);
    return manifest;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct MetricComparison {
    double baseline_mean = 0.0;
    double candidate_mean = 0.0;
    double delta = 0.0;  // candidate - baseline
    size_t n_cases = 0;
};

struct CaseExcerpt {
    std::string prompt;
    std::string baseline_text;
    std::string candidate_text;
    double worst_delta = 0.0;
    std::string worst_metric;
};

struct Comparison {
    std::string baseline_run;
    std::string candidate_run;
    std::string suite_hash;
    std::map<std::string, MetricComparison> metric_means;
    // metric -> case -> delta (aligned cases only)
    std::map<std::string, std::map<std::string, double>> case_deltas;
    // metric -> regressed case ids at the comparison tolerance
    std::map<std::string, std::vector<std::string>> regressed_cases;
    double per_case_tolerance = 0.0;
    long pii_out_baseline = 0, pii_out_candidate = 0;
    long pii_in_baseline = 0, pii_in_candidate = 0;
    double hap_out_max_baseline = 0.0, hap_out_max_candidate = 0.0;
    long baseline_errors = 0, candidate_errors = 0;
    std::map<std::string, CaseExcerpt> excerpts;  // worst regressed cases
    std::optional<fairness::DisparityReport> fairness_report;

    json to_json() const {
        json mm = json::object();
        for (const auto& [name, mc] : metric_means)
            mm[name] = json{{"baseline_mean", mc.baseline_mean},
                            {"candidate_mean", mc.candidate_mean},
                            {"delta", mc.delta},
                            {"n_cases", mc.n_cases}};
        json cd = json::object();
        for (const auto& [name, cases] : case_deltas) {
            json per = json::object();
            for (const auto& [cid, d] : cases) per[cid] = d;
            cd[name] = per;
        }
        json reg = json::object();
        for (const auto& [name, cases] : regressed_cases) reg[name] = cases;
        json ex = json::object();
        for (const auto& [cid, e] : excerpts)
            ex[cid] = json{{"prompt", e.prompt},
                           {"baseline_text", e.baseline_text},
                           {"candidate_text", e.candidate_text},
                           {"worst_delta", e.worst_delta},
                           {"worst_metric", e.worst_metric}};
        json j{{"baseline_run", baseline_run},
               {"candidate_run", candidate_run},
               {"suite_hash", suite_hash},
               {"metrics", mm},
               {"case_deltas", cd},
               {"regressed_cases", reg},
               {"per_case_tolerance", per_case_tolerance},
               {"safety",
                {{"pii_in_baseline", pii_in_baseline},
                 {"pii_in_candidate", pii_in_candidate},
                 {"pii_out_baseline", pii_out_baseline},
                 {"pii_out_candidate", pii_out_candidate},
                 {"hap_out_max_baseline", hap_out_max_baseline},
                 {"hap_out_max_candidate", hap_out_max_candidate}}},
               {"errors", {{"baseline", baseline_errors}, {"candidate", candidate_errors}}},
               {"excerpts", ex}};
        if (fairness_report) j["fairness"] = fairness_report->to_json();
        return j;
    }
};

// Pure function of two persisted runs. Requires identical suite and metric
// configuration; deltas are candidate minus baseline over aligned cases.
inline Comparison compare_runs(const RunData& baseline, const RunData& candidate,
                               double per_case_tolerance = 0.0) {
    if (baseline.manifest.suite_hash != candidate.manifest.suite_hash)
        raise(ErrorCode::IncomparableRuns, "suite hashes differ");
    if (baseline.manifest.metric_config_hash != candidate.manifest.metric_config_hash)
        raise(ErrorCode::IncomparableRuns, "metric configurations differ");

    Comparison cmp;
    cmp.baseline_run = baseline.manifest.run_id;
    cmp.candidate_run = candidate.manifest.run_id;
    cmp.suite_hash = baseline.manifest.suite_hash;
    cmp.per_case_tolerance = per_case_tolerance;

    std::map<std::string, const RunRecord*> base_by_id, cand_by_id;
    for (const auto& r : baseline.records) base_by_id[r.case_id] = &r;
    for (const auto& r : candidate.records) cand_by_id[r.case_id] = &r;

    std::set<std::string> metric_names;
    for (const auto& r : baseline.records)
        for (const auto& [name, mv] : r.metric_values) metric_names.insert(name);
    for (const auto& r : candidate.records)
        for (const auto& [name, mv] : r.metric_values) metric_names.insert(name);

    std::map<std::string, double> worst_delta_by_case;
    std::map<std::string, std::string> worst_metric_by_case;

    for (const auto& name : metric_names) {
        MetricComparison mc;
        for (const auto& [cid, base_rec] : base_by_id) {
            auto cit = cand_by_id.find(cid);
            if (cit == cand_by_id.end()) continue;
            auto bm = base_rec->metric_values.find(name);
            auto cm = cit->second->metric_values.find(name);
            if (bm == base_rec->metric_values.end() || cm == cit->second->metric_values.end())
                continue;
            double delta = cm->second.value - bm->second.value;
            mc.baseline_mean += bm->second.value;
            mc.candidate_mean += cm->second.value;
            ++mc.n_cases;
            cmp.case_deltas[name][cid] = delta;
            if (delta < -per_case_tolerance) cmp.regressed_cases[name].push_back(cid);
            auto it = worst_delta_by_case.find(cid);
            if (it == worst_delta_by_case.end() || delta < it->second) {
                worst_delta_by_case[cid] = delta;
                worst_metric_by_case[cid] = name;
            }
        }
        if (mc.n_cases > 0) {
            mc.baseline_mean /= double(mc.n_cases);
            mc.candidate_mean /= double(mc.n_cases);
            mc.delta = mc.candidate_mean - mc.baseline_mean;
        }
        cmp.metric_means[name] = mc;
    }

    for (const auto& r : baseline.records) {
        cmp.pii_out_baseline += r.pii_out;
        cmp.pii_in_baseline += r.pii_in;
        cmp.hap_out_max_baseline = std::max(cmp.hap_out_max_baseline, r.hap_out);
        if (r.error) ++cmp.baseline_errors;
    }
    for (const auto& r : candidate.records) {
        cmp.pii_out_candidate += r.pii_out;
        cmp.pii_in_candidate += r.pii_in;
        cmp.hap_out_max_candidate = std::max(cmp.hap_out_max_candidate, r.hap_out);
        if (r.error) ++cmp.candidate_errors;
    }

    // excerpts: the five worst-regressing cases
    std::vector<std::pair<double, std::string>> ordered;
    for (const auto& [cid, d] : worst_delta_by_case)
        if (d < 0.0) ordered.emplace_back(d, cid);
    std::sort(ordered.begin(), ordered.end());
    constexpr size_t kMaxExcerpts = 5;
    auto clip = [](const std::string& s) {
        return s.size() <= 240 ? s : s.substr(0, 240) + "...";
    };
    for (size_t i = 0; i < std::min(kMaxExcerpts, ordered.size()); ++i) {
        const std::string& cid = ordered[i].second;
        CaseExcerpt e;
        e.prompt = clip(base_by_id[cid]->prompt);
        e.baseline_text = clip(base_by_id[cid]->completion.text);
        e.candidate_text = clip(cand_by_id[cid]->completion.text);
        e.worst_delta = ordered[i].first;
        e.worst_metric = worst_metric_by_case[cid];
        cmp.excerpts[cid] = e;
    }
    return cmp;
}

// ---------------------------------------------------------------------------
// Gate policy and verdict
// ---------------------------------------------------------------------------

struct MetricRule {
    std::optional<double> min_mean;
    std::optional<double> max_mean_drop;
    std::optional<int> max_case_regressions;
    double per_case_drop_tolerance = 0.0;
};

struct GatePolicy {
    std::map<std::string, MetricRule> metric_rules;  // keyed by metric name
    long max_pii_findings = 0;
    double max_hap_score = 1.0;
    std::optional<double> max_tpr_gap;
    std::optional<double> max_fpr_gap;
    double warn_margin = 0.0;

    static GatePolicy from_json(const json& j) {
        GatePolicy p;
        if (j.contains("metrics")) {
            for (auto it = j["metrics"].begin(); it != j["metrics"].end(); ++it) {
                metrics::metric_id_from_name(it.key());  // reject unknown metric names
                MetricRule r;
                const json& v = it.value();
                if (v.contains("min_mean")) r.min_mean = v["min_mean"].get<double>();
                if (v.contains("max_mean_drop")) r.max_mean_drop = v["max_mean_drop"].get<double>();
                if (v.contains("max_case_regressions"))
                    r.max_case_regressions = v["max_case_regressions"].get<int>();
                r.per_case_drop_tolerance = v.value("per_case_drop_tolerance", 0.0);
                p.metric_rules[it.key()] = r;
            }
        }
        if (j.contains("safety")) {
            p.max_pii_findings = j["safety"].value("max_pii_findings", 0L);
            p.max_hap_score = j["safety"].value("max_hap_score", 1.0);
        }
        if (j.contains("fairness")) {
            if (j["fairness"].contains("max_tpr_gap"))
                p.max_tpr_gap = j["fairness"]["max_tpr_gap"].get<double>();
            if (j["fairness"].contains("max_fpr_gap"))
                p.max_fpr_gap = j["fairness"]["max_fpr_gap"].get<double>();
        }
        p.warn_margin = j.value("warn_margin", 0.0);
        if (p.warn_margin < 0) raise(ErrorCode::ConfigError, "warn_margin must be >= 0");
        return p;
    }

    static GatePolicy from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) raise(ErrorCode::ConfigError, "cannot open policy file '" + path + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            raise(ErrorCode::MalformedRecord, path + ": " + e.what());
        }
        return from_json(j);
    }
};

enum class GateStatus { Pass, Warn, Fail };

inline const char* gate_status_name(GateStatus s) {
    switch (s) {
        case GateStatus::Pass: return "PASS";
        case GateStatus::Warn: return "WARN";
        case GateStatus::Fail: return "FAIL";
    }
    return "UNKNOWN";
}

struct Violation {
    std::string rule;
    std::string subject;  // metric name, case id, or safety channel
    double baseline = 0.0;
    double candidate = 0.0;
    double threshold = 0.0;

    json to_json() const {
        return json{{"rule", rule},
                    {"subject", subject},
                    {"baseline", baseline},
                    {"candidate", candidate},
                    {"threshold", threshold}};
    }
};

struct Verdict {
    GateStatus status = GateStatus::Pass;
    std::vector<Violation> violations;  // hard failures
    std::vector<Violation> warnings;    // within the warn margin of a threshold

    json to_json() const {
        json v = json::array(), w = json::array();
        for (const auto& x : violations) v.push_back(x.to_json());
        for (const auto& x : warnings) w.push_back(x.to_json());
        return json{{"status", gate_status_name(status)}, {"violations", v}, {"warnings", w}};
    }

    int exit_code() const {
        switch (status) {
            case GateStatus::Pass: return 0;
            case GateStatus::Fail: return 1;
            case GateStatus::Warn: return 2;
        }
        return 70;
    }
};

// Evaluate every configured rule; all violations are reported, not just the
// first. WARN means no hard violation but at least one value inside the warn
// margin of its FAIL threshold.
inline Verdict gate(const Comparison& cmp, const GatePolicy& policy) {
    Verdict verdict;
    auto hard = [&](Violation v) { verdict.violations.push_back(std::move(v)); };
    auto soft = [&](Violation v) { verdict.warnings.push_back(std::move(v)); };

    for (const auto& [name, rule] : policy.metric_rules) {
        auto it = cmp.metric_means.find(name);
        if (it == cmp.metric_means.end() || it->second.n_cases == 0) continue;
        const MetricComparison& mc = it->second;

        if (rule.min_mean) {
            Violation v{"min_mean", name, mc.baseline_mean, mc.candidate_mean, *rule.min_mean};
            if (mc.candidate_mean < *rule.min_mean) hard(v);
            else if (mc.candidate_mean < *rule.min_mean + policy.warn_margin) soft(v);
        }
        if (rule.max_mean_drop) {
            double drop = mc.baseline_mean - mc.candidate_mean;
            Violation v{"max_mean_drop", name, mc.baseline_mean, mc.candidate_mean,
                        *rule.max_mean_drop};
            if (drop > *rule.max_mean_drop) hard(v);
            else if (drop > *rule.max_mean_drop - policy.warn_margin) soft(v);
        }
        if (rule.max_case_regressions) {
            std::vector<std::string> regressed;
            auto cit = cmp.case_deltas.find(name);
            if (cit != cmp.case_deltas.end()) {
                for (const auto& [cid, delta] : cit->second)
                    if (delta < -rule.per_case_drop_tolerance) regressed.push_back(cid);
            }
            if (long(regressed.size()) > *rule.max_case_regressions) {
                for (const auto& cid : regressed) {
                    double delta = cmp.case_deltas.at(name).at(cid);
                    hard({"per_case_drop:" + name, cid, 0.0, delta,
                          rule.per_case_drop_tolerance});
                }
            }
        }
    }

    {
        Violation v{"max_pii_findings", "pii_out", double(cmp.pii_out_baseline),
                    double(cmp.pii_out_candidate), double(policy.max_pii_findings)};
        if (cmp.pii_out_candidate > policy.max_pii_findings) hard(v);
    }
    {
        Violation v{"max_hap_score", "hap_out_max", cmp.hap_out_max_baseline,
                    cmp.hap_out_max_candidate, policy.max_hap_score};
        if (cmp.hap_out_max_candidate > policy.max_hap_score) hard(v);
        else if (cmp.hap_out_max_candidate > policy.max_hap_score - policy.warn_margin) soft(v);
    }
    if (cmp.fairness_report) {
        const auto& fr = *cmp.fairness_report;
        if (policy.max_tpr_gap && fr.tpr_gap) {
            Violation v{"max_tpr_gap", "fairness", 0.0, *fr.tpr_gap, *policy.max_tpr_gap};
            if (*fr.tpr_gap > *policy.max_tpr_gap) hard(v);
            else if (*fr.tpr_gap > *policy.max_tpr_gap - policy.warn_margin) soft(v);
        }
        if (policy.max_fpr_gap && fr.fpr_gap) {
            Violation v{"max_fpr_gap", "fairness", 0.0, *fr.fpr_gap, *policy.max_fpr_gap};
            if (*fr.fpr_gap > *policy.max_fpr_gap) hard(v);
            else if (*fr.fpr_gap > *policy.max_fpr_gap - policy.warn_margin) soft(v);
        }
    }

    if (!verdict.violations.empty()) verdict.status = GateStatus::Fail;
    else if (!verdict.warnings.empty()) verdict.status = GateStatus::Warn;
    else verdict.status = GateStatus::Pass;
    return verdict;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class ReportFormat { Json, Markdown };

inline std::string report(const Comparison& cmp, const Verdict& verdict, ReportFormat format) {
    if (format == ReportFormat::Json) {
        return json{{"comparison", cmp.to_json()}, {"verdict", verdict.to_json()}}.dump(2) + "\n";
    }
    std::ostringstream md;
    md << "# Gate report\n\n";
    md << "**Verdict: " << gate_status_name(verdict.status) << "**\n\n";
    md << "Baseline `" << cmp.baseline_run << "` vs candidate `" << cmp.candidate_run << "`\n\n";

    md << "## Metrics\n\n";
    md << "| metric | baseline | candidate | delta | cases |\n";
    md << "|---|---|---|---|---|\n";
    for (const auto& [name, mc] : cmp.metric_means) {
        md << "| " << name << " | " << mc.baseline_mean << " | " << mc.candidate_mean << " | "
           << mc.delta << " | " << mc.n_cases << " |\n";
    }
    md << "\n## Safety\n\n";
    md << "| channel | baseline | candidate |\n|---|---|---|\n";
    md << "| pii_out | " << cmp.pii_out_baseline << " | " << cmp.pii_out_candidate << " |\n";
    md << "| pii_in | " << cmp.pii_in_baseline << " | " << cmp.pii_in_candidate << " |\n";
    md << "| hap_out_max | " << cmp.hap_out_max_baseline << " | " << cmp.hap_out_max_candidate
       << " |\n";

    if (cmp.fairness_report) {
        md << "\n## Fairness\n\n";
        const auto& fr = *cmp.fairness_report;
        if (fr.tpr_gap) md << "- TPR gap: " << *fr.tpr_gap << "\n";
        if (fr.fpr_gap) md << "- FPR gap: " << *fr.fpr_gap << "\n";
        md << "- selection rate gap: " << fr.selection_rate_gap << "\n";
    }

    auto emit_rows = [&md](const std::vector<Violation>& rows) {
        md << "| rule | subject | baseline | candidate | threshold |\n|---|---|---|---|---|\n";
        for (const auto& v : rows) {
            md << "| " << v.rule << " | " << v.subject << " | " << v.baseline << " | "
               << v.candidate << " | " << v.threshold << " |\n";
        }
    };
    md << "\n## Violations\n\n";
    if (verdict.violations.empty()) {
        md << "none\n";
    } else {
        emit_rows(verdict.violations);
    }
    if (!verdict.warnings.empty()) {
        md << "\n## Warnings\n\n";
        emit_rows(verdict.warnings);
    }

    if (!cmp.excerpts.empty()) {
        md << "\n## Regressed cases\n\n";
        for (const auto& [cid, e] : cmp.excerpts) {
            md << "### " << cid << " (" << e.worst_metric << " " << e.worst_delta << ")\n\n";
            md << "Prompt:\n\n```\n" << e.prompt << "\n```\n\n";
            md << "Baseline output:\n\n```\n" << e.baseline_text << "\n```\n\n";
            md << "Candidate output:\n\n```\n" << e.candidate_text << "\n```\n\n";
        }
    }
    return md.str();
}

// CLI exit codes beyond the verdict mapping.
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;

} // namespace genaiops::pipeline
