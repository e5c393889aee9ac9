#pragma once
// Prompt optimization at desk scale: the propose-score-select instruction
// search (one model proposes instructions, another is scored on them) and
// the few-shot injection sweep that locates the loss-minimizing k. Both are
// deterministic under replay adapters and fixed seeds.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "genaiops/adapters.hpp"
#include "genaiops/errors.hpp"
#include "genaiops/metrics.hpp"
#include "genaiops/suite.hpp"

namespace genaiops::optimizer {

using json = nlohmann::json;
using metrics::MetricId;

// ---------------------------------------------------------------------------
// Scorer
// ---------------------------------------------------------------------------

// Either a functionality metric over completions, or the reference NLL
// ("loss"). NLL is exposed negated so higher-is-better holds everywhere.
struct ScorerSpec {
    bool use_nll = false;
    MetricId metric = MetricId::Rouge1;

    static ScorerSpec nll() { return {true, MetricId::Rouge1}; }
    static ScorerSpec for_metric(MetricId id) { return {false, id}; }

    static ScorerSpec parse(const std::string& s) {
        if (s == "nll") return nll();
        if (s.rfind("metric:", 0) == 0) return for_metric(metrics::metric_id_from_name(s.substr(7)));
        raise(ErrorCode::ConfigError, "scorer must be 'nll' or 'metric:<id>': " + s);
    }

    std::string name() const {
        return use_nll ? "nll" : std::string("metric:") + metrics::metric_id_name(metric);
    }
};

inline double score_one_case(ModelAdapter& adapter, const ModelSpec& spec,
                             const std::string& prompt, const TestCase& c,
                             const ScorerSpec& scorer) {
    if (scorer.use_nll) {
        auto refs = metrics::effective_references(c);
        return -adapter.score_reference_nll(spec, prompt, refs.front());
    }
    Completion completion = adapter.complete(spec, prompt);
    return metrics::score_case(scorer.metric, completion.text, c).value;
}

// ---------------------------------------------------------------------------
// Instruction search (propose-score-select)
// ---------------------------------------------------------------------------

enum class Provenance { Proposed, Resampled, Seed };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Proposed: return "proposed";
        case Provenance::Resampled: return "resampled";
        case Provenance::Seed: return "seed";
    }
    return "unknown";
}

struct InstructionCandidate {
    std::string text;
    double score = 0.0;
    Provenance provenance = Provenance::Proposed;
};

struct ApeConfig {
    int n_candidates = 8;
    int n_rounds = 2;
    PromptTemplate meta_prompt{
        "",
        "I gave a friend an instruction and {{n}} input-output pairs. "
        "Based on the pairs, the instruction was:\n\n{{demos}}",
        "Input: {{demo_input}}\nOutput: {{demo_output}}\n\n"};
    PromptTemplate resample_prompt{
        "", "Generate a variation of the following instruction while keeping its meaning:\n\n{{instruction}}",
        ""};
    ScorerSpec scorer = ScorerSpec::for_metric(MetricId::Rouge1);
    int demo_count = 3;
    double eval_fraction = 1.0;
    std::optional<std::string> seed_instruction;  // human baseline, always ranked
    int64_t base_seed = 0;

    void validate() const {
        if (n_candidates < 1) raise(ErrorCode::ConfigError, "n_candidates must be >= 1");
        if (n_rounds < 0) raise(ErrorCode::ConfigError, "n_rounds must be >= 0");
        if (eval_fraction <= 0.0 || eval_fraction > 1.0)
            raise(ErrorCode::ConfigError, "eval_fraction must be in (0,1]");
        if (demo_count < 1) raise(ErrorCode::ConfigError, "demo_count must be >= 1");
    }

    static ApeConfig from_json(const json& j) {
        ApeConfig c;
        c.n_candidates = j.value("n_candidates", 8);
        c.n_rounds = j.value("n_rounds", 2);
        if (j.contains("meta_prompt")) c.meta_prompt = PromptTemplate::from_json(j["meta_prompt"]);
        if (j.contains("resample_prompt"))
            c.resample_prompt = PromptTemplate::from_json(j["resample_prompt"]);
        if (j.contains("scorer")) c.scorer = ScorerSpec::parse(j["scorer"].get<std::string>());
        c.demo_count = j.value("demo_count", 3);
        c.eval_fraction = j.value("eval_fraction", 1.0);
        if (j.contains("seed_instruction"))
            c.seed_instruction = j["seed_instruction"].get<std::string>();
        c.base_seed = j.value("base_seed", 0L);
        c.validate();
        return c;
    }
};

namespace detail {

inline std::string first_nonempty_line(const std::string& text) {
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        size_t b = line.find_first_not_of(" \t\r");
        if (b != std::string::npos) {
            size_t e = line.find_last_not_of(" \t\r");
            return line.substr(b, e - b + 1);
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return "";
}

} // namespace detail

// Render the meta prompt with demonstrations and request n completions, one
// per seed offset, parsing one instruction per completion (first non-empty
// line). Duplicates collapse to the first occurrence.
inline std::vector<InstructionCandidate> propose_instructions(
    ModelAdapter& adapter, const ModelSpec& spec, const std::vector<DemoPair>& demos,
    const PromptTemplate& meta_prompt, int n, int64_t base_seed = 0) {
    if (n < 1) raise(ErrorCode::ConfigError, "proposal count must be >= 1");
    if (demos.empty()) raise(ErrorCode::ConfigError, "meta prompt needs at least one demo");
    std::map<std::string, std::string> vars{{"n", std::to_string(demos.size())}};
    std::string prompt = render_template(meta_prompt, vars, demos);

    std::vector<InstructionCandidate> out;
    std::set<std::string> seen;
    for (int i = 0; i < n; ++i) {
        ModelSpec per_call = spec;
        per_call.seed = base_seed + i;
        Completion completion = adapter.complete(per_call, prompt);
        std::string instruction = detail::first_nonempty_line(completion.text);
        if (instruction.empty()) continue;
        if (seen.insert(instruction).second)
            out.push_back({instruction, 0.0, Provenance::Proposed});
    }
    if (out.empty()) raise(ErrorCode::EmptyProposal, "no proposal parsed to a non-empty instruction");
    return out;
}

// Mean scorer value of `instruction` over the eval cases; prompts are the
// instruction followed by the case input.
inline double score_instruction(ModelAdapter& adapter, const ModelSpec& spec,
                                const std::string& instruction,
                                const std::vector<const TestCase*>& eval_cases,
                                const ScorerSpec& scorer) {
    if (eval_cases.empty()) raise(ErrorCode::EmptyEvalSet, "no eval cases");
    if (scorer.use_nll && !adapter.capability().supports_logprobs)
        raise(ErrorCode::CapabilityMissing, "nll scorer needs log-probabilities");
    double sum = 0.0;
    for (const TestCase* c : eval_cases) {
        std::string prompt = instruction + "\n\n" + c->source;
        sum += score_one_case(adapter, spec, prompt, *c, scorer);
    }
    return sum / double(eval_cases.size());
}

struct ApeResult {
    InstructionCandidate best;
    std::vector<InstructionCandidate> leaderboard;  // descending score, ties by text
    json rounds_log = json::array();
};

// Round 0 proposes and scores n_candidates (plus the human seed instruction
// when provided); each later round resamples variants of the current top
// quarter and merges. The global argmax after the final round wins, so the
// best score never decreases across rounds.
inline ApeResult ape_search(const ApeConfig& config, const Suite& suite,
                            ModelAdapter& propose_adapter, const ModelSpec& propose_spec,
                            ModelAdapter& target_adapter, const ModelSpec& target_spec) {
    config.validate();
    if (suite.cases.empty()) raise(ErrorCode::EmptySuite, "ape_search needs a non-empty suite");

    size_t eval_n = std::max<size_t>(
        1, size_t(std::ceil(config.eval_fraction * double(suite.cases.size()))));
    eval_n = std::min(eval_n, suite.cases.size());
    std::vector<const TestCase*> eval_cases;
    for (size_t i = 0; i < eval_n; ++i) eval_cases.push_back(&suite.cases[i]);
    for (const TestCase* c : eval_cases)
        if (!config.scorer.use_nll) metrics::require_applicable(config.scorer.metric, c->task);

    std::vector<DemoPair> demos;
    for (size_t i = 0; i < std::min<size_t>(size_t(config.demo_count), suite.cases.size()); ++i)
        demos.push_back(demo_pair(suite.cases[i]));

    auto sort_board = [](std::vector<InstructionCandidate>& board) {
        std::stable_sort(board.begin(), board.end(),
                         [](const InstructionCandidate& a, const InstructionCandidate& b) {
                             if (a.score != b.score) return a.score > b.score;
                             return a.text < b.text;
                         });
    };

    ApeResult result;
    std::set<std::string> scored_texts;
    std::vector<InstructionCandidate> board;

    auto score_and_add = [&](InstructionCandidate cand) {
        if (!scored_texts.insert(cand.text).second) return;
        cand.score = score_instruction(target_adapter, target_spec, cand.text, eval_cases,
                                       config.scorer);
        board.push_back(std::move(cand));
    };

    for (auto& cand : propose_instructions(propose_adapter, propose_spec, demos,
                                           config.meta_prompt, config.n_candidates,
                                           config.base_seed))
        score_and_add(std::move(cand));
    if (config.seed_instruction && !config.seed_instruction->empty())
        score_and_add({*config.seed_instruction, 0.0, Provenance::Seed});
    sort_board(board);
    result.rounds_log.push_back(
        {{"round", 0}, {"candidates", board.size()}, {"best_score", board.front().score}});

    int top_k = int(std::ceil(double(config.n_candidates) / 4.0));
    for (int round = 1; round <= config.n_rounds; ++round) {
        std::vector<std::string> parents;
        for (int p = 0; p < top_k && p < int(board.size()); ++p) parents.push_back(board[p].text);
        size_t added = 0;
        for (size_t p = 0; p < parents.size(); ++p) {
            std::map<std::string, std::string> vars{{"instruction", parents[p]}};
            std::string prompt = render_template(config.resample_prompt, vars, {});
            ModelSpec per_call = propose_spec;
            per_call.seed = config.base_seed + 1000L * round + int64_t(p);
            Completion completion = propose_adapter.complete(per_call, prompt);
            std::string variant = detail::first_nonempty_line(completion.text);
            if (variant.empty()) continue;
            if (scored_texts.count(variant)) continue;
            size_t before = board.size();
            score_and_add({variant, 0.0, Provenance::Resampled});
            added += board.size() - before;
        }
        sort_board(board);
        result.rounds_log.push_back(
            {{"round", round}, {"added", added}, {"best_score", board.front().score}});
    }

    result.leaderboard = board;
    result.best = board.front();
    return result;
}

// ---------------------------------------------------------------------------
// Few-shot sweep
// ---------------------------------------------------------------------------

struct SweepPoint {
    int k = 0;
    double mean = 0.0;
    double stddev = 0.0;
    size_t n_cases = 0;

    json to_json() const {
        return json{{"k", k}, {"mean", mean}, {"stddev", stddev}, {"n_cases", n_cases}};
    }
};

// For every k: leave-one-out demo selection per case, render, score; every k
// is evaluated over the identical case set so points are comparable.
inline std::vector<SweepPoint> few_shot_sweep(const Suite& suite, const std::vector<int>& ks,
                                              const PromptTemplate& tmpl, ModelAdapter& adapter,
                                              const ModelSpec& spec, const ScorerSpec& scorer,
                                              uint64_t seed) {
    if (suite.cases.empty()) raise(ErrorCode::EmptySuite, "sweep needs a non-empty suite");
    if (ks.empty()) raise(ErrorCode::ConfigError, "sweep needs at least one k");
    std::set<int> seen_k;
    for (int k : ks) {
        if (k < 0) raise(ErrorCode::ConfigError, "k must be >= 0");
        if (!seen_k.insert(k).second)
            raise(ErrorCode::ConfigError, "duplicate k=" + std::to_string(k));
    }
    if (scorer.use_nll && !adapter.capability().supports_logprobs)
        raise(ErrorCode::CapabilityMissing, "nll scorer needs log-probabilities");

    std::vector<SweepPoint> points;
    for (int k : ks) {
        std::vector<double> values;
        values.reserve(suite.cases.size());
        for (const TestCase& c : suite.cases) {
            auto demos = select_demos(suite, k, DemoStrategy::Random, seed, c.id);
            std::string prompt = render_prompt(tmpl, c, demos);
            double v = score_one_case(adapter, spec, prompt, c, scorer);
            if (scorer.use_nll) v = -v;  // sweep reports the loss itself
            values.push_back(v);
        }
        SweepPoint pt;
        pt.k = k;
        pt.n_cases = values.size();
        double sum = 0.0;
        for (double v : values) sum += v;
        pt.mean = sum / double(values.size());
        double var = 0.0;
        for (double v : values) var += (v - pt.mean) * (v - pt.mean);
        pt.stddev = std::sqrt(var / double(values.size()));
        points.push_back(pt);
    }
    return points;
}

// ---------------------------------------------------------------------------
// Model-by-metric compatibility matrix
// ---------------------------------------------------------------------------

struct ModelEntry {
    ModelSpec spec;
    std::shared_ptr<ModelAdapter> adapter;
};

struct CompatibilityCell {
    std::optional<double> mean;
    size_t scored_cases = 0;
    size_t errored_cases = 0;
};

struct PairwiseWins {
    std::string model_a;
    std::string model_b;
    size_t a_wins = 0;
    size_t b_wins = 0;
    size_t ties = 0;
};

struct CompatibilityMatrix {
    std::vector<std::string> model_ids;
    std::vector<MetricId> metric_ids;
    // model id -> metric -> cell
    std::map<std::string, std::map<MetricId, CompatibilityCell>> cells;
    std::map<std::string, std::vector<std::string>> errors;  // model id -> case ids
    std::vector<PairwiseWins> pairwise;                      // by the chosen scorer

    json to_json() const {
        json rows = json::object();
        for (const auto& [model, row] : cells) {
            json r = json::object();
            for (const auto& [mid, cell] : row) {
                json c{{"scored_cases", cell.scored_cases}, {"errored_cases", cell.errored_cases}};
                if (cell.mean) c["mean"] = *cell.mean;
                else c["error"] = true;
                r[metrics::metric_id_name(mid)] = c;
            }
            rows[model] = r;
        }
        json wins = json::array();
        for (const auto& w : pairwise)
            wins.push_back({{"model_a", w.model_a},
                            {"model_b", w.model_b},
                            {"a_wins", w.a_wins},
                            {"b_wins", w.b_wins},
                            {"ties", w.ties}});
        json err = json::object();
        for (const auto& [model, cases] : errors) err[model] = cases;
        return json{{"models", model_ids}, {"rows", rows}, {"pairwise", wins}, {"errors", err}};
    }
};

// The identical suite and template run against each model; per-cell failures
// are recorded without poisoning other cells.
inline CompatibilityMatrix compatibility_matrix(const std::vector<ModelEntry>& models,
                                                const Suite& suite, const PromptTemplate& tmpl,
                                                const ScorerSpec& scorer) {
    if (models.size() < 2)
        raise(ErrorCode::ConfigError, "compatibility matrix needs at least two models");
    if (suite.cases.empty()) raise(ErrorCode::EmptySuite, "compatibility needs a non-empty suite");

    CompatibilityMatrix out;
    // per model, per case: scorer value (for pairwise wins)
    std::map<std::string, std::map<std::string, double>> scorer_values;
    std::map<std::string, std::map<MetricId, std::pair<double, size_t>>> sums;

    for (const auto& entry : models) {
        out.model_ids.push_back(entry.spec.id);
        for (const TestCase& c : suite.cases) {
            try {
                std::string prompt = render_prompt(tmpl, c, {});
                Completion completion = entry.adapter->complete(entry.spec, prompt);
                for (MetricId id : metrics::applicable_metrics(c.task)) {
                    metrics::MetricValue mv;
                    try {
                        mv = metrics::score_case(id, completion.text, c);
                    } catch (const Error&) {
                        continue;  // metric-level failure only skips the metric
                    }
                    auto& [sum, n] = sums[entry.spec.id][id];
                    sum += mv.value;
                    ++n;
                }
                scorer_values[entry.spec.id][c.id] =
                    scorer.use_nll
                        ? -entry.adapter->score_reference_nll(
                              entry.spec, prompt, metrics::effective_references(c).front())
                        : metrics::score_case(scorer.metric, completion.text, c).value;
            } catch (const Error&) {
                out.errors[entry.spec.id].push_back(c.id);
            }
        }
    }

    std::set<MetricId> all_metrics;
    for (const TestCase& c : suite.cases)
        for (MetricId id : metrics::applicable_metrics(c.task)) all_metrics.insert(id);
    out.metric_ids.assign(all_metrics.begin(), all_metrics.end());

    for (const auto& entry : models) {
        for (MetricId id : out.metric_ids) {
            CompatibilityCell cell;
            auto mit = sums.find(entry.spec.id);
            if (mit != sums.end()) {
                auto it = mit->second.find(id);
                if (it != mit->second.end() && it->second.second > 0) {
                    cell.mean = it->second.first / double(it->second.second);
                    cell.scored_cases = it->second.second;
                }
            }
            cell.errored_cases = out.errors.count(entry.spec.id)
                                     ? out.errors.at(entry.spec.id).size()
                                     : 0;
            out.cells[entry.spec.id][id] = cell;
        }
    }

    for (size_t i = 0; i < models.size(); ++i) {
        for (size_t j = i + 1; j < models.size(); ++j) {
            PairwiseWins w;
            w.model_a = models[i].spec.id;
            w.model_b = models[j].spec.id;
            const auto& va = scorer_values[w.model_a];
            const auto& vb = scorer_values[w.model_b];
            for (const TestCase& c : suite.cases) {
                auto ia = va.find(c.id), ib = vb.find(c.id);
                if (ia == va.end() || ib == vb.end()) continue;
                if (ia->second > ib->second) ++w.a_wins;
                else if (ib->second > ia->second) ++w.b_wins;
                else ++w.ties;
            }
            out.pairwise.push_back(w);
        }
    }
    return out;
}

} // namespace genaiops::optimizer
