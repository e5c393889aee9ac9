// genaiops CLI: run a suite against a model, compare runs, gate a release,
// sweep few-shot injection counts, search instructions, and run the fairness
// and safety evaluators standalone.
//
// Exit codes: 0 pass/success, 1 gate FAIL, 2 gate WARN, 64 usage or config
// error, 70 internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genaiops/adapters_live.hpp"
#include "genaiops/genaiops.hpp"

namespace {

using namespace genaiops;
using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::ConfigError, "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::MalformedRecord, path + ": " + e.what());
    }
    return j;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::ConfigError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ModelSpec load_model_spec(const std::string& path) {
    ModelSpec spec = ModelSpec::from_json(read_json_file(path));
    if (const char* ep = std::getenv("GENAIOPS_ENDPOINT")) spec.endpoint = ep;
    return spec;
}

MockConfig load_mock_config(const std::string& fixtures_path) {
    MockConfig cfg;
    if (fixtures_path.empty()) return cfg;
    std::ifstream in(fixtures_path, std::ios::binary);
    if (!in) raise(ErrorCode::ConfigError, "cannot open fixtures '" + fixtures_path + "'");
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(ErrorCode::MalformedRecord,
                  fixtures_path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        std::string text = j.at("text").get<std::string>();
        if (j.contains("key")) cfg.fixtures[j["key"].get<std::string>()] = text;
        else cfg.fixtures[sha256_hex(j.at("prompt").get<std::string>())] = text;
    }
    return cfg;
}

struct AdapterFlags {
    std::string mode = "mock";
    std::string cache;
    std::string fixtures;
};

std::unique_ptr<ModelAdapter> build_adapter(const AdapterFlags& flags, const ModelSpec& spec,
                                            AdapterMode& mode_out) {
    AdapterMode mode = adapter_mode_from_name(flags.mode);
    mode_out = mode;
    switch (mode) {
        case AdapterMode::Mock:
            return std::make_unique<MockAdapter>(load_mock_config(flags.fixtures));
        case AdapterMode::Replay: {
            if (flags.cache.empty())
                raise(ErrorCode::ConfigError, "--adapter replay requires --cache");
            auto transport = std::make_shared<ReplayTransport>(flags.cache);
            return std::make_unique<ChatAdapter>(transport, mock_capability());
        }
        case AdapterMode::Record: {
            if (flags.cache.empty())
                raise(ErrorCode::ConfigError, "--adapter record requires --cache");
            std::shared_ptr<Transport> inner;
            if (spec.endpoint.rfind("http", 0) == 0)
                inner = std::make_shared<LiveTransport>(spec.endpoint, live_options_from_spec(spec));
            else
                inner = std::make_shared<MockTransport>(load_mock_config(flags.fixtures));
            auto transport = std::make_shared<RecordTransport>(inner, flags.cache);
            return std::make_unique<ChatAdapter>(transport, mock_capability());
        }
        case AdapterMode::Live: {
            auto transport =
                std::make_shared<LiveTransport>(spec.endpoint, live_options_from_spec(spec));
            AdapterCapability cap{spec.want_logprobs, true, false};
            return std::make_unique<ChatAdapter>(transport, cap);
        }
    }
    raise(ErrorCode::ConfigError, "unknown adapter mode");
}

int usage_exit_code(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ConfigError:
        case ErrorCode::MalformedRecord:
        case ErrorCode::DuplicateId:
        case ErrorCode::MissingReferences:
        case ErrorCode::MissingDemoSlot:
        case ErrorCode::UnresolvedPlaceholder:
        case ErrorCode::IncomparableRuns:
        case ErrorCode::LexiconMissing:
        case ErrorCode::ApplicabilityError:
        case ErrorCode::EmptySuite:
        case ErrorCode::EmptyEvalSet:
        case ErrorCode::CacheMiss:
            return pipeline::kExitUsage;
        default:
            return pipeline::kExitInternal;
    }
}

std::vector<int> parse_ks(const std::string& csv) {
    std::vector<int> ks;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            ks.push_back(std::stoi(item));
        } catch (const std::exception&) {
            raise(ErrorCode::ConfigError, "--ks must be a comma-separated list of integers");
        }
    }
    return ks;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"genaiops: regression gate harness for switching LLM backends"};
    app.require_subcommand(1);

    std::string store_root = "runs";
    app.add_option("--store", store_root, "run store root directory")->capture_default_str();

    // --- run ---------------------------------------------------------------
    auto* cmd_run = app.add_subcommand("run", "evaluate a suite against one model and persist the run");
    std::string run_suite_path, run_template_path, run_model_path, run_lexicon;
    AdapterFlags run_adapter;
    int run_fewshot_k = 0, run_parallelism = 1;
    uint64_t run_seed = 0;
    std::string run_fewshot_strategy = "random";
    cmd_run->add_option("--suite", run_suite_path, "suite file (jsonl)")->required();
    cmd_run->add_option("--template", run_template_path, "prompt template (json)")->required();
    cmd_run->add_option("--model", run_model_path, "model spec (json)")->required();
    cmd_run->add_option("--fewshot", run_fewshot_k, "few-shot demo count");
    cmd_run->add_option("--fewshot-strategy", run_fewshot_strategy, "random|first_k|similarity");
    cmd_run->add_option("--seed", run_seed, "demo selection seed");
    cmd_run->add_option("--adapter", run_adapter.mode, "live|record|replay|mock")
        ->capture_default_str();
    cmd_run->add_option("--cache", run_adapter.cache, "record/replay cache file");
    cmd_run->add_option("--fixtures", run_adapter.fixtures, "mock fixture file (jsonl)");
    cmd_run->add_option("--parallelism", run_parallelism, "concurrent case evaluations");
    cmd_run->add_option("--lexicon", run_lexicon, "HAP lexicon file");

    // --- compare -----------------------------------------------------------
    auto* cmd_compare = app.add_subcommand("compare", "compare two persisted runs");
    std::string cmp_baseline, cmp_candidate;
    double cmp_tolerance = 0.0;
    cmd_compare->add_option("--baseline", cmp_baseline, "baseline run id or path")->required();
    cmd_compare->add_option("--candidate", cmp_candidate, "candidate run id or path")->required();
    cmd_compare->add_option("--tolerance", cmp_tolerance, "per-case drop tolerance for listing");

    // --- gate ----------------------------------------------------------------
    auto* cmd_gate = app.add_subcommand("gate", "gate a candidate run against a baseline and policy");
    std::string gate_baseline, gate_candidate, gate_policy_path, gate_format = "markdown";
    std::string gate_fairness_report;
    cmd_gate->add_option("--baseline", gate_baseline, "baseline run id or path")->required();
    cmd_gate->add_option("--candidate", gate_candidate, "candidate run id or path")->required();
    cmd_gate->add_option("--policy", gate_policy_path, "gate policy (json)")->required();
    cmd_gate->add_option("--format", gate_format, "json|markdown")->capture_default_str();
    cmd_gate->add_option("--fairness-report", gate_fairness_report,
                         "disparity report json to gate fairness thresholds against");

    // --- sweep ---------------------------------------------------------------
    auto* cmd_sweep = app.add_subcommand("sweep", "few-shot injection sweep over k");
    std::string sweep_suite, sweep_template, sweep_model, sweep_ks = "0,1,2,4,8";
    std::string sweep_scorer = "nll", sweep_out;
    uint64_t sweep_seed = 0;
    AdapterFlags sweep_adapter;
    cmd_sweep->add_option("--suite", sweep_suite)->required();
    cmd_sweep->add_option("--template", sweep_template)->required();
    cmd_sweep->add_option("--model", sweep_model)->required();
    cmd_sweep->add_option("--ks", sweep_ks, "comma-separated k values")->capture_default_str();
    cmd_sweep->add_option("--scorer", sweep_scorer, "nll or metric:<id>")->capture_default_str();
    cmd_sweep->add_option("--seed", sweep_seed, "demo selection seed");
    cmd_sweep->add_option("--adapter", sweep_adapter.mode)->capture_default_str();
    cmd_sweep->add_option("--cache", sweep_adapter.cache);
    cmd_sweep->add_option("--fixtures", sweep_adapter.fixtures);
    cmd_sweep->add_option("--out", sweep_out, "write the point table as json");

    // --- ape -----------------------------------------------------------------
    auto* cmd_ape = app.add_subcommand("ape", "automatic prompt-engineering search");
    std::string ape_suite, ape_config, ape_propose_model, ape_target_model, ape_out;
    AdapterFlags ape_propose_adapter, ape_target_adapter;
    cmd_ape->add_option("--suite", ape_suite)->required();
    cmd_ape->add_option("--config", ape_config, "ape config (json)")->required();
    cmd_ape->add_option("--propose-model", ape_propose_model)->required();
    cmd_ape->add_option("--target-model", ape_target_model)->required();
    cmd_ape->add_option("--out", ape_out, "write the search result as json");
    cmd_ape->add_option("--propose-adapter", ape_propose_adapter.mode)->capture_default_str();
    cmd_ape->add_option("--propose-cache", ape_propose_adapter.cache);
    cmd_ape->add_option("--propose-fixtures", ape_propose_adapter.fixtures);
    cmd_ape->add_option("--target-adapter", ape_target_adapter.mode)->capture_default_str();
    cmd_ape->add_option("--target-cache", ape_target_adapter.cache);
    cmd_ape->add_option("--target-fixtures", ape_target_adapter.fixtures);

    // --- fairness -------------------------------------------------------------
    auto* cmd_fair = app.add_subcommand("fairness", "fairness post-processing over scored examples");
    std::string fair_scores, fair_method, fair_cost = "fpr";
    double fair_theta = 0.1;
    uint64_t fair_seed = 0;
    cmd_fair->add_option("--scores", fair_scores, "scored examples (jsonl)")->required();
    cmd_fair->add_option("--method", fair_method, "roc|eo|ceo")->required();
    cmd_fair->add_option("--theta", fair_theta, "critical band half-width (roc)");
    cmd_fair->add_option("--cost", fair_cost, "fpr|fnr|<w_fp>,<w_fn> (ceo)");
    cmd_fair->add_option("--seed", fair_seed, "seed for randomized apply steps");

    // --- safety ----------------------------------------------------------------
    auto* cmd_safety = app.add_subcommand("safety", "scan a text file for PII and HAP");
    std::string safety_input, safety_lexicon;
    cmd_safety->add_option("--input", safety_input, "text file to scan")->required();
    cmd_safety->add_option("--lexicon", safety_lexicon, "HAP lexicon file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return pipeline::kExitUsage;
    }

    try {
        pipeline::RunStore store{store_root};

        if (cmd_run->parsed()) {
            Suite suite = load_suite(run_suite_path);
            PromptTemplate tmpl = PromptTemplate::from_json(read_json_file(run_template_path));
            ModelSpec spec = load_model_spec(run_model_path);
            FewShotConfig fewshot{run_fewshot_k, demo_strategy_from_name(run_fewshot_strategy),
                                  run_seed};
            AdapterMode mode;
            auto adapter = build_adapter(run_adapter, spec, mode);
            pipeline::RunOptions opts;
            opts.parallelism = run_parallelism;
            if (!run_lexicon.empty()) opts.lexicon = safety::Lexicon::from_file(run_lexicon);
            auto manifest = pipeline::run_suite(store, suite, tmpl, fewshot, spec, *adapter, mode, opts);
            std::cout << manifest.run_id << "\n";
            return 0;
        }

        if (cmd_compare->parsed()) {
            auto baseline = store.load_run(cmp_baseline);
            auto candidate = store.load_run(cmp_candidate);
            auto cmp = pipeline::compare_runs(baseline, candidate, cmp_tolerance);
            std::cout << cmp.to_json().dump(2) << "\n";
            return 0;
        }

        if (cmd_gate->parsed()) {
            auto baseline = store.load_run(gate_baseline);
            auto candidate = store.load_run(gate_candidate);
            auto policy = pipeline::GatePolicy::from_file(gate_policy_path);
            auto cmp = pipeline::compare_runs(baseline, candidate);
            if (!gate_fairness_report.empty()) {
                json fr = read_json_file(gate_fairness_report);
                fairness::DisparityReport rep;
                if (fr.contains("disparity")) fr = fr["disparity"];
                if (fr.contains("tpr_gap")) rep.tpr_gap = fr["tpr_gap"].get<double>();
                if (fr.contains("fpr_gap")) rep.fpr_gap = fr["fpr_gap"].get<double>();
                rep.selection_rate_gap = fr.value("selection_rate_gap", 0.0);
                cmp.fairness_report = rep;
            }
            auto verdict = pipeline::gate(cmp, policy);
            auto fmt = gate_format == "json" ? pipeline::ReportFormat::Json
                                             : pipeline::ReportFormat::Markdown;
            if (gate_format != "json" && gate_format != "markdown")
                raise(ErrorCode::ConfigError, "--format must be json or markdown");
            std::cout << pipeline::report(cmp, verdict, fmt);
            return verdict.exit_code();
        }

        if (cmd_sweep->parsed()) {
            Suite suite = load_suite(sweep_suite);
            PromptTemplate tmpl = PromptTemplate::from_json(read_json_file(sweep_template));
            ModelSpec spec = load_model_spec(sweep_model);
            AdapterMode mode;
            auto adapter = build_adapter(sweep_adapter, spec, mode);
            auto scorer = optimizer::ScorerSpec::parse(sweep_scorer);
            auto points = optimizer::few_shot_sweep(suite, parse_ks(sweep_ks), tmpl, *adapter,
                                                    spec, scorer, sweep_seed);
            std::cout << "| k | mean | stddev | cases |\n|---|---|---|---|\n";
            json out = json::array();
            for (const auto& pt : points) {
                std::cout << "| " << pt.k << " | " << pt.mean << " | " << pt.stddev << " | "
                          << pt.n_cases << " |\n";
                out.push_back(pt.to_json());
            }
            if (!sweep_out.empty()) {
                std::ofstream f(sweep_out, std::ios::binary);
                f << json{{"scorer", scorer.name()}, {"points", out}}.dump(2) << "\n";
            }
            return 0;
        }

        if (cmd_ape->parsed()) {
            Suite suite = load_suite(ape_suite);
            auto config = optimizer::ApeConfig::from_json(read_json_file(ape_config));
            ModelSpec propose_spec = load_model_spec(ape_propose_model);
            ModelSpec target_spec = load_model_spec(ape_target_model);
            AdapterMode m1, m2;
            auto propose = build_adapter(ape_propose_adapter, propose_spec, m1);
            auto target = build_adapter(ape_target_adapter, target_spec, m2);
            auto result =
                optimizer::ape_search(config, suite, *propose, propose_spec, *target, target_spec);
            json board = json::array();
            for (const auto& c : result.leaderboard)
                board.push_back({{"text", c.text},
                                 {"score", c.score},
                                 {"provenance", optimizer::provenance_name(c.provenance)}});
            json doc{{"best", {{"text", result.best.text}, {"score", result.best.score}}},
                     {"leaderboard", board},
                     {"rounds", result.rounds_log}};
            std::cout << doc.dump(2) << "\n";
            if (!ape_out.empty()) {
                std::ofstream f(ape_out, std::ios::binary);
                f << doc.dump(2) << "\n";
            }
            return 0;
        }

        if (cmd_fair->parsed()) {
            auto examples = fairness::load_scored_examples(fair_scores);
            json out{{"method", fair_method}};
            std::vector<int> labels;
            if (fair_method == "roc") {
                labels = fairness::reject_option_classify(examples, fair_theta);
                out["theta"] = fair_theta;
            } else if (fair_method == "eo") {
                auto policy = fairness::equalized_odds_fit(examples);
                labels = fairness::equalized_odds_apply(policy, examples, fair_seed);
                auto rates = fairness::group_rates(examples, policy.threshold);
                auto derived = fairness::derived_rates(policy, rates);
                out["policy"] = {{"p2p", policy.p2p}, {"n2p", policy.n2p}};
                out["analytic"] = {{"tpr_gap", std::abs(derived.tpr[0] - derived.tpr[1])},
                                   {"fpr_gap", std::abs(derived.fpr[0] - derived.fpr[1])},
                                   {"expected_error", derived.expected_error}};
            } else if (fair_method == "ceo") {
                fairness::CostSpec cost;
                if (fair_cost == "fpr") cost = fairness::CostSpec::fpr();
                else if (fair_cost == "fnr") cost = fairness::CostSpec::fnr();
                else {
                    auto comma = fair_cost.find(',');
                    if (comma == std::string::npos)
                        raise(ErrorCode::ConfigError, "--cost must be fpr, fnr or <w_fp>,<w_fn>");
                    cost = fairness::CostSpec::weighted(std::stod(fair_cost.substr(0, comma)),
                                                        std::stod(fair_cost.substr(comma + 1)));
                }
                auto mix = fairness::calibrated_eo_fit(examples, cost);
                auto scored = fairness::calibrated_eo_apply(mix, examples, fair_seed);
                labels.reserve(scored.size());
                for (const auto& s : scored) labels.push_back(s.label);
                out["alpha"] = mix.alpha;
                out["base_value"] = mix.base_value;
                out["cost"] = mix.cost;
            } else {
                raise(ErrorCode::ConfigError, "--method must be roc, eo or ceo");
            }
            out["disparity"] = fairness::disparity_report(examples, labels).to_json();
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (cmd_safety->parsed()) {
            std::string text = read_text_file(safety_input);
            auto findings = safety::scan_pii(text);
            json pii = json::array();
            for (const auto& f : findings)
                pii.push_back({{"kind", safety::pii_kind_name(f.kind)},
                               {"start", f.start},
                               {"end", f.end},
                               {"surface", f.surface}});
            json out{{"pii", pii}, {"redacted", safety::redact(text, findings)}};
            if (!safety_lexicon.empty()) {
                auto lexicon = safety::Lexicon::from_file(safety_lexicon);
                auto hap = safety::scan_hap(text, lexicon);
                json hits = json::array();
                for (const auto& h : hap.hits)
                    hits.push_back({{"term", h.term}, {"start", h.start}, {"end", h.end}});
                out["hap"] = {{"score", hap.score}, {"hits", hits}, {"lexicon_id", hap.lexicon_id}};
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage_exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return pipeline::kExitInternal;
    }
    return pipeline::kExitUsage;
}
