// Acceptance suite: one test per release criterion, each printing a
// [criterion] PASS/FAIL line. The whole binary runs offline (mock/replay
// adapters only) and is budgeted to finish well inside the desk-scale limit.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "genaiops/genaiops.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace genaiops;
using Clock = std::chrono::steady_clock;

namespace {

const Clock::time_point g_binary_start = Clock::now();

class Criterion : public ::testing::Test {
protected:
    void TearDown() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::printf("[criterion] %s: %s\n", info->name(), HasFailure() ? "FAIL" : "PASS");
        std::fflush(stdout);
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ModelSpec mock_spec(const std::string& id = "mock-model") {
    ModelSpec spec;
    spec.id = id;
    spec.model_name = id;
    spec.endpoint = "mock";
    return spec;
}

} // namespace

// ---------------------------------------------------------------------------
// 1. Applicability matrix reproduces the task table cell-for-cell
// ---------------------------------------------------------------------------

TEST_F(Criterion, applicability_matrix) {
    using metrics::MetricFamily;
    struct Cell {
        MetricFamily family;
        bool summarization, content_generation, question_answering, entity_extraction;
    };
    // the 9 x 4 table, row by row
    const Cell table[] = {
        {MetricFamily::Rouge, true, true, true, true},
        {MetricFamily::Sari, true, false, false, false},
        {MetricFamily::Meteor, false, true, true, false},
        {MetricFamily::TextQuality, true, true, false, false},
        {MetricFamily::Bleu, true, true, true, false},
        {MetricFamily::SentenceSimilarity, true, false, false, false},
        {MetricFamily::Readability, true, true, false, false},
        {MetricFamily::ExactMatch, false, false, true, true},
        {MetricFamily::MultiLabel, false, false, false, true},
    };
    ASSERT_EQ(std::size(table), 9u);
    for (const Cell& cell : table) {
        EXPECT_EQ(metrics::family_applicable(cell.family, TaskKind::Summarization),
                  cell.summarization);
        EXPECT_EQ(metrics::family_applicable(cell.family, TaskKind::ContentGeneration),
                  cell.content_generation);
        EXPECT_EQ(metrics::family_applicable(cell.family, TaskKind::QuestionAnswering),
                  cell.question_answering);
        EXPECT_EQ(metrics::family_applicable(cell.family, TaskKind::EntityExtraction),
                  cell.entity_extraction);
    }
}

// ---------------------------------------------------------------------------
// 2. Metric oracle equivalence on 200 random token-sequence pairs
// ---------------------------------------------------------------------------

TEST_F(Criterion, metric_oracle_equivalence) {
    auto t0 = Clock::now();
    oracle::Lcg rng(20240816);
    const auto& k = metrics::default_constants();
    for (int iter = 0; iter < 200; ++iter) {
        auto cand = oracle::random_tokens(rng, 12, 5);
        auto ref = oracle::random_tokens(rng, 12, 5);
        if (ref.empty()) ref.push_back("alpha");
        std::string cand_s = oracle::join(cand);
        std::vector<std::string> refs_s{oracle::join(ref)};
        std::vector<oracle::Tokens> refs_t{ref};

        ASSERT_NEAR(metrics::rouge_n(cand_s, refs_s, 1).value, oracle::rouge_n(cand, refs_t, 1),
                    1e-12);
        ASSERT_NEAR(metrics::rouge_n(cand_s, refs_s, 2).value, oracle::rouge_n(cand, refs_t, 2),
                    1e-12);
        ASSERT_NEAR(metrics::rouge_l(cand_s, refs_s).value,
                    oracle::rouge_l(cand, refs_t, k.rouge_l_beta), 1e-12);
        ASSERT_NEAR(metrics::bleu(cand_s, refs_s).value,
                    cand.empty() ? 0.0 : oracle::bleu(cand, refs_t, k.bleu_max_n, k.bleu_epsilon),
                    1e-12);
        ASSERT_NEAR(metrics::text_quality(cand_s, refs_s).value,
                    oracle::text_quality(cand, refs_t), 1e-12);
    }
    EXPECT_LT(seconds_since(t0), 5.0);
}

// ---------------------------------------------------------------------------
// 3. Pinned-value fixtures
// ---------------------------------------------------------------------------

TEST_F(Criterion, pinned_value_fixtures) {
    EXPECT_NEAR(metrics::bleu("the cat sat", {"the cat sat on the mat"}, 2).value,
                std::exp(-1.0), 1e-9);
    EXPECT_NEAR(metrics::meteor("the cat sat", "the cat sat").value, 1.0 - 0.5 / 27.0, 1e-9);
    EXPECT_NEAR(metrics::sentence_similarity("the cat", "the dog").value, 0.5, 1e-12);
}

// ---------------------------------------------------------------------------
// 4. Equalized odds on a 10,000-example two-group dataset
// ---------------------------------------------------------------------------

TEST_F(Criterion, equalized_odds) {
    auto t0 = Clock::now();
    std::vector<fairness::ScoredExample> data;
    auto add = [&](fairness::Group g, long tp, long fn, long fp, long tn) {
        for (long i = 0; i < tp; ++i) data.push_back({0.9, g, 1});
        for (long i = 0; i < fn; ++i) data.push_back({0.1, g, 1});
        for (long i = 0; i < fp; ++i) data.push_back({0.9, g, 0});
        for (long i = 0; i < tn; ++i) data.push_back({0.1, g, 0});
    };
    // unequal base rates: 0.6 positives vs 0.3 positives
    add(fairness::Group::Privileged, 2550, 450, 600, 1400);    // tpr .85, fpr .30
    add(fairness::Group::Unprivileged, 825, 675, 350, 3150);   // tpr .55, fpr .10
    ASSERT_EQ(data.size(), 10000u);

    auto policy = fairness::equalized_odds_fit(data);
    auto rates = fairness::group_rates(data, 0.5);
    auto derived = fairness::derived_rates(policy, rates);
    EXPECT_LE(std::abs(derived.tpr[0] - derived.tpr[1]), 1e-6);
    EXPECT_LE(std::abs(derived.fpr[0] - derived.fpr[1]), 1e-6);

    oracle::EoGroup g0{0.85, 0.30, 3000, 2000};
    oracle::EoGroup g1{0.55, 0.10, 1500, 3500};
    auto grid = oracle::eo_grid_search(g0, g1, 1e-3);
    ASSERT_TRUE(grid.found);
    EXPECT_NEAR(derived.expected_error, grid.error, 1e-6);
    EXPECT_LT(seconds_since(t0), 10.0);
}

// ---------------------------------------------------------------------------
// 5. Calibrated equalized odds: closed form + Monte Carlo
// ---------------------------------------------------------------------------

TEST_F(Criterion, calibrated_equalized_odds) {
    std::vector<fairness::ScoredExample> data;
    for (int i = 0; i < 25000; ++i) {
        data.push_back({0.2, fairness::Group::Privileged, 0});
        data.push_back({0.8, fairness::Group::Privileged, 1});
        data.push_back({0.4, fairness::Group::Unprivileged, 0});
        data.push_back({0.9, fairness::Group::Unprivileged, 1});
    }
    auto mix = fairness::calibrated_eo_fit(data, fairness::CostSpec::fpr());
    // c_g = 0.2, c_other = 0.4, c_trivial_g = 0.5 -> alpha = 2/3
    EXPECT_NEAR(mix.alpha[0], (0.4 - 0.2) / (0.5 - 0.2), 1e-12);
    EXPECT_DOUBLE_EQ(mix.alpha[1], 0.0);

    auto out = fairness::calibrated_eo_apply(mix, data, 20240816);
    double fp_sum[2] = {0, 0}, post_mean[2] = {0, 0}, pre_mean[2] = {0, 0};
    long neg[2] = {0, 0}, n[2] = {0, 0};
    for (size_t i = 0; i < data.size(); ++i) {
        size_t g = size_t(data[i].group);
        ++n[g];
        post_mean[g] += out[i].score;
        pre_mean[g] += data[i].score;
        if (!data[i].y_true) {
            ++neg[g];
            fp_sum[g] += out[i].score;
        }
    }
    EXPECT_LE(std::abs(fp_sum[0] / neg[0] - fp_sum[1] / neg[1]), 1e-2);
    for (int g = 0; g < 2; ++g)
        EXPECT_NEAR(post_mean[g] / n[g], pre_mean[g] / n[g], 1e-3);
}

// ---------------------------------------------------------------------------
// 6. Reject option classification on an exhaustive 64-score grid
// ---------------------------------------------------------------------------

TEST_F(Criterion, reject_option) {
    std::vector<fairness::ScoredExample> grid;
    for (int i = 0; i < 64; ++i) {
        fairness::ScoredExample e;
        e.score = double(i) / 63.0;
        e.group = i % 2 ? fairness::Group::Unprivileged : fairness::Group::Privileged;
        e.y_true = i % 3 == 0;
        grid.push_back(e);
    }
    auto full_band = fairness::reject_option_classify(grid, 0.5);
    for (size_t i = 0; i < grid.size(); ++i)
        EXPECT_EQ(full_band[i], grid[i].group == fairness::Group::Unprivileged ? 1 : 0) << i;

    auto zero_band = fairness::reject_option_classify(grid, 0.0);
    for (size_t i = 0; i < grid.size(); ++i) {
        if (grid[i].score == 0.5) continue;  // in-band rule (no grid point hits exactly 0.5)
        EXPECT_EQ(zero_band[i], grid[i].score >= 0.5 ? 1 : 0) << i;
    }
}

// ---------------------------------------------------------------------------
// 7. Replay determinism: record a 20-case run, replay twice
// ---------------------------------------------------------------------------

TEST_F(Criterion, replay_determinism) {
    testutil::TempDir dir;
    pipeline::RunStore store(dir.file("runs"));
    std::string content;
    for (int i = 0; i < 20; ++i) {
        content += R"({"id":"case)" + std::to_string(100 + i) +
                   R"(","task":"summarization","source":"body of document )" + std::to_string(i) +
                   R"(","references":["reference )" + std::to_string(i) + R"("]})" + "\n";
    }
    Suite suite = load_suite_from_string(content);
    ASSERT_EQ(suite.cases.size(), 20u);
    PromptTemplate tmpl{"", "{{demos}}Summarize: {{source}}",
                        "Q: {{demo_input}}\nA: {{demo_output}}\n"};
    FewShotConfig fewshot{3, DemoStrategy::Random, 99};
    std::string cache = dir.file("cache.jsonl").string();

    ChatAdapter recorder(std::make_shared<RecordTransport>(std::make_shared<MockTransport>(), cache),
                         mock_capability());
    auto rec_manifest = pipeline::run_suite(store, suite, tmpl, fewshot, mock_spec(), recorder,
                                            AdapterMode::Record);
    std::string bytes0 = testutil::read_file(store.run_dir(rec_manifest.run_id) / "records.jsonl");
    ASSERT_FALSE(bytes0.empty());

    for (int round = 0; round < 2; ++round) {
        ChatAdapter replayer(std::make_shared<ReplayTransport>(cache), mock_capability());
        auto manifest = pipeline::run_suite(store, suite, tmpl, fewshot, mock_spec(), replayer,
                                            AdapterMode::Replay);
        EXPECT_EQ(testutil::read_file(store.run_dir(manifest.run_id) / "records.jsonl"), bytes0)
            << "replay round " << round;
    }
}

// ---------------------------------------------------------------------------
// 8. Gate semantics through the CLI (exit codes and cited subjects)
// ---------------------------------------------------------------------------

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    std::string command = std::string(GENAIOPS_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    EXPECT_NE(pipe, nullptr);
    CliResult result;
    char buf[4096];
    while (size_t got = fread(buf, 1, sizeof(buf), pipe)) result.output.append(buf, got);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

} // namespace

TEST_F(Criterion, gate_semantics_cli) {
    auto t0 = Clock::now();
    testutil::TempDir dir;
    auto p = [&](const std::string& name) { return dir.file(name).string(); };

    std::string suite_content;
    json good_fixtures = json::array(), degraded_fixtures = json::array(),
         leaky_fixtures = json::array();
    PromptTemplate tmpl{"", "Summarize: {{source}}", ""};
    for (int i = 0; i < 20; ++i) {
        std::string cid = "case" + std::to_string(100 + i);
        std::string source = "document number " + std::to_string(i) + " body";
        std::string reference = "reference summary " + std::to_string(i);
        suite_content += json{{"id", cid},
                              {"task", "summarization"},
                              {"source", source},
                              {"references", json::array({reference})}}
                             .dump() +
                         "\n";
        std::string prompt = "Summarize: " + source;
        good_fixtures.push_back(json{{"prompt", prompt}, {"text", reference}});
        degraded_fixtures.push_back(json{
            {"prompt", prompt},
            {"text", i == 7 ? std::string("completely unrelated words") : reference}});
        leaky_fixtures.push_back(json{
            {"prompt", prompt},
            {"text", i == 3 ? reference + " contact leak@example.com" : reference}});
    }
    testutil::write_file(p("suite.jsonl"), suite_content);
    testutil::write_file(p("template.json"), json{{"body", "Summarize: {{source}}"}}.dump());
    testutil::write_file(p("model.json"),
                         json{{"id", "mock-model"}, {"endpoint", "mock"}}.dump());
    auto write_fixtures = [&](const std::string& name, const json& rows) {
        std::string text;
        for (const auto& row : rows) text += row.dump() + "\n";
        testutil::write_file(p(name), text);
    };
    write_fixtures("good.jsonl", good_fixtures);
    write_fixtures("degraded.jsonl", degraded_fixtures);
    write_fixtures("leaky.jsonl", leaky_fixtures);
    testutil::write_file(
        p("policy.json"),
        json{{"metrics",
              {{"rouge1",
                {{"max_mean_drop", 0.02}, {"max_case_regressions", 0},
                 {"per_case_drop_tolerance", 0.1}}}}},
             {"safety", {{"max_pii_findings", 0}, {"max_hap_score", 1.0}}}}
            .dump());

    std::string base_args = "--store " + p("runs") + " run --suite " + p("suite.jsonl") +
                            " --template " + p("template.json") + " --model " + p("model.json") +
                            " --adapter mock --fixtures ";
    auto baseline = run_cli(base_args + p("good.jsonl"));
    ASSERT_EQ(baseline.exit_code, 0) << baseline.output;
    std::string baseline_id = trim(baseline.output);

    auto candidate = run_cli(base_args + p("good.jsonl"));
    ASSERT_EQ(candidate.exit_code, 0) << candidate.output;
    std::string candidate_id = trim(candidate.output);

    // identical runs + non-negative thresholds -> PASS, exit 0
    auto pass = run_cli("--store " + p("runs") + " gate --baseline " + baseline_id +
                        " --candidate " + candidate_id + " --policy " + p("policy.json") +
                        " --format json");
    EXPECT_EQ(pass.exit_code, 0) << pass.output;
    EXPECT_NE(pass.output.find("\"status\": \"PASS\""), std::string::npos);

    // single-case rouge drop beyond tolerance -> FAIL, exit 1, citing the case
    auto degraded = run_cli(base_args + p("degraded.jsonl"));
    ASSERT_EQ(degraded.exit_code, 0) << degraded.output;
    auto fail = run_cli("--store " + p("runs") + " gate --baseline " + baseline_id +
                        " --candidate " + trim(degraded.output) + " --policy " + p("policy.json") +
                        " --format json");
    EXPECT_EQ(fail.exit_code, 1) << fail.output;
    EXPECT_NE(fail.output.find("case107"), std::string::npos) << fail.output;

    // one PII finding under a zero budget -> FAIL citing the safety rule
    auto leaky = run_cli(base_args + p("leaky.jsonl"));
    ASSERT_EQ(leaky.exit_code, 0) << leaky.output;
    auto pii_fail = run_cli("--store " + p("runs") + " gate --baseline " + baseline_id +
                            " --candidate " + trim(leaky.output) + " --policy " + p("policy.json") +
                            " --format json");
    EXPECT_EQ(pii_fail.exit_code, 1) << pii_fail.output;
    EXPECT_NE(pii_fail.output.find("max_pii_findings"), std::string::npos);

    // warn band: candidate mean sits inside the margin above min_mean -> exit 2
    testutil::write_file(
        p("warn_policy.json"),
        json{{"metrics", {{"rouge1", {{"min_mean", 0.999}}}}}, {"warn_margin", 0.01}}.dump());
    auto warn = run_cli("--store " + p("runs") + " gate --baseline " + baseline_id +
                        " --candidate " + candidate_id + " --policy " + p("warn_policy.json") +
                        " --format json");
    EXPECT_EQ(warn.exit_code, 2) << warn.output;
    EXPECT_NE(warn.output.find("\"status\": \"WARN\""), std::string::npos);

    // usage error path maps to exit 64
    auto bad = run_cli("--store " + p("runs") + " gate --baseline nope --candidate nope2 --policy " +
                       p("policy.json"));
    EXPECT_EQ(bad.exit_code, 64);

    EXPECT_LT(seconds_since(t0), 30.0);
}

// ---------------------------------------------------------------------------
// 9. Few-shot sweep fixtures
// ---------------------------------------------------------------------------

namespace {

Suite sweep_suite() {
    std::string content;
    const char* names[] = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot"};
    for (int i = 0; i < 6; ++i) {
        content += json{{"id", std::string("s") + std::to_string(i)},
                        {"task", "summarization"},
                        {"source", std::string(names[i]) + " document"},
                        {"references", json::array({std::string(names[i]) + " reference"})}}
                       .dump() +
                   "\n";
    }
    return load_suite_from_string(content);
}

PromptTemplate sweep_template() {
    return {"", "{{demos}}Summarize: {{source}}", "Q: {{demo_input}}\nA: {{demo_output}}\n"};
}

class UShapeAdapter : public MockAdapter {
public:
    double score_reference_nll(const ModelSpec&, const std::string& prompt,
                               const std::string&) override {
        int k = 0;
        size_t pos = 0;
        while ((pos = prompt.find("Q: ", pos)) != std::string::npos) {
            ++k;
            pos += 3;
        }
        return nll_for_k(k);
    }
    static double nll_for_k(int k) {
        return std::max(0.0, 1.0 - 0.3 * k) + 0.15 * std::max(0, k - 3);
    }
};

} // namespace

TEST_F(Criterion, few_shot_sweep) {
    Suite suite = sweep_suite();
    auto spec = mock_spec();

    // k=0 point bitwise-equals an independent zero-shot evaluation
    MockAdapter plain;
    auto metric_scorer = optimizer::ScorerSpec::for_metric(metrics::MetricId::Rouge1);
    auto zero = optimizer::few_shot_sweep(suite, {0}, sweep_template(), plain, spec,
                                          metric_scorer, 5);
    double sum = 0;
    for (const auto& c : suite.cases) {
        Completion completion = plain.complete(spec, render_prompt(sweep_template(), c, {}));
        sum += metrics::score_case(metrics::MetricId::Rouge1, completion.text, c).value;
    }
    EXPECT_EQ(zero[0].mean, sum / double(suite.cases.size()));

    // uniform-logprob mock: mean NLL = ln V for every k
    MockConfig cfg;
    cfg.vocab_size = 16;
    MockAdapter uniform(cfg);
    auto flat = optimizer::few_shot_sweep(suite, {0, 1, 2, 4}, sweep_template(), uniform, spec,
                                          optimizer::ScorerSpec::nll(), 5);
    for (const auto& pt : flat) EXPECT_NEAR(pt.mean, std::log(16.0), 1e-12) << "k=" << pt.k;

    // U-shaped fixture: exact values, minimum at k=3
    UShapeAdapter ushape;
    auto curve = optimizer::few_shot_sweep(suite, {0, 1, 2, 3, 4, 5}, sweep_template(), ushape,
                                           spec, optimizer::ScorerSpec::nll(), 5);
    int argmin = -1;
    double best = 1e18;
    for (const auto& pt : curve) {
        EXPECT_NEAR(pt.mean, UShapeAdapter::nll_for_k(pt.k), 1e-12);
        if (pt.mean < best) {
            best = pt.mean;
            argmin = pt.k;
        }
    }
    EXPECT_EQ(argmin, 3);
}

// ---------------------------------------------------------------------------
// 10. APE loop over replay fixtures
// ---------------------------------------------------------------------------

namespace {

class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::vector<std::string> texts) : texts_(std::move(texts)) {}
    WireResponse roundtrip(const WireRequest& request) override {
        if (request.path != "/v1/chat/completions")
            raise(ErrorCode::EndpointError, "unexpected path");
        size_t i = std::min(next_++, texts_.size() - 1);
        json choice{{"finish_reason", "stop"},
                    {"index", 0},
                    {"message", {{"content", texts_[i]}, {"role", "assistant"}}}};
        return {json{{"choices", json::array({choice})},
                     {"model", "scripted"},
                     {"object", "chat.completion"},
                     {"usage", {{"completion_tokens", 1}, {"prompt_tokens", 1}}}},
                0};
    }

private:
    std::vector<std::string> texts_;
    size_t next_ = 0;
};

} // namespace

TEST_F(Criterion, ape_loop) {
    testutil::TempDir dir;
    std::string content =
        json{{"id", "a"}, {"task", "summarization"}, {"source", "cats sat on mats"},
             {"references", json::array({"the cat sat"})}}
            .dump() +
        "\n" +
        json{{"id", "b"}, {"task", "summarization"}, {"source", "dogs ran in parks"},
             {"references", json::array({"dogs run fast"})}}
            .dump() +
        "\n";
    Suite suite = load_suite_from_string(content);

    std::vector<std::string> candidates{
        "Summarize the dialogue in one sentence.", "Condense.",      "Explain at length.",
        "Rewrite the text.",                       "Shorten this.",  "Give the gist.",
        "State the main point.",                   "Use ten words."};
    MockConfig target_cfg;
    auto quality = [&](size_t idx, const std::string& reference) {
        // candidate 0 reproduces the reference; others degrade progressively
        if (idx == 0) return reference;
        std::string out = reference;
        for (size_t cut = 0; cut < idx && out.find(' ') != std::string::npos; ++cut)
            out = out.substr(0, out.rfind(' '));
        return out + " noise" + std::to_string(idx);
    };
    for (size_t i = 0; i < candidates.size(); ++i) {
        for (const auto& c : suite.cases) {
            target_cfg.fixtures[sha256_hex(candidates[i] + "\n\n" + c.source)] =
                quality(i, c.references.front());
        }
    }
    MockAdapter target(target_cfg);

    optimizer::ApeConfig config;
    config.n_candidates = 8;
    config.n_rounds = 3;
    config.scorer = optimizer::ScorerSpec::for_metric(metrics::MetricId::Rouge1);
    config.demo_count = 2;

    // record the proposal traffic once, then search over the replay cache;
    // resample rounds re-propose existing texts, which deduplicate
    std::vector<std::string> scripted = candidates;
    for (int i = 0; i < 6; ++i) scripted.push_back(candidates[1]);
    std::string cache = dir.file("ape_cache.jsonl").string();
    {
        ChatAdapter recorder(
            std::make_shared<RecordTransport>(std::make_shared<ScriptedTransport>(scripted), cache),
            mock_capability());
        optimizer::ape_search(config, suite, recorder, mock_spec("proposer"), target,
                              mock_spec("target"));
    }

    // enumeration oracle over all recorded candidates
    std::vector<const TestCase*> eval{&suite.cases[0], &suite.cases[1]};
    std::string oracle_best;
    double oracle_score = -1;
    for (const auto& cand : candidates) {
        double s = optimizer::score_instruction(target, mock_spec("target"), cand, eval,
                                                config.scorer);
        if (s > oracle_score) {
            oracle_score = s;
            oracle_best = cand;
        }
    }

    std::string first_dump;
    for (int repeat = 0; repeat < 2; ++repeat) {
        ChatAdapter replayer(std::make_shared<ReplayTransport>(cache), mock_capability());
        auto result = optimizer::ape_search(config, suite, replayer, mock_spec("proposer"), target,
                                            mock_spec("target"));
        EXPECT_EQ(result.best.text, oracle_best);
        EXPECT_DOUBLE_EQ(result.best.score, oracle_score);
        ASSERT_EQ(result.rounds_log.size(), 4u);  // round 0 + 3 resample rounds
        double prev = -1;
        for (const auto& entry : result.rounds_log) {
            double b = entry.at("best_score").get<double>();
            EXPECT_GE(b, prev);
            prev = b;
        }
        json dump{{"best", result.best.text}, {"rounds", result.rounds_log}};
        json board = json::array();
        for (const auto& c : result.leaderboard) board.push_back({c.text, c.score});
        dump["board"] = board;
        if (repeat == 0) first_dump = dump.dump();
        else EXPECT_EQ(dump.dump(), first_dump);  // deterministic across executions
    }
}

// ---------------------------------------------------------------------------
// 11. Safety fixture corpus: 20 positives across 5 kinds, 20 negatives
// ---------------------------------------------------------------------------

TEST_F(Criterion, safety_pii) {
    using safety::PiiKind;
    const std::vector<std::pair<std::string, PiiKind>> positives = {
        {"contact alice@example.com today", PiiKind::Email},
        {"cc bob.smith+tag@mail.example.org on the thread", PiiKind::Email},
        {"send results to x_y%z@sub.domain.example please", PiiKind::Email},
        {"the alias qa99@test.example.io still works", PiiKind::Email},
        {"call +15551234567 after lunch", PiiKind::Phone},
        {"her desk line is 555-123-4567", PiiKind::Phone},
        {"dial (555) 987-6543 for support", PiiKind::Phone},
        {"the office abroad is +44 207 946 0958", PiiKind::Phone},
        {"ssn 123-45-6789 was on the form", PiiKind::SsnLike},
        {"they wrote 987-65-4321 by hand", PiiKind::SsnLike},
        {"record shows 001-23-4567 incorrectly", PiiKind::SsnLike},
        {"the legacy id 555-12-3456 leaked", PiiKind::SsnLike},
        {"card 4111 1111 1111 1111 was charged", PiiKind::CreditCard},
        {"use 5500-0055-5555-5559 for the test", PiiKind::CreditCard},
        {"amex 378282246310005 expires soon", PiiKind::CreditCard},
        {"discover 6011 0009 9013 9424 on file", PiiKind::CreditCard},
        {"the host 10.0.0.1 answered", PiiKind::IpAddress},
        {"traffic from 192.168.1.100 spiked", PiiKind::IpAddress},
        {"resolver 8.8.8.8 timed out", PiiKind::IpAddress},
        {"broadcast to 255.255.255.255 failed", PiiKind::IpAddress},
    };
    ASSERT_EQ(positives.size(), 20u);

    // recall 1.0 on positives, all of the expected kind
    for (const auto& [text, kind] : positives) {
        auto findings = safety::scan_pii(text);
        ASSERT_EQ(findings.size(), 1u) << text;
        EXPECT_EQ(findings[0].kind, kind) << text;
    }

    const std::vector<std::string> negatives = {
        "the meeting is at ten tomorrow",
        "we shipped version two point one",
        "room 101 is down the hall",
        "scores were 10-2 in the final",
        "pi is approximately 3.14159",
        "the year 2024 was busy",
        "call extension 42 from the lobby",
        "order 12-34 arrived on time",
        "see chapter 1.2.3 for details",
        "temperature reached 38.5 degrees",
        "the ratio is 16:9 on most screens",
        "budget grew by 15 percent",
        "flight AB123 boards soon",
        "we counted 1000 items in stock",
        "reference code X-99-Y was closed",
        "section 7 paragraph 3 applies",
        "half past nine works for me",
        "the password policy changed again",
        "serial 1234-5678 printed on the box",
        "they scored 100 and 250.75 points",
    };
    ASSERT_EQ(negatives.size(), 20u);
    for (const auto& text : negatives)
        EXPECT_TRUE(safety::scan_pii(text).empty()) << text;

    // redact-then-rescan yields no repeat findings
    std::string blob;
    for (const auto& [text, kind] : positives) blob += text + "\n";
    auto findings = safety::scan_pii(blob);
    EXPECT_EQ(findings.size(), 20u);
    std::string redacted = safety::redact(blob, findings);
    EXPECT_TRUE(safety::scan_pii(redacted).empty());
}

// ---------------------------------------------------------------------------
// Desk-scale budget: this binary must stay far inside the offline budget
// ---------------------------------------------------------------------------

TEST_F(Criterion, desk_scale_budget) {
    EXPECT_LT(seconds_since(g_binary_start), 120.0);
}
