#pragma once
// Post-processing fairness evaluation over scored predictions: reject option
// classification, equalized-odds mixing (exact 4-variable LP solved by vertex
// enumeration) and calibrated equalized odds (cost-equalizing mix with the
// group-trivial predictor). All fits are deterministic; randomized apply
// steps are seeded.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "genaiops/errors.hpp"
#include "genaiops/rng.hpp"

namespace genaiops::fairness {

using json = nlohmann::json;

enum class Group { Privileged = 0, Unprivileged = 1 };

inline const char* group_name(Group g) {
    return g == Group::Privileged ? "privileged" : "unprivileged";
}

inline Group group_from_name(const std::string& s) {
    if (s == "privileged") return Group::Privileged;
    if (s == "unprivileged") return Group::Unprivileged;
    raise(ErrorCode::ConfigError, "unknown group '" + s + "'");
}

struct ScoredExample {
    double score = 0.0;  // positive-class probability
    Group group = Group::Privileged;
    int y_true = 0;
};

inline std::vector<ScoredExample> load_scored_examples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::ConfigError, "cannot open scores file '" + path + "'");
    std::vector<ScoredExample> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
        }
        ScoredExample ex;
        ex.score = j.at("score").get<double>();
        ex.group = group_from_name(j.at("group").get<std::string>());
        ex.y_true = j.at("y_true").get<int>() ? 1 : 0;
        out.push_back(ex);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Group rates
// ---------------------------------------------------------------------------

struct GroupRates {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> tpr;  // undefined when the group has no positives
    std::optional<double> fpr;  // undefined when the group has no negatives
    double base_rate = 0.0;
    double accuracy = 0.0;
    long size() const { return tp + fp + tn + fn; }
    long positives() const { return tp + fn; }
    long negatives() const { return fp + tn; }
};

inline std::array<GroupRates, 2> try_group_rates(const std::vector<ScoredExample>& examples,
                                                 double threshold) {
    std::array<GroupRates, 2> rates{};
    for (const auto& ex : examples) {
        GroupRates& g = rates[size_t(ex.group)];
        bool pred = ex.score >= threshold;
        if (ex.y_true) (pred ? g.tp : g.fn)++;
        else (pred ? g.fp : g.tn)++;
    }
    for (auto& g : rates) {
        if (g.positives() > 0) g.tpr = double(g.tp) / double(g.positives());
        if (g.negatives() > 0) g.fpr = double(g.fp) / double(g.negatives());
        if (g.size() > 0) {
            g.base_rate = double(g.positives()) / double(g.size());
            g.accuracy = double(g.tp + g.tn) / double(g.size());
        }
    }
    return rates;
}

// Strict variant used by the fit operations: every rate must be defined.
inline std::array<GroupRates, 2> group_rates(const std::vector<ScoredExample>& examples,
                                             double threshold) {
    auto rates = try_group_rates(examples, threshold);
    for (size_t gi = 0; gi < 2; ++gi) {
        if (rates[gi].size() == 0)
            raise(ErrorCode::DegenerateGroup,
                  std::string(group_name(Group(gi))) + " group is empty");
        if (!rates[gi].tpr)
            raise(ErrorCode::DegenerateGroup,
                  std::string(group_name(Group(gi))) + " group has no positives");
        if (!rates[gi].fpr)
            raise(ErrorCode::DegenerateGroup,
                  std::string(group_name(Group(gi))) + " group has no negatives");
    }
    return rates;
}

// ---------------------------------------------------------------------------
// Reject option classification
// ---------------------------------------------------------------------------

// Inside the critical band (inclusive endpoints) the unprivileged group gets
// the favorable label and the privileged group the unfavorable one; outside
// it, plain thresholding applies.
inline std::vector<int> reject_option_classify(const std::vector<ScoredExample>& examples,
                                               double theta, double threshold = 0.5) {
    if (theta < 0.0 || theta > 0.5)
        raise(ErrorCode::ConfigError, "theta must be in [0, 0.5]");
    std::vector<int> labels;
    labels.reserve(examples.size());
    for (const auto& ex : examples) {
        if (std::abs(ex.score - threshold) <= theta)
            labels.push_back(ex.group == Group::Unprivileged ? 1 : 0);
        else
            labels.push_back(ex.score >= threshold ? 1 : 0);
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Equalized odds post-processing
// ---------------------------------------------------------------------------

struct MixingPolicy {
    // probability that a base-positive prediction stays positive / that a
    // base-negative flips positive, per group
    std::array<double, 2> p2p{1.0, 1.0};
    std::array<double, 2> n2p{0.0, 0.0};
    double threshold = 0.5;

    static MixingPolicy identity(double threshold = 0.5) {
        return MixingPolicy{{1.0, 1.0}, {0.0, 0.0}, threshold};
    }
};

struct DerivedRates {
    std::array<double, 2> tpr{};
    std::array<double, 2> fpr{};
    double expected_error = 0.0;
};

// Analytic rates of the randomized derived predictor; no sampling involved.
inline DerivedRates derived_rates(const MixingPolicy& policy,
                                  const std::array<GroupRates, 2>& rates) {
    DerivedRates out;
    double total = double(rates[0].size() + rates[1].size());
    for (size_t g = 0; g < 2; ++g) {
        double tpr = *rates[g].tpr, fpr = *rates[g].fpr;
        out.tpr[g] = policy.p2p[g] * tpr + policy.n2p[g] * (1.0 - tpr);
        out.fpr[g] = policy.p2p[g] * fpr + policy.n2p[g] * (1.0 - fpr);
        double pos = double(rates[g].positives()), neg = double(rates[g].negatives());
        out.expected_error += (pos * (1.0 - out.tpr[g]) + neg * out.fpr[g]) / total;
    }
    return out;
}

namespace detail {

inline constexpr double kRateTol = 1e-6;

struct LpCandidate {
    std::array<double, 4> x;  // p2p_0, n2p_0, p2p_1, n2p_1
    double error = 0.0;
};

// 2x2 solve; returns false when the system is singular.
inline bool solve2(double a11, double a12, double b1, double a21, double a22, double b2,
                   double& x1, double& x2) {
    double det = a11 * a22 - a12 * a21;
    if (std::abs(det) < 1e-12) return false;
    x1 = (b1 * a22 - b2 * a12) / det;
    x2 = (a11 * b2 - a21 * b1) / det;
    return true;
}

} // namespace detail

// Minimize the expected 0/1 error of the derived predictor subject to equal
// TPR and FPR across groups. The feasible set is the equality-constrained
// box [0,1]^4; all of its vertices are enumerated (two fixed coordinates plus
// the two equalities, plus degenerate fixings) and the best feasible vertex
// wins. Ties prefer the policy closest to the identity.
inline MixingPolicy equalized_odds_fit(const std::vector<ScoredExample>& examples,
                                       double threshold = 0.5) {
    auto rates = group_rates(examples, threshold);
    double tpr0 = *rates[0].tpr, fpr0 = *rates[0].fpr;
    double tpr1 = *rates[1].tpr, fpr1 = *rates[1].fpr;

    // equality rows over x = (p2p_0, n2p_0, p2p_1, n2p_1)
    const std::array<double, 4> row_tpr{tpr0, 1.0 - tpr0, -tpr1, -(1.0 - tpr1)};
    const std::array<double, 4> row_fpr{fpr0, 1.0 - fpr0, -fpr1, -(1.0 - fpr1)};

    std::vector<detail::LpCandidate> candidates;
    auto consider = [&](std::array<double, 4> x) {
        for (double& v : x) {
            if (v < -1e-9 || v > 1.0 + 1e-9) return;
            v = std::clamp(v, 0.0, 1.0);
        }
        MixingPolicy p{{x[0], x[2]}, {x[1], x[3]}, threshold};
        DerivedRates dr = derived_rates(p, rates);
        if (std::abs(dr.tpr[0] - dr.tpr[1]) > detail::kRateTol) return;
        if (std::abs(dr.fpr[0] - dr.fpr[1]) > detail::kRateTol) return;
        candidates.push_back({x, dr.expected_error});
    };

    // vertices with two coordinates on a box face
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            int free1 = -1, free2 = -1;
            for (int v = 0; v < 4; ++v)
                if (v != i && v != j) (free1 < 0 ? free1 : free2) = v;
            for (double vi : {0.0, 1.0}) {
                for (double vj : {0.0, 1.0}) {
                    std::array<double, 4> x{0, 0, 0, 0};
                    x[i] = vi;
                    x[j] = vj;
                    double b1 = -(row_tpr[i] * vi + row_tpr[j] * vj);
                    double b2 = -(row_fpr[i] * vi + row_fpr[j] * vj);
                    double f1, f2;
                    if (detail::solve2(row_tpr[free1], row_tpr[free2], b1, row_fpr[free1],
                                       row_fpr[free2], b2, f1, f2)) {
                        x[free1] = f1;
                        x[free2] = f2;
                        consider(x);
                    }
                }
            }
        }
    }
    // degenerate vertices: three fixed coordinates, one equality solved
    for (int i = 0; i < 4; ++i) {
        for (int mask = 0; mask < 8; ++mask) {
            std::array<double, 4> x{0, 0, 0, 0};
            int bit = 0;
            for (int v = 0; v < 4; ++v)
                if (v != i) x[v] = (mask >> bit++) & 1 ? 1.0 : 0.0;
            for (const auto& row : {row_tpr, row_fpr}) {
                if (std::abs(row[i]) < 1e-12) continue;
                double rhs = 0;
                for (int v = 0; v < 4; ++v)
                    if (v != i) rhs -= row[v] * x[v];
                auto xi = x;
                xi[i] = rhs / row[i];
                consider(xi);
            }
        }
    }
    // box corners
    for (int mask = 0; mask < 16; ++mask) {
        consider({double(mask & 1), double((mask >> 1) & 1), double((mask >> 2) & 1),
                  double((mask >> 3) & 1)});
    }

    if (candidates.empty())
        raise(ErrorCode::Internal, "equalized odds fit found no feasible vertex");

    auto identity_pref = [](const std::array<double, 4>& x) {
        return x[0] + x[2] - x[1] - x[3];
    };
    const detail::LpCandidate* best = &candidates.front();
    for (const auto& c : candidates) {
        if (c.error < best->error - 1e-12) {
            best = &c;
        } else if (std::abs(c.error - best->error) <= 1e-12) {
            double dp = identity_pref(c.x) - identity_pref(best->x);
            if (dp > 1e-12 || (std::abs(dp) <= 1e-12 && c.x < best->x)) best = &c;
        }
    }
    return MixingPolicy{{best->x[0], best->x[2]}, {best->x[1], best->x[3]}, threshold};
}

// Draw labels from the fitted policy; one uniform draw per example, in order,
// so results are a pure function of (policy, examples, seed).
inline std::vector<int> equalized_odds_apply(const MixingPolicy& policy,
                                             const std::vector<ScoredExample>& examples,
                                             uint64_t seed) {
    Pcg32 rng(seed);
    std::vector<int> labels;
    labels.reserve(examples.size());
    for (const auto& ex : examples) {
        bool base = ex.score >= policy.threshold;
        double p = base ? policy.p2p[size_t(ex.group)] : policy.n2p[size_t(ex.group)];
        labels.push_back(rng.uniform() < p ? 1 : 0);
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Calibrated equalized odds
// ---------------------------------------------------------------------------

struct CostSpec {
    double w_fp = 1.0;
    double w_fn = 0.0;
    static CostSpec fpr() { return {1.0, 0.0}; }
    static CostSpec fnr() { return {0.0, 1.0}; }
    static CostSpec weighted(double w_fp, double w_fn) { return {w_fp, w_fn}; }
};

struct CalibratedMix {
    std::array<double, 2> alpha{0.0, 0.0};       // mix rate toward the trivial predictor
    std::array<double, 2> base_value{0.0, 0.0};  // trivial predictor output per group
    std::array<double, 2> cost{0.0, 0.0};        // generalized cost before mixing
};

namespace detail {

struct CeoGroupStats {
    long n = 0, pos = 0, neg = 0;
    double sum_score = 0.0;
    double sum_score_neg = 0.0;   // generalized FP mass
    double sum_one_minus_pos = 0.0;  // generalized FN mass
    double mean_score() const { return n ? sum_score / double(n) : 0.0; }
    double gfpr() const { return double(sum_score_neg) / double(neg); }
    double gfnr() const { return double(sum_one_minus_pos) / double(pos); }
};

inline std::array<CeoGroupStats, 2> ceo_stats(const std::vector<ScoredExample>& examples) {
    std::array<CeoGroupStats, 2> st{};
    for (const auto& ex : examples) {
        auto& g = st[size_t(ex.group)];
        ++g.n;
        g.sum_score += ex.score;
        if (ex.y_true) {
            ++g.pos;
            g.sum_one_minus_pos += 1.0 - ex.score;
        } else {
            ++g.neg;
            g.sum_score_neg += ex.score;
        }
    }
    for (size_t gi = 0; gi < 2; ++gi) {
        if (st[gi].pos == 0)
            raise(ErrorCode::DegenerateGroup,
                  std::string(group_name(Group(gi))) + " group has no positives");
        if (st[gi].neg == 0)
            raise(ErrorCode::DegenerateGroup,
                  std::string(group_name(Group(gi))) + " group has no negatives");
    }
    return st;
}

} // namespace detail

// Mix the lower-cost group's calibrated predictor with its trivial predictor
// (constant group mean score) until the generalized costs match:
// alpha = (c_other - c_g) / (c_trivial_g - c_g), clamped to [0,1].
inline CalibratedMix calibrated_eo_fit(const std::vector<ScoredExample>& examples,
                                       const CostSpec& cost) {
    auto st = detail::ceo_stats(examples);
    CalibratedMix mix;
    std::array<double, 2> c{}, c_triv{};
    for (size_t g = 0; g < 2; ++g) {
        c[g] = cost.w_fp * st[g].gfpr() + cost.w_fn * st[g].gfnr();
        double mu = st[g].mean_score();
        c_triv[g] = cost.w_fp * mu + cost.w_fn * (1.0 - mu);
        mix.base_value[g] = mu;
        mix.cost[g] = c[g];
    }
    if (c[0] == c[1]) return mix;  // already equal, no mixing
    size_t low = c[0] < c[1] ? 0 : 1;
    size_t high = 1 - low;
    double denom = c_triv[low] - c[low];
    if (denom == 0.0)
        raise(ErrorCode::NoFeasibleMix,
              "trivial predictor cost equals the base cost; costs cannot be equalized");
    mix.alpha[low] = std::clamp((c[high] - c[low]) / denom, 0.0, 1.0);
    return mix;
}

struct ScoredLabel {
    double score = 0.0;
    int label = 0;
};

// With probability alpha_g replace the score by the group's trivial value,
// then threshold at 0.5. Seeded and deterministic.
inline std::vector<ScoredLabel> calibrated_eo_apply(const CalibratedMix& mix,
                                                    const std::vector<ScoredExample>& examples,
                                                    uint64_t seed) {
    Pcg32 rng(seed);
    std::vector<ScoredLabel> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        size_t g = size_t(ex.group);
        double u = rng.uniform();
        double s = u < mix.alpha[g] ? mix.base_value[g] : ex.score;
        out.push_back({s, s >= 0.5 ? 1 : 0});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Disparity report
// ---------------------------------------------------------------------------

struct DisparityReport {
    std::optional<double> tpr_gap;
    std::optional<double> fpr_gap;
    double selection_rate_gap = 0.0;
    std::array<double, 2> accuracy{};
    std::array<double, 2> selection_rate{};

    json to_json() const {
        json j;
        if (tpr_gap) j["tpr_gap"] = *tpr_gap;
        if (fpr_gap) j["fpr_gap"] = *fpr_gap;
        j["selection_rate_gap"] = selection_rate_gap;
        j["accuracy"] = {{"privileged", accuracy[0]}, {"unprivileged", accuracy[1]}};
        j["selection_rate"] = {{"privileged", selection_rate[0]}, {"unprivileged", selection_rate[1]}};
        return j;
    }
};

inline DisparityReport disparity_report(const std::vector<ScoredExample>& examples,
                                        const std::vector<int>& labels) {
    if (examples.size() != labels.size())
        raise(ErrorCode::LengthMismatch, "examples and labels differ in length");
    std::array<long, 2> tp{}, fp{}, tn{}, fn{}, n{}, sel{};
    for (size_t i = 0; i < examples.size(); ++i) {
        size_t g = size_t(examples[i].group);
        ++n[g];
        if (labels[i]) ++sel[g];
        if (examples[i].y_true) (labels[i] ? tp[g] : fn[g])++;
        else (labels[i] ? fp[g] : tn[g])++;
    }
    DisparityReport rep;
    std::array<std::optional<double>, 2> tpr, fpr;
    for (size_t g = 0; g < 2; ++g) {
        if (tp[g] + fn[g] > 0) tpr[g] = double(tp[g]) / double(tp[g] + fn[g]);
        if (fp[g] + tn[g] > 0) fpr[g] = double(fp[g]) / double(fp[g] + tn[g]);
        rep.accuracy[g] = n[g] ? double(tp[g] + tn[g]) / double(n[g]) : 0.0;
        rep.selection_rate[g] = n[g] ? double(sel[g]) / double(n[g]) : 0.0;
    }
    if (tpr[0] && tpr[1]) rep.tpr_gap = std::abs(*tpr[0] - *tpr[1]);
    if (fpr[0] && fpr[1]) rep.fpr_gap = std::abs(*fpr[0] - *fpr[1]);
    rep.selection_rate_gap = std::abs(rep.selection_rate[0] - rep.selection_rate[1]);
    return rep;
}

} // namespace genaiops::fairness
