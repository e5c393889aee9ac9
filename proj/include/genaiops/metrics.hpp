#pragma once
// Functionality metrics with enforced per-task applicability. Formulas follow
// the canonical published definitions (ROUGE recall / ROUGE-L F, BLEU with
// brevity penalty and an epsilon smoothing floor, SARI star variant, METEOR
// with exact unigram matching, Flesch reading ease). All operations are pure.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "genaiops/errors.hpp"
#include "genaiops/suite.hpp"
#include "genaiops/text.hpp"

namespace genaiops::metrics {

using json = nlohmann::json;

enum class MetricId {
    Rouge1,
    Rouge2,
    RougeL,
    Sari,
    Meteor,
    TextQuality,
    Bleu,
    SentenceSimilarity,
    Readability,
    ExactMatch,
    MultiLabel,
};

// Applicability in the task matrix is declared per metric family; the ROUGE
// family expands to ROUGE-1/2/L when concrete ids are requested.
enum class MetricFamily {
    Rouge,
    Sari,
    Meteor,
    TextQuality,
    Bleu,
    SentenceSimilarity,
    Readability,
    ExactMatch,
    MultiLabel,
};

inline const char* metric_id_name(MetricId id) {
    switch (id) {
        case MetricId::Rouge1: return "rouge1";
        case MetricId::Rouge2: return "rouge2";
        case MetricId::RougeL: return "rougeL";
        case MetricId::Sari: return "sari";
        case MetricId::Meteor: return "meteor";
        case MetricId::TextQuality: return "text_quality";
        case MetricId::Bleu: return "bleu";
        case MetricId::SentenceSimilarity: return "sentence_similarity";
        case MetricId::Readability: return "readability";
        case MetricId::ExactMatch: return "exact_match";
        case MetricId::MultiLabel: return "multilabel";
    }
    return "unknown";
}

inline MetricId metric_id_from_name(const std::string& s) {
    static const std::map<std::string, MetricId> table = {
        {"rouge1", MetricId::Rouge1},
        {"rouge2", MetricId::Rouge2},
        {"rougeL", MetricId::RougeL},
        {"sari", MetricId::Sari},
        {"meteor", MetricId::Meteor},
        {"text_quality", MetricId::TextQuality},
        {"bleu", MetricId::Bleu},
        {"sentence_similarity", MetricId::SentenceSimilarity},
        {"readability", MetricId::Readability},
        {"exact_match", MetricId::ExactMatch},
        {"multilabel", MetricId::MultiLabel},
    };
    auto it = table.find(s);
    if (it == table.end()) raise(ErrorCode::ConfigError, "unknown metric id '" + s + "'");
    return it->second;
}

inline MetricFamily metric_family(MetricId id) {
    switch (id) {
        case MetricId::Rouge1:
        case MetricId::Rouge2:
        case MetricId::RougeL: return MetricFamily::Rouge;
        case MetricId::Sari: return MetricFamily::Sari;
        case MetricId::Meteor: return MetricFamily::Meteor;
        case MetricId::TextQuality: return MetricFamily::TextQuality;
        case MetricId::Bleu: return MetricFamily::Bleu;
        case MetricId::SentenceSimilarity: return MetricFamily::SentenceSimilarity;
        case MetricId::Readability: return MetricFamily::Readability;
        case MetricId::ExactMatch: return MetricFamily::ExactMatch;
        case MetricId::MultiLabel: return MetricFamily::MultiLabel;
    }
    return MetricFamily::Rouge;
}

struct MetricValue {
    MetricId id = MetricId::Rouge1;
    double value = 0.0;  // always in [0,1]; readability also reports the raw grade
    json details = json::object();
};

// Pinned constants, recorded in every run manifest.
struct MetricConstants {
    double rouge_l_beta = 1.2;
    double bleu_epsilon = 1e-9;
    int bleu_max_n = 4;
    int sari_max_n = 4;
    double meteor_penalty_weight = 0.5;
    double meteor_penalty_power = 3.0;
    size_t similarity_buckets = kTfBuckets;

    json to_json() const {
        return json{{"tokenizer", "nfkc_lower_alnum"},
                    {"rouge_l_beta", rouge_l_beta},
                    {"bleu_epsilon", bleu_epsilon},
                    {"bleu_max_n", bleu_max_n},
                    {"sari_max_n", sari_max_n},
                    {"meteor_penalty_weight", meteor_penalty_weight},
                    {"meteor_penalty_power", meteor_penalty_power},
                    {"similarity_buckets", similarity_buckets}};
    }

    std::string hash() const { return sha256_hex(to_json().dump()); }
};

inline const MetricConstants& default_constants() {
    static const MetricConstants c{};
    return c;
}

// ---------------------------------------------------------------------------
// n-gram helpers
// ---------------------------------------------------------------------------

using NgramCounts = std::map<std::string, long>;

inline std::string join_gram(const std::vector<std::string>& toks, size_t start, size_t n) {
    std::string g;
    for (size_t i = 0; i < n; ++i) {
        if (i) g.push_back('\x1f');
        g += toks[start + i];
    }
    return g;
}

inline NgramCounts ngram_counts(const std::vector<std::string>& toks, size_t n) {
    NgramCounts counts;
    if (n == 0 || toks.size() < n) return counts;
    for (size_t i = 0; i + n <= toks.size(); ++i) ++counts[join_gram(toks, i, n)];
    return counts;
}

inline long total_count(const NgramCounts& c) {
    long t = 0;
    for (const auto& [g, n] : c) t += n;
    return t;
}

// ---------------------------------------------------------------------------
// ROUGE
// ---------------------------------------------------------------------------

// ROUGE-N recall: clipped n-gram matches over the reference n-gram count,
// maximized over references. References shorter than n are skipped.
inline MetricValue rouge_n(const std::string& candidate, const std::vector<std::string>& references,
                           int n) {
    if (references.empty()) raise(ErrorCode::EmptyReferences, "rouge needs at least one reference");
    MetricValue mv;
    mv.id = (n == 1) ? MetricId::Rouge1 : MetricId::Rouge2;
    auto cand = tokenize(candidate);
    NgramCounts cand_counts = ngram_counts(cand, size_t(n));
    double best = 0.0;
    bool any_ref = false;
    for (const auto& ref : references) {
        auto ref_toks = tokenize(ref);
        NgramCounts ref_counts = ngram_counts(ref_toks, size_t(n));
        long ref_total = total_count(ref_counts);
        if (ref_total == 0) continue;  // fewer than n tokens
        any_ref = true;
        long matched = 0;
        for (const auto& [g, c] : cand_counts) {
            auto it = ref_counts.find(g);
            if (it != ref_counts.end()) matched += std::min(c, it->second);
        }
        best = std::max(best, double(matched) / double(ref_total));
    }
    mv.value = any_ref ? best : 0.0;
    mv.details = json{{"n", n}};
    return mv;
}

inline size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) cur[j] = prev[j - 1] + 1;
            else cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// ROUGE-L F-measure from the longest common subsequence, beta weighting recall.
inline MetricValue rouge_l(const std::string& candidate, const std::vector<std::string>& references,
                           const MetricConstants& k = default_constants()) {
    if (references.empty()) raise(ErrorCode::EmptyReferences, "rouge needs at least one reference");
    MetricValue mv;
    mv.id = MetricId::RougeL;
    auto cand = tokenize(candidate);
    if (cand.empty()) return mv;
    double beta2 = k.rouge_l_beta * k.rouge_l_beta;
    double best = 0.0;
    for (const auto& ref : references) {
        auto ref_toks = tokenize(ref);
        if (ref_toks.empty()) continue;
        double lcs = double(lcs_length(cand, ref_toks));
        if (lcs == 0.0) continue;
        double p = lcs / double(cand.size());
        double r = lcs / double(ref_toks.size());
        double f = (1.0 + beta2) * p * r / (r + beta2 * p);
        best = std::max(best, f);
    }
    mv.value = best;
    return mv;
}

inline MetricValue rouge(const std::string& candidate, const std::vector<std::string>& references,
                         MetricId variant, const MetricConstants& k = default_constants()) {
    switch (variant) {
        case MetricId::Rouge1: return rouge_n(candidate, references, 1);
        case MetricId::Rouge2: return rouge_n(candidate, references, 2);
        case MetricId::RougeL: return rouge_l(candidate, references, k);
        default: raise(ErrorCode::ConfigError, "not a rouge variant");
    }
}

// ---------------------------------------------------------------------------
// BLEU
// ---------------------------------------------------------------------------

// Geometric mean of modified n-gram precisions times the brevity penalty.
// Orders the candidate is too short to populate are dropped; zero match
// counts are floored at epsilon so the geometric mean never collapses to 0.
inline MetricValue bleu(const std::string& candidate, const std::vector<std::string>& references,
                        int max_n = default_constants().bleu_max_n,
                        const MetricConstants& k = default_constants()) {
    if (references.empty()) raise(ErrorCode::EmptyReferences, "bleu needs at least one reference");
    if (max_n < 1) raise(ErrorCode::ConfigError, "bleu max_n must be >= 1");
    MetricValue mv;
    mv.id = MetricId::Bleu;
    auto cand = tokenize(candidate);
    if (cand.empty()) {
        mv.details = json{{"bp", 0.0}};
        return mv;
    }
    std::vector<std::vector<std::string>> ref_toks;
    ref_toks.reserve(references.size());
    for (const auto& r : references) ref_toks.push_back(tokenize(r));

    // closest reference length; ties broken toward the shorter reference
    long c_len = long(cand.size());
    long r_len = long(ref_toks.front().size());
    for (const auto& rt : ref_toks) {
        long len = long(rt.size());
        long d = std::labs(len - c_len), best_d = std::labs(r_len - c_len);
        if (d < best_d || (d == best_d && len < r_len)) r_len = len;
    }

    int orders = std::min<int>(max_n, int(cand.size()));
    double log_sum = 0.0;
    json precisions = json::array();
    for (int n = 1; n <= orders; ++n) {
        NgramCounts cand_counts = ngram_counts(cand, size_t(n));
        NgramCounts clip;  // max reference count per gram
        for (const auto& rt : ref_toks) {
            for (const auto& [g, c] : ngram_counts(rt, size_t(n))) {
                auto& slot = clip[g];
                slot = std::max(slot, c);
            }
        }
        long matched = 0;
        for (const auto& [g, c] : cand_counts) {
            auto it = clip.find(g);
            if (it != clip.end()) matched += std::min(c, it->second);
        }
        long total = total_count(cand_counts);
        double p = std::max(double(matched), k.bleu_epsilon) / double(total);
        precisions.push_back(p);
        log_sum += std::log(p);
    }
    double bp = std::exp(std::min(0.0, 1.0 - double(r_len) / double(c_len)));
    mv.value = bp * std::exp(log_sum / double(orders));
    mv.details = json{{"bp", bp}, {"precisions", precisions}, {"ref_len", r_len}, {"cand_len", c_len}};
    return mv;
}

// ---------------------------------------------------------------------------
// SARI
// ---------------------------------------------------------------------------

namespace detail {

// Zero-denominator convention: a component with nothing to score is perfect
// when no operations of that type were required, otherwise it scores 0.
inline double ratio_or_convention(double sum, size_t denom, bool required) {
    if (denom == 0) return required ? 0.0 : 1.0;
    return sum / double(denom);
}

inline double harmonic(double p, double r) {
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

inline double sari_order(const NgramCounts& s, const NgramCounts& c, const NgramCounts& r_sum,
                         long numref) {
    NgramCounts s_rep, c_rep;
    for (const auto& [g, n] : s) s_rep[g] = n * numref;
    for (const auto& [g, n] : c) c_rep[g] = n * numref;

    auto count_of = [](const NgramCounts& m, const std::string& g) -> long {
        auto it = m.find(g);
        return it == m.end() ? 0 : it->second;
    };

    // KEEP: kept n-grams weighted by how much keeping the references demand
    NgramCounts keep, keep_should;
    for (const auto& [g, n] : s_rep) {
        long kept = std::min(n, count_of(c_rep, g));
        if (kept > 0) keep[g] = kept;
        long should = std::min(n, count_of(r_sum, g));
        if (should > 0) keep_should[g] = should;
    }
    double keep_p_sum = 0.0, keep_r_sum = 0.0;
    for (const auto& [g, n] : keep)
        keep_p_sum += double(std::min(n, count_of(r_sum, g))) / double(n);
    for (const auto& [g, n] : keep_should)
        keep_r_sum += double(std::min(count_of(keep, g), n)) / double(n);
    double keep_p = ratio_or_convention(keep_p_sum, keep.size(), !keep_should.empty());
    double keep_r = ratio_or_convention(keep_r_sum, keep_should.size(), false);
    double f_keep = harmonic(keep_p, keep_r);

    // DELETE: precision only — deletions that the references agree with
    NgramCounts del, del_should;
    for (const auto& [g, n] : s_rep) {
        long d = n - count_of(c_rep, g);
        if (d > 0) del[g] = d;
        long ds = n - count_of(r_sum, g);
        if (ds > 0) del_should[g] = ds;
    }
    double del_sum = 0.0;
    for (const auto& [g, n] : del)
        del_sum += double(std::min(n, count_of(del_should, g))) / double(n);
    double p_del = ratio_or_convention(del_sum, del.size(), !del_should.empty());

    // ADD: binary presence of n-grams absent from the source
    std::set<std::string> add, add_should;
    for (const auto& [g, n] : c)
        if (!s.count(g)) add.insert(g);
    for (const auto& [g, n] : r_sum)
        if (!s.count(g)) add_should.insert(g);
    size_t add_good = 0;
    for (const auto& g : add)
        if (add_should.count(g)) ++add_good;
    double add_p = ratio_or_convention(double(add_good), add.size(), !add_should.empty());
    double add_r = ratio_or_convention(double(add_good), add_should.size(), false);
    double f_add = harmonic(add_p, add_r);

    return (f_add + f_keep + p_del) / 3.0;
}

} // namespace detail

inline MetricValue sari(const std::string& source, const std::string& candidate,
                        const std::vector<std::string>& references,
                        const MetricConstants& k = default_constants()) {
    if (source.empty()) raise(ErrorCode::EmptySource, "sari needs the source text");
    if (references.empty()) raise(ErrorCode::EmptyReferences, "sari needs at least one reference");
    MetricValue mv;
    mv.id = MetricId::Sari;
    auto src = tokenize(source);
    auto cand = tokenize(candidate);
    std::vector<std::vector<std::string>> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(tokenize(r));

    double total = 0.0;
    for (int n = 1; n <= k.sari_max_n; ++n) {
        NgramCounts s = ngram_counts(src, size_t(n));
        NgramCounts c = ngram_counts(cand, size_t(n));
        NgramCounts r_sum;
        for (const auto& rt : refs)
            for (const auto& [g, cnt] : ngram_counts(rt, size_t(n))) r_sum[g] += cnt;
        total += detail::sari_order(s, c, r_sum, long(refs.size()));
    }
    mv.value = total / double(k.sari_max_n);
    return mv;
}

// ---------------------------------------------------------------------------
// METEOR
// ---------------------------------------------------------------------------

// Exact-match unigram alignment (greedy, in candidate order, earliest free
// reference occurrence), harmonic mean weighted toward recall, fragmentation
// penalty from the chunk count.
inline MetricValue meteor(const std::string& candidate, const std::string& reference,
                          const MetricConstants& k = default_constants()) {
    if (reference.empty()) raise(ErrorCode::EmptyReference, "meteor needs a reference");
    MetricValue mv;
    mv.id = MetricId::Meteor;
    auto cand = tokenize(candidate);
    auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return mv;

    std::vector<bool> ref_used(ref.size(), false);
    std::vector<std::pair<size_t, size_t>> aligned;  // (cand index, ref index)
    for (size_t i = 0; i < cand.size(); ++i) {
        for (size_t j = 0; j < ref.size(); ++j) {
            if (!ref_used[j] && cand[i] == ref[j]) {
                ref_used[j] = true;
                aligned.emplace_back(i, j);
                break;
            }
        }
    }
    if (aligned.empty()) return mv;

    double m = double(aligned.size());
    double p = m / double(cand.size());
    double r = m / double(ref.size());
    double f_mean = 10.0 * p * r / (r + 9.0 * p);

    size_t chunks = 1;
    for (size_t i = 1; i < aligned.size(); ++i) {
        if (aligned[i].first != aligned[i - 1].first + 1 ||
            aligned[i].second != aligned[i - 1].second + 1)
            ++chunks;
    }
    double penalty = k.meteor_penalty_weight * std::pow(double(chunks) / m, k.meteor_penalty_power);
    mv.value = f_mean * (1.0 - penalty);
    mv.details = json{{"matches", m}, {"chunks", chunks}, {"precision", p}, {"recall", r}};
    return mv;
}

// ---------------------------------------------------------------------------
// Text quality (token-multiset precision/recall/F1)
// ---------------------------------------------------------------------------

inline MetricValue text_quality(const std::string& candidate,
                                const std::vector<std::string>& references) {
    if (references.empty())
        raise(ErrorCode::EmptyReferences, "text_quality needs at least one reference");
    MetricValue mv;
    mv.id = MetricId::TextQuality;
    auto cand = tokenize(candidate);
    NgramCounts cand_counts = ngram_counts(cand, 1);

    double best_f = -1.0, best_p = 0.0, best_r = 0.0;
    for (const auto& ref : references) {
        auto ref_toks = tokenize(ref);
        double p, r, f;
        if (cand.empty() && ref_toks.empty()) {
            p = r = f = 1.0;
        } else if (cand.empty() || ref_toks.empty()) {
            p = r = f = 0.0;
        } else {
            NgramCounts ref_counts = ngram_counts(ref_toks, 1);
            long overlap = 0;
            for (const auto& [g, c] : cand_counts) {
                auto it = ref_counts.find(g);
                if (it != ref_counts.end()) overlap += std::min(c, it->second);
            }
            p = double(overlap) / double(cand.size());
            r = double(overlap) / double(ref_toks.size());
            f = (p + r == 0.0) ? 0.0 : 2.0 * p * r / (p + r);
        }
        if (f > best_f) {
            best_f = f;
            best_p = p;
            best_r = r;
        }
    }
    mv.value = best_f;
    mv.details = json{{"precision", best_p}, {"recall", best_r}, {"f1", best_f}};
    return mv;
}

// ---------------------------------------------------------------------------
// Sentence similarity
// ---------------------------------------------------------------------------

using Embedder = std::function<std::vector<double>(const std::string&)>;

inline MetricValue sentence_similarity(const std::string& a, const std::string& b,
                                       const Embedder& embedder = nullptr,
                                       const MetricConstants& k = default_constants()) {
    MetricValue mv;
    mv.id = MetricId::SentenceSimilarity;
    bool a_empty = tokenize(a).empty();
    bool b_empty = tokenize(b).empty();
    if (a_empty && b_empty) {
        mv.value = 1.0;
        return mv;
    }
    if (a_empty || b_empty) {
        mv.value = 0.0;
        return mv;
    }
    if (embedder) {
        mv.value = std::clamp(cosine(embedder(a), embedder(b)), 0.0, 1.0);
        mv.details = json{{"vectorizer", "embedder"}};
    } else {
        mv.value = hashed_tf_cosine(a, b, k.similarity_buckets);
        mv.details = json{{"vectorizer", "hashed_tf"}};
    }
    return mv;
}

// ---------------------------------------------------------------------------
// Readability (Flesch Reading Ease mapped onto a 7-point grade)
// ---------------------------------------------------------------------------

namespace detail {

inline int syllable_count(const std::string& word) {
    static const std::string vowels = "aeiouy";
    int groups = 0;
    bool in_group = false;
    for (char ch : word) {
        bool v = vowels.find(ch) != std::string::npos;
        if (v && !in_group) ++groups;
        in_group = v;
    }
    size_t n = word.size();
    bool silent_e = n >= 2 && word[n - 1] == 'e' && !(n >= 2 && word[n - 2] == 'l');
    if (silent_e && groups > 1) --groups;
    return std::max(1, groups);
}

inline size_t sentence_count(const std::string& text) {
    size_t sentences = 0;
    std::string segment;
    auto flush = [&]() {
        if (!tokenize(segment).empty()) ++sentences;
        segment.clear();
    };
    for (char ch : text) {
        if (ch == '.' || ch == '!' || ch == '?') flush();
        else segment.push_back(ch);
    }
    flush();
    return std::max<size_t>(1, sentences);
}

} // namespace detail

inline MetricValue readability(const std::string& text) {
    auto words = tokenize(text);
    if (words.empty()) raise(ErrorCode::EmptyText, "readability needs at least one word");
    long syllables = 0;
    for (const auto& w : words) syllables += detail::syllable_count(w);
    size_t sentences = detail::sentence_count(text);
    double fre = 206.835 - 1.015 * (double(words.size()) / double(sentences)) -
                 84.6 * (double(syllables) / double(words.size()));
    int grade;
    if (fre >= 90) grade = 7;
    else if (fre >= 80) grade = 6;
    else if (fre >= 70) grade = 5;
    else if (fre >= 60) grade = 4;
    else if (fre >= 50) grade = 3;
    else if (fre >= 30) grade = 2;
    else grade = 1;

    MetricValue mv;
    mv.id = MetricId::Readability;
    mv.value = double(grade - 1) / 6.0;
    mv.details = json{{"grade", grade},
                      {"fre", fre},
                      {"words", words.size()},
                      {"sentences", sentences},
                      {"syllables", syllables}};
    return mv;
}

// ---------------------------------------------------------------------------
// Exact match
// ---------------------------------------------------------------------------

// Lowercase, compatibility-fold, collapse whitespace, strip terminal .,!?
inline std::string normalize_for_match(const std::string& text) {
    std::string folded;
    std::vector<uint32_t> buf;
    for (const CodePoint& cp : utf8_decode(text)) {
        buf.clear();
        nfkc_fold(cp.value, buf);
        for (uint32_t f : buf) utf8_encode(to_lower_cp(f), folded);
    }
    std::string collapsed;
    bool in_space = false;
    for (char ch : folded) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            in_space = true;
            continue;
        }
        if (in_space && !collapsed.empty()) collapsed.push_back(' ');
        in_space = false;
        collapsed.push_back(ch);
    }
    while (!collapsed.empty()) {
        char back = collapsed.back();
        if (back == '.' || back == ',' || back == '!' || back == '?' || back == ' ')
            collapsed.pop_back();
        else
            break;
    }
    return collapsed;
}

inline MetricValue exact_match(const std::string& candidate,
                               const std::vector<std::string>& references) {
    if (references.empty())
        raise(ErrorCode::EmptyReferences, "exact_match needs at least one reference");
    MetricValue mv;
    mv.id = MetricId::ExactMatch;
    std::string norm = normalize_for_match(candidate);
    for (const auto& r : references) {
        if (norm == normalize_for_match(r)) {
            mv.value = 1.0;
            break;
        }
    }
    return mv;
}

// ---------------------------------------------------------------------------
// Multi-label metrics
// ---------------------------------------------------------------------------

inline MetricValue multilabel_metrics(const std::set<std::string>& predicted,
                                      const std::set<std::string>& gold) {
    MetricValue mv;
    mv.id = MetricId::MultiLabel;
    double p, r, f;
    size_t inter = 0;
    for (const auto& l : predicted)
        if (gold.count(l)) ++inter;
    if (predicted.empty() && gold.empty()) {
        p = r = f = 1.0;
    } else {
        p = predicted.empty() ? 0.0 : double(inter) / double(predicted.size());
        r = gold.empty() ? 0.0 : double(inter) / double(gold.size());
        f = (p + r == 0.0) ? 0.0 : 2.0 * p * r / (p + r);
    }
    mv.value = f;
    json per_label = json::object();
    for (const auto& l : predicted)
        per_label[l] = gold.count(l) ? "tp" : "fp";
    for (const auto& l : gold)
        if (!predicted.count(l)) per_label[l] = "fn";
    mv.details = json{{"micro_p", p}, {"micro_r", r}, {"micro_f1", f}, {"per_label", per_label}};
    return mv;
}

// Predicted label parsing for extraction tasks: comma/newline separated,
// trimmed, lowercased.
inline std::set<std::string> parse_labels(const std::string& text) {
    std::set<std::string> out;
    std::string cur;
    auto flush = [&]() {
        size_t b = cur.find_first_not_of(" \t\r");
        size_t e = cur.find_last_not_of(" \t\r");
        if (b != std::string::npos) {
            std::string l = cur.substr(b, e - b + 1);
            for (auto& ch : l) ch = char(std::tolower(static_cast<unsigned char>(ch)));
            out.insert(l);
        }
        cur.clear();
    };
    for (char ch : text) {
        if (ch == ',' || ch == '\n') flush();
        else cur.push_back(ch);
    }
    flush();
    return out;
}

// ---------------------------------------------------------------------------
// Applicability matrix
// ---------------------------------------------------------------------------

inline bool family_applicable(MetricFamily family, TaskKind task) {
    switch (family) {
        case MetricFamily::Rouge:
            return true;  // applicable to all four tasks
        case MetricFamily::Sari:
            return task == TaskKind::Summarization;
        case MetricFamily::Meteor:
            return task == TaskKind::ContentGeneration || task == TaskKind::QuestionAnswering;
        case MetricFamily::TextQuality:
            return task == TaskKind::Summarization || task == TaskKind::ContentGeneration;
        case MetricFamily::Bleu:
            return task == TaskKind::Summarization || task == TaskKind::ContentGeneration ||
                   task == TaskKind::QuestionAnswering;
        case MetricFamily::SentenceSimilarity:
            return task == TaskKind::Summarization;
        case MetricFamily::Readability:
            return task == TaskKind::Summarization || task == TaskKind::ContentGeneration;
        case MetricFamily::ExactMatch:
            return task == TaskKind::QuestionAnswering || task == TaskKind::EntityExtraction;
        case MetricFamily::MultiLabel:
            return task == TaskKind::EntityExtraction;
    }
    return false;
}

inline std::set<MetricId> applicable_metrics(TaskKind task) {
    static const MetricId all[] = {
        MetricId::Rouge1,     MetricId::Rouge2,   MetricId::RougeL,      MetricId::Sari,
        MetricId::Meteor,     MetricId::TextQuality, MetricId::Bleu,
        MetricId::SentenceSimilarity, MetricId::Readability, MetricId::ExactMatch,
        MetricId::MultiLabel};
    std::set<MetricId> out;
    for (MetricId id : all)
        if (family_applicable(metric_family(id), task)) out.insert(id);
    return out;
}

inline void require_applicable(MetricId id, TaskKind task) {
    if (!family_applicable(metric_family(id), task))
        raise(ErrorCode::ApplicabilityError, std::string(metric_id_name(id)) +
                                                 " is not applicable to task " +
                                                 task_kind_name(task));
}

// ---------------------------------------------------------------------------
// Case-level scoring glue used by the pipeline
// ---------------------------------------------------------------------------

// References actually scored against: the declared ones, or the sorted label
// set for label-only extraction cases.
inline std::vector<std::string> effective_references(const TestCase& c) {
    if (!c.references.empty()) return c.references;
    std::string joined;
    for (const auto& l : c.labels) {
        if (!joined.empty()) joined += ", ";
        joined += l;
    }
    return {joined};
}

inline MetricValue score_case(MetricId id, const std::string& candidate, const TestCase& c,
                              const Embedder& embedder = nullptr,
                              const MetricConstants& k = default_constants()) {
    require_applicable(id, c.task);
    auto refs = effective_references(c);
    switch (id) {
        case MetricId::Rouge1:
        case MetricId::Rouge2:
        case MetricId::RougeL:
            return rouge(candidate, refs, id, k);
        case MetricId::Sari:
            return sari(c.source, candidate, refs, k);
        case MetricId::Meteor: {
            MetricValue best;
            best.id = MetricId::Meteor;
            best.value = -1.0;
            for (const auto& r : refs) {
                MetricValue mv = meteor(candidate, r, k);
                if (mv.value > best.value) best = mv;
            }
            return best;
        }
        case MetricId::TextQuality:
            return text_quality(candidate, refs);
        case MetricId::Bleu:
            return bleu(candidate, refs, k.bleu_max_n, k);
        case MetricId::SentenceSimilarity: {
            MetricValue best;
            best.id = MetricId::SentenceSimilarity;
            best.value = -1.0;
            for (const auto& r : refs) {
                MetricValue mv = sentence_similarity(candidate, r, embedder, k);
                if (mv.value > best.value) best = mv;
            }
            return best;
        }
        case MetricId::Readability:
            return readability(candidate);
        case MetricId::ExactMatch:
            return exact_match(candidate, refs);
        case MetricId::MultiLabel:
            return multilabel_metrics(parse_labels(candidate), c.labels);
    }
    raise(ErrorCode::Internal, "unhandled metric id");
}

} // namespace genaiops::metrics
