#pragma once
// Rule-based PII and HAP screening. Detection is deterministic: fixed pattern
// scanners for five PII kinds (longest match wins on overlap) and a pluggable
// lowercase lexicon for hate/abuse/profanity with density scoring.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "genaiops/errors.hpp"
#include "genaiops/sha256.hpp"
#include "genaiops/text.hpp"

namespace genaiops::safety {

enum class PiiKind { Email, Phone, SsnLike, CreditCard, IpAddress };

inline const char* pii_kind_name(PiiKind k) {
    switch (k) {
        case PiiKind::Email: return "email";
        case PiiKind::Phone: return "phone";
        case PiiKind::SsnLike: return "ssn_like";
        case PiiKind::CreditCard: return "credit_card";
        case PiiKind::IpAddress: return "ip_address";
    }
    return "unknown";
}

inline const char* pii_redaction(PiiKind k) {
    switch (k) {
        case PiiKind::Email: return "[EMAIL]";
        case PiiKind::Phone: return "[PHONE]";
        case PiiKind::SsnLike: return "[SSN_LIKE]";
        case PiiKind::CreditCard: return "[CREDIT_CARD]";
        case PiiKind::IpAddress: return "[IP_ADDRESS]";
    }
    return "[PII]";
}

struct PiiFinding {
    PiiKind kind;
    size_t start = 0;  // byte offsets into the scanned text
    size_t end = 0;
    std::string surface;
    std::string redaction;
};

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }

inline bool luhn_valid(const std::string& digits) {
    int sum = 0;
    bool dbl = false;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        int d = *it - '0';
        if (dbl) {
            d *= 2;
            if (d > 9) d -= 9;
        }
        sum += d;
        dbl = !dbl;
    }
    return sum % 10 == 0;
}

inline bool local_char(char c) {
    return is_alnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}
inline bool domain_char(char c) { return is_alnum(c) || c == '.' || c == '-'; }

inline void scan_email(const std::string& t, std::vector<PiiFinding>& out) {
    for (size_t at = 0; at < t.size(); ++at) {
        if (t[at] != '@') continue;
        size_t lo = at;
        while (lo > 0 && local_char(t[lo - 1])) --lo;
        if (lo == at) continue;
        size_t hi = at + 1;
        while (hi < t.size() && domain_char(t[hi])) ++hi;
        // trim trailing sentence punctuation
        while (hi > at + 1 && (t[hi - 1] == '.' || t[hi - 1] == '-')) --hi;
        if (hi == at + 1) continue;
        std::string domain = t.substr(at + 1, hi - at - 1);
        // need at least one dot and an alphabetic TLD of length >= 2
        size_t dot = domain.rfind('.');
        if (dot == std::string::npos || dot == 0) continue;
        std::string tld = domain.substr(dot + 1);
        if (tld.size() < 2) continue;
        if (!std::all_of(tld.begin(), tld.end(), [](char c) { return is_alpha(c); })) continue;
        bool label_ok = true;
        size_t label_start = 0;
        for (size_t i = 0; i <= domain.size(); ++i) {
            if (i == domain.size() || domain[i] == '.') {
                if (i == label_start) { label_ok = false; break; }
                label_start = i + 1;
            }
        }
        if (!label_ok) continue;
        out.push_back({PiiKind::Email, lo, hi, t.substr(lo, hi - lo), pii_redaction(PiiKind::Email)});
    }
}

inline bool boundary_before(const std::string& t, size_t pos) {
    return pos == 0 || (!is_digit(t[pos - 1]) && t[pos - 1] != '+');
}
inline bool no_digit_after(const std::string& t, size_t pos) {
    return pos >= t.size() || !is_digit(t[pos]);
}

inline bool match_digits(const std::string& t, size_t& pos, int min_d, int max_d, int& count) {
    size_t p = pos;
    while (p < t.size() && is_digit(t[p]) && int(p - pos) < max_d) ++p;
    count = int(p - pos);
    if (count < min_d) return false;
    pos = p;
    return true;
}

inline bool is_sep(char c) { return c == ' ' || c == '.' || c == '-'; }

// Grouped formats (area-exchange-line with ., -, or space separators, with
// optional +cc prefix and optional parentheses) plus bare E.164. Bare
// separator-free digit runs are deliberately not treated as phone numbers.
inline void scan_phone(const std::string& t, std::vector<PiiFinding>& out) {
    for (size_t start = 0; start < t.size(); ++start) {
        if (!boundary_before(t, start)) continue;
        char c0 = t[start];
        if (c0 != '+' && c0 != '(' && !is_digit(c0)) continue;

        // E.164: + followed by 8..15 digits
        if (c0 == '+') {
            size_t p = start + 1;
            int n = 0;
            if (match_digits(t, p, 8, 15, n) && no_digit_after(t, p)) {
                out.push_back({PiiKind::Phone, start, p, t.substr(start, p - start),
                               pii_redaction(PiiKind::Phone)});
                continue;
            }
        }

        size_t p = start;
        int total = 0, n = 0;
        if (t[p] == '+') {
            ++p;
            if (!match_digits(t, p, 1, 3, n)) continue;
            if (p >= t.size() || !is_sep(t[p])) continue;
            ++p;
        }
        if (p < t.size() && t[p] == '(') {
            ++p;
            if (!match_digits(t, p, 2, 4, n)) continue;
            total += n;
            if (p >= t.size() || t[p] != ')') continue;
            ++p;
            if (p < t.size() && is_sep(t[p])) ++p;
        } else {
            if (!match_digits(t, p, 2, 4, n)) continue;
            total += n;
            if (p >= t.size() || !is_sep(t[p])) continue;
            ++p;
        }
        if (!match_digits(t, p, 3, 4, n)) continue;
        total += n;
        if (p >= t.size() || !is_sep(t[p])) continue;
        ++p;
        if (!match_digits(t, p, 3, 4, n)) continue;
        total += n;
        if (!no_digit_after(t, p)) continue;
        // 4-4-4 groupings are card shaped, not phone shaped
        if (total < 8 || total > 11) continue;
        out.push_back(
            {PiiKind::Phone, start, p, t.substr(start, p - start), pii_redaction(PiiKind::Phone)});
    }
}

inline void scan_ssn(const std::string& t, std::vector<PiiFinding>& out) {
    for (size_t start = 0; start + 11 <= t.size(); ++start) {
        if (!boundary_before(t, start)) continue;
        const char* p = t.data() + start;
        bool ok = is_digit(p[0]) && is_digit(p[1]) && is_digit(p[2]) && p[3] == '-' &&
                  is_digit(p[4]) && is_digit(p[5]) && p[6] == '-' && is_digit(p[7]) &&
                  is_digit(p[8]) && is_digit(p[9]) && is_digit(p[10]);
        if (!ok) continue;
        if (!no_digit_after(t, start + 11)) continue;
        if (start + 11 < t.size() && t[start + 11] == '-') continue;
        out.push_back({PiiKind::SsnLike, start, start + 11, t.substr(start, 11),
                       pii_redaction(PiiKind::SsnLike)});
    }
}

inline void scan_credit_card(const std::string& t, std::vector<PiiFinding>& out) {
    size_t i = 0;
    while (i < t.size()) {
        if (!is_digit(t[i]) || !boundary_before(t, i)) {
            ++i;
            continue;
        }
        // maximal run of digits with single space/dash separators between groups
        size_t p = i;
        std::string digits;
        size_t last_digit_end = i;
        while (p < t.size()) {
            if (is_digit(t[p])) {
                digits.push_back(t[p]);
                ++p;
                last_digit_end = p;
            } else if ((t[p] == ' ' || t[p] == '-') && p + 1 < t.size() && is_digit(t[p + 1]) &&
                       p == last_digit_end) {
                ++p;
            } else {
                break;
            }
        }
        if (digits.size() >= 13 && digits.size() <= 19 && luhn_valid(digits)) {
            out.push_back({PiiKind::CreditCard, i, last_digit_end, t.substr(i, last_digit_end - i),
                           pii_redaction(PiiKind::CreditCard)});
        }
        i = std::max(last_digit_end, i + 1);
    }
}

inline void scan_ipv4(const std::string& t, std::vector<PiiFinding>& out) {
    for (size_t start = 0; start < t.size(); ++start) {
        if (!is_digit(t[start])) continue;
        if (start > 0 && (is_digit(t[start - 1]) || t[start - 1] == '.')) continue;
        size_t p = start;
        bool ok = true;
        for (int octet = 0; octet < 4; ++octet) {
            int n = 0, value = 0;
            size_t q = p;
            while (q < t.size() && is_digit(t[q]) && n < 3) {
                value = value * 10 + (t[q] - '0');
                ++q;
                ++n;
            }
            if (n == 0 || value > 255) { ok = false; break; }
            p = q;
            if (octet < 3) {
                if (p >= t.size() || t[p] != '.') { ok = false; break; }
                ++p;
            }
        }
        if (!ok) continue;
        if (p < t.size() && (is_digit(t[p]) || (t[p] == '.' && p + 1 < t.size() && is_digit(t[p + 1]))))
            continue;
        out.push_back({PiiKind::IpAddress, start, p, t.substr(start, p - start),
                       pii_redaction(PiiKind::IpAddress)});
    }
}

inline int kind_priority(PiiKind k) {
    switch (k) {
        case PiiKind::Email: return 0;
        case PiiKind::CreditCard: return 1;
        case PiiKind::SsnLike: return 2;
        case PiiKind::Phone: return 3;
        case PiiKind::IpAddress: return 4;
    }
    return 5;
}

} // namespace detail

// Pattern scan for emails, phones, SSN-like ids, Luhn-valid card numbers and
// IPv4 addresses. Overlaps resolve longest-match-first (ties: earlier start,
// then kind priority); results are sorted by start.
inline std::vector<PiiFinding> scan_pii(const std::string& text) {
    std::vector<PiiFinding> candidates;
    detail::scan_email(text, candidates);
    detail::scan_credit_card(text, candidates);
    detail::scan_ssn(text, candidates);
    detail::scan_phone(text, candidates);
    detail::scan_ipv4(text, candidates);

    std::sort(candidates.begin(), candidates.end(), [](const PiiFinding& a, const PiiFinding& b) {
        size_t la = a.end - a.start, lb = b.end - b.start;
        if (la != lb) return la > lb;
        if (a.start != b.start) return a.start < b.start;
        return detail::kind_priority(a.kind) < detail::kind_priority(b.kind);
    });
    std::vector<PiiFinding> accepted;
    for (const auto& c : candidates) {
        bool overlaps = false;
        for (const auto& a : accepted) {
            if (c.start < a.end && a.start < c.end) { overlaps = true; break; }
        }
        if (!overlaps) accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const PiiFinding& a, const PiiFinding& b) { return a.start < b.start; });
    return accepted;
}

// Replace each finding span by its kind placeholder. Findings must come from
// scan_pii on the same text (sorted, non-overlapping, in range).
inline std::string redact(const std::string& text, const std::vector<PiiFinding>& findings) {
    std::string out;
    size_t pos = 0;
    for (const auto& f : findings) {
        if (f.start < pos || f.end > text.size() || f.start > f.end)
            raise(ErrorCode::SpanOutOfRange,
                  "finding span [" + std::to_string(f.start) + "," + std::to_string(f.end) +
                      ") does not fit the text");
        out.append(text, pos, f.start - pos);
        out += f.redaction;
        pos = f.end;
    }
    out.append(text, pos, std::string::npos);
    return out;
}

// ---------------------------------------------------------------------------
// HAP lexicon scanning
// ---------------------------------------------------------------------------

struct HapHit {
    std::string term;
    size_t start = 0;
    size_t end = 0;
};

struct HapReport {
    double score = 0.0;
    std::vector<HapHit> hits;
    std::string lexicon_id;
};

class Lexicon {
public:
    Lexicon() = default;

    static Lexicon from_terms(const std::vector<std::string>& terms) {
        Lexicon lx;
        std::string canon;
        for (const auto& t : terms) {
            auto toks = tokenize(t);
            if (toks.empty()) continue;
            lx.phrases_.push_back(toks);
            for (size_t i = 0; i < toks.size(); ++i) {
                if (i) canon += ' ';
                canon += toks[i];
            }
            canon += '\n';
        }
        std::sort(lx.phrases_.begin(), lx.phrases_.end());
        lx.phrases_.erase(std::unique(lx.phrases_.begin(), lx.phrases_.end()), lx.phrases_.end());
        lx.id_ = "sha256:" + sha256_hex(canon);
        lx.loaded_ = true;
        return lx;
    }

    // One term/phrase per line, '#' starts a comment.
    static Lexicon from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) raise(ErrorCode::ConfigError, "cannot open lexicon file '" + path + "'");
        std::vector<std::string> terms;
        std::string line;
        while (std::getline(in, line)) {
            size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            terms.push_back(line);
        }
        return from_terms(terms);
    }

    bool loaded() const { return loaded_; }
    const std::string& id() const { return id_; }
    size_t size() const { return phrases_.size(); }
    const std::vector<std::vector<std::string>>& phrases() const { return phrases_; }

private:
    std::vector<std::vector<std::string>> phrases_;
    std::string id_;
    bool loaded_ = false;
};

struct HapConfig {
    double density_multiplier = 10.0;  // one hit in a 10-token answer saturates
};

// Whole-token and phrase matching over the shared tokenizer; score is the
// capped hit density: min(1, hits / max(1, tokens) * multiplier).
inline HapReport scan_hap(const std::string& text, const Lexicon& lexicon,
                          const HapConfig& cfg = {}) {
    if (!lexicon.loaded()) raise(ErrorCode::LexiconMissing, "no lexicon loaded");
    HapReport report;
    report.lexicon_id = lexicon.id();
    auto tokens = tokenize_spans(text);
    size_t i = 0;
    while (i < tokens.size()) {
        size_t best_len = 0;
        const std::vector<std::string>* best_phrase = nullptr;
        for (const auto& phrase : lexicon.phrases()) {
            if (phrase.size() <= best_len || i + phrase.size() > tokens.size()) continue;
            bool match = true;
            for (size_t j = 0; j < phrase.size(); ++j) {
                if (tokens[i + j].text != phrase[j]) { match = false; break; }
            }
            if (match) {
                best_len = phrase.size();
                best_phrase = &phrase;
            }
        }
        if (best_phrase) {
            std::string term;
            for (size_t j = 0; j < best_phrase->size(); ++j) {
                if (j) term += ' ';
                term += (*best_phrase)[j];
            }
            report.hits.push_back({term, tokens[i].byte_start, tokens[i + best_len - 1].byte_end});
            i += best_len;
        } else {
            ++i;
        }
    }
    size_t token_count = tokens.size();
    report.score = std::min(
        1.0, double(report.hits.size()) / double(std::max<size_t>(1, token_count)) *
                 cfg.density_multiplier);
    return report;
}

} // namespace genaiops::safety
