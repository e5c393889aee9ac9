#pragma once
// Shared text normalization: UTF-8 aware tokenizer (NFKC-style compatibility
// folding, lowercasing, alphanumeric runs) plus the hashed term-frequency
// vectorizer. Every n-gram metric and the HAP scanner tokenize through here
// so cross-model scores stay tokenizer-consistent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace genaiops {

struct CodePoint {
    uint32_t value;
    size_t byte_offset;
    size_t byte_len;
};

inline std::vector<CodePoint> utf8_decode(std::string_view s) {
    std::vector<CodePoint> out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        uint8_t b0 = uint8_t(s[i]);
        uint32_t cp = 0xFFFD;
        size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 >> 5) == 0x6 && i + 1 < s.size() && (uint8_t(s[i + 1]) >> 6) == 0x2) {
            cp = (uint32_t(b0 & 0x1F) << 6) | (uint8_t(s[i + 1]) & 0x3F);
            len = 2;
        } else if ((b0 >> 4) == 0xE && i + 2 < s.size() && (uint8_t(s[i + 1]) >> 6) == 0x2 &&
                   (uint8_t(s[i + 2]) >> 6) == 0x2) {
            cp = (uint32_t(b0 & 0x0F) << 12) | (uint32_t(uint8_t(s[i + 1]) & 0x3F) << 6) |
                 (uint8_t(s[i + 2]) & 0x3F);
            len = 3;
        } else if ((b0 >> 3) == 0x1E && i + 3 < s.size() && (uint8_t(s[i + 1]) >> 6) == 0x2 &&
                   (uint8_t(s[i + 2]) >> 6) == 0x2 && (uint8_t(s[i + 3]) >> 6) == 0x2) {
            cp = (uint32_t(b0 & 0x07) << 18) | (uint32_t(uint8_t(s[i + 1]) & 0x3F) << 12) |
                 (uint32_t(uint8_t(s[i + 2]) & 0x3F) << 6) | (uint8_t(s[i + 3]) & 0x3F);
            len = 4;
        }
        out.push_back({cp, i, len});
        i += len;
    }
    return out;
}

inline void utf8_encode(uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(char(cp));
    } else if (cp < 0x800) {
        out.push_back(char(0xC0 | (cp >> 6)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(char(0xE0 | (cp >> 12)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(char(0xF0 | (cp >> 18)));
        out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(char(0x80 | (cp & 0x3F)));
    }
}

// Compatibility folding for the code points that show up in model output:
// fullwidth forms, common ligatures, typographic spaces/dashes/quotes.
inline void nfkc_fold(uint32_t cp, std::vector<uint32_t>& out) {
    if (cp >= 0xFF01 && cp <= 0xFF5E) { out.push_back(cp - 0xFEE0); return; } // fullwidth ASCII
    switch (cp) {
        case 0x00A0: case 0x2007: case 0x202F: case 0x3000: out.push_back(0x20); return;
        case 0x2018: case 0x2019: case 0x201A: out.push_back('\''); return;
        case 0x201C: case 0x201D: case 0x201E: out.push_back('"'); return;
        case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014: case 0x2015:
            out.push_back('-'); return;
        case 0x2026: out.push_back('.'); out.push_back('.'); out.push_back('.'); return;
        case 0x2044: out.push_back('/'); return;
        case 0xFB00: out.push_back('f'); out.push_back('f'); return;
        case 0xFB01: out.push_back('f'); out.push_back('i'); return;
        case 0xFB02: out.push_back('f'); out.push_back('l'); return;
        case 0xFB03: out.push_back('f'); out.push_back('f'); out.push_back('i'); return;
        case 0xFB04: out.push_back('f'); out.push_back('f'); out.push_back('l'); return;
        default: out.push_back(cp); return;
    }
}

inline uint32_t to_lower_cp(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20; // Latin-1
    if (cp >= 0x0100 && cp <= 0x0137) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x0139 && cp <= 0x0148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x014A && cp <= 0x0177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x0178) return 0x00FF;
    if (cp == 0x0179 || cp == 0x017B || cp == 0x017D) return cp + 1;
    if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 0x20; // Greek
    if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;                // Cyrillic
    if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
    return cp;
}

inline bool is_alnum_cp(uint32_t cp) {
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp >= 0xC0 && cp <= 0xFF) return cp != 0xD7 && cp != 0xF7;   // Latin-1 letters
    if (cp >= 0x0100 && cp <= 0x024F) return true;                   // Latin Extended A/B
    if (cp >= 0x0386 && cp <= 0x03FF) return cp != 0x0387;           // Greek
    if (cp >= 0x0400 && cp <= 0x04FF) return true;                   // Cyrillic
    if (cp >= 0x3040 && cp <= 0x30FF) return cp != 0x3099 && cp != 0x309A; // kana
    if (cp >= 0x4E00 && cp <= 0x9FFF) return true;                   // CJK unified
    if (cp >= 0xAC00 && cp <= 0xD7AF) return true;                   // Hangul
    return false;
}

struct TokenSpan {
    std::string text;   // normalized token
    size_t byte_start;  // span in the original string
    size_t byte_end;
};

inline std::vector<TokenSpan> tokenize_spans(std::string_view text) {
    std::vector<TokenSpan> tokens;
    TokenSpan current{};
    bool open = false;
    std::vector<uint32_t> folded;
    for (const CodePoint& cp : utf8_decode(text)) {
        folded.clear();
        nfkc_fold(cp.value, folded);
        for (uint32_t f : folded) {
            uint32_t lower = to_lower_cp(f);
            if (is_alnum_cp(lower)) {
                if (!open) {
                    current = TokenSpan{{}, cp.byte_offset, cp.byte_offset + cp.byte_len};
                    open = true;
                }
                utf8_encode(lower, current.text);
                current.byte_end = cp.byte_offset + cp.byte_len;
            } else if (open) {
                tokens.push_back(std::move(current));
                current = TokenSpan{};
                open = false;
            }
        }
    }
    if (open) tokens.push_back(std::move(current));
    return tokens;
}

// NFKC fold, lowercase, split on runs of non-alphanumerics, drop empties.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize_spans(text)) out.push_back(std::move(t.text));
    return out;
}

inline std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline constexpr size_t kTfBuckets = 1024;

// Term-frequency vector over tokenize() output, FNV-1a hashed into buckets.
inline std::vector<double> hashed_tf_vector(std::string_view text, size_t dim = kTfBuckets) {
    std::vector<double> v(dim, 0.0);
    for (const auto& tok : tokenize(text)) v[fnv1a64(tok) % dim] += 1.0;
    return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 && nb == 0.0) return 1.0;
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = dot / std::sqrt(na * nb);
    return std::clamp(c, 0.0, 1.0);
}

inline double hashed_tf_cosine(std::string_view a, std::string_view b, size_t dim = kTfBuckets) {
    return cosine(hashed_tf_vector(a, dim), hashed_tf_vector(b, dim));
}

} // namespace genaiops
