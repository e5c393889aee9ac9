#include <gtest/gtest.h>

#include "genaiops/safety.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace genaiops;
using namespace genaiops::safety;

namespace {

std::vector<PiiKind> kinds_of(const std::vector<PiiFinding>& findings) {
    std::vector<PiiKind> out;
    for (const auto& f : findings) out.push_back(f.kind);
    return out;
}

} // namespace

TEST(ScanPii, EmailBasics) {
    auto f = scan_pii("mail me at a@b.example");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].kind, PiiKind::Email);
    EXPECT_EQ(f[0].surface, "a@b.example");
}

TEST(ScanPii, EmailTrailingPunctuationExcluded) {
    auto f = scan_pii("Write to dev.team+ci@sub.example.org.");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].surface, "dev.team+ci@sub.example.org");
}

TEST(ScanPii, EmptyText) { EXPECT_TRUE(scan_pii("").empty()); }

TEST(ScanPii, LuhnValidCardDetected) {
    std::string digits = "4111111111111111";
    ASSERT_TRUE(oracle::luhn(digits));
    auto f = scan_pii("4111 1111 1111 1111");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].kind, PiiKind::CreditCard);
    EXPECT_EQ(f[0].surface, "4111 1111 1111 1111");
}

TEST(ScanPii, LuhnInvalidRunIgnored) {
    ASSERT_FALSE(oracle::luhn("4111111111111112"));
    EXPECT_TRUE(scan_pii("4111 1111 1111 1112").empty());
}

TEST(ScanPii, PhoneFormats) {
    for (const char* text : {"call 555-123-4567 now", "call (555) 123-4567", "call 555.123.4567",
                             "call +1 555 123 4567", "call +15551234567"}) {
        auto f = scan_pii(text);
        ASSERT_EQ(f.size(), 1u) << text;
        EXPECT_EQ(f[0].kind, PiiKind::Phone) << text;
    }
}

TEST(ScanPii, SsnLikeShape) {
    auto f = scan_pii("ssn 123-45-6789 on file");
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].kind, PiiKind::SsnLike);
    EXPECT_EQ(f[0].surface, "123-45-6789");
}

TEST(ScanPii, Ipv4Bounds) {
    auto f = scan_pii("host 192.168.0.1 and 255.255.255.255");
    EXPECT_EQ(kinds_of(f), (std::vector<PiiKind>{PiiKind::IpAddress, PiiKind::IpAddress}));
    EXPECT_TRUE(scan_pii("version 1.2.3.4.5").empty());   // five octets
    EXPECT_TRUE(scan_pii("code 300.1.1.1").empty());      // octet out of range
}

TEST(ScanPii, FindingsSortedByStartAndNonOverlapping) {
    auto f = scan_pii("a@b.example then 10.0.0.1 then 123-45-6789");
    ASSERT_EQ(f.size(), 3u);
    for (size_t i = 1; i < f.size(); ++i) {
        EXPECT_LE(f[i - 1].end, f[i].start);
        EXPECT_LT(f[i - 1].start, f[i].start);
    }
}

TEST(ScanPii, NegativesProduceNothing) {
    for (const char* text :
         {"meeting at 5pm tomorrow", "score was 10-2 overall", "room 101 on floor 3",
          "pi is 3.14159", "version v2.1 shipped", "the meeting is 9-5",
          "ticket ABC-123 closed", "50% of 200 users", "see section 1.2 for details",
          "the office number extension is 42"}) {
        EXPECT_TRUE(scan_pii(text).empty()) << text;
    }
}

TEST(Redact, PhoneExample) {
    std::string text = "call 555-123-4567";
    EXPECT_EQ(redact(text, scan_pii(text)), "call [PHONE]");
}

TEST(Redact, NoFindingsIsIdentity) {
    std::string text = "nothing sensitive here";
    EXPECT_EQ(redact(text, {}), text);
}

TEST(Redact, MultipleSpansLeftToRight) {
    std::string text = "a@b.example called 555-123-4567 from 10.0.0.1";
    EXPECT_EQ(redact(text, scan_pii(text)), "[EMAIL] called [PHONE] from [IP_ADDRESS]");
}

TEST(Redact, SpanOutOfRangeRejected) {
    PiiFinding bad{PiiKind::Email, 5, 999, "x", "[EMAIL]"};
    EXPECT_THROW(redact("short", {bad}), Error);
}

TEST(Redact, RescanAfterRedactionFindsNothing) {
    std::string text =
        "contact a@b.example, card 4111 1111 1111 1111, ssn 123-45-6789, call +15551234567, "
        "host 10.0.0.1";
    std::string redacted = redact(text, scan_pii(text));
    EXPECT_TRUE(scan_pii(redacted).empty()) << redacted;
    EXPECT_EQ(redact(redacted, scan_pii(redacted)), redacted);  // idempotent
}

TEST(ScanPii, Utf8NeighborsDoNotBreakOffsets) {
    std::string text = "café a@b.example café";
    auto f = scan_pii(text);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(text.substr(f[0].start, f[0].end - f[0].start), "a@b.example");
}

// ---------------------------------------------------------------------------
// HAP
// ---------------------------------------------------------------------------

TEST(ScanHap, EmptyLexiconScoresZero) {
    auto lexicon = Lexicon::from_terms({});
    auto report = scan_hap("any text at all", lexicon);
    EXPECT_DOUBLE_EQ(report.score, 0.0);
    EXPECT_TRUE(report.hits.empty());
}

TEST(ScanHap, DensityFormulaSaturates) {
    auto lexicon = Lexicon::from_terms({"slur"});
    // 10 tokens, 1 hit -> min(1, 1/10 * 10) = 1.0
    auto report = scan_hap("one two three four five six seven eight nine slur", lexicon);
    EXPECT_EQ(report.hits.size(), 1u);
    EXPECT_DOUBLE_EQ(report.score, 1.0);
}

TEST(ScanHap, SubSaturationDensity) {
    auto lexicon = Lexicon::from_terms({"slur"});
    std::string text = "slur";
    for (int i = 0; i < 39; ++i) text += " word";
    auto report = scan_hap(text, lexicon);  // 1 hit / 40 tokens * 10 = 0.25
    EXPECT_DOUBLE_EQ(report.score, 0.25);
}

TEST(ScanHap, NoHitsWithNonEmptyLexicon) {
    auto lexicon = Lexicon::from_terms({"slur", "awful phrase"});
    auto report = scan_hap("a perfectly calm sentence", lexicon);
    EXPECT_DOUBLE_EQ(report.score, 0.0);
}

TEST(ScanHap, WholeTokenMatchOnly) {
    auto lexicon = Lexicon::from_terms({"ass"});
    EXPECT_TRUE(scan_hap("the assassin class passed", lexicon).hits.empty());
    EXPECT_EQ(scan_hap("you ass!", lexicon).hits.size(), 1u);
}

TEST(ScanHap, PhraseMatchSpansTokens) {
    auto lexicon = Lexicon::from_terms({"awful phrase"});
    std::string text = "that Awful   PHRASE again";
    auto report = scan_hap(text, lexicon);
    ASSERT_EQ(report.hits.size(), 1u);
    EXPECT_EQ(report.hits[0].term, "awful phrase");
    EXPECT_EQ(text.substr(report.hits[0].start, report.hits[0].end - report.hits[0].start),
              "Awful   PHRASE");
}

TEST(ScanHap, CaseInsensitiveViaTokenizer) {
    auto lexicon = Lexicon::from_terms({"slur"});
    EXPECT_EQ(scan_hap("SLUR Slur slur", lexicon).hits.size(), 3u);
}

TEST(ScanHap, MissingLexiconIsAnError) {
    Lexicon unloaded;
    EXPECT_THROW(scan_hap("text", unloaded), Error);
}

TEST(ScanHap, DeterministicReports) {
    auto lexicon = Lexicon::from_terms({"bad", "worse phrase"});
    std::string text = "bad things and a worse phrase and bad again";
    auto a = scan_hap(text, lexicon);
    auto b = scan_hap(text, lexicon);
    EXPECT_EQ(a.score, b.score);
    ASSERT_EQ(a.hits.size(), b.hits.size());
    for (size_t i = 0; i < a.hits.size(); ++i) {
        EXPECT_EQ(a.hits[i].term, b.hits[i].term);
        EXPECT_EQ(a.hits[i].start, b.hits[i].start);
    }
    EXPECT_EQ(a.lexicon_id, b.lexicon_id);
}

TEST(Lexicon, FileLoadingSkipsCommentsAndHashesContent) {
    testutil::TempDir dir;
    testutil::write_file(dir.file("lex.txt"), "# comment line\nslur\nawful phrase  # trailing\n\n");
    auto lexicon = Lexicon::from_file(dir.file("lex.txt").string());
    EXPECT_EQ(lexicon.size(), 2u);
    EXPECT_EQ(lexicon.id().rfind("sha256:", 0), 0u);
    auto same = Lexicon::from_terms({"slur", "awful phrase"});
    EXPECT_EQ(lexicon.id(), same.id());
}
