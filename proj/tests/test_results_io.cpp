#include <gtest/gtest.h>

#include <sstream>

#include "busfi/results_io.hpp"

using namespace busfi;

namespace {

CampaignResult small_campaign(BusKind bus, std::uint64_t first, std::uint64_t last) {
    CampaignConfig c;
    c.bus = bus;
    c.model = FaultModelKind::BitFlip;
    c.cycle_first = first;
    c.cycle_last = last;
    c.out = "a.jsonl";
    return run_campaign(c, verifypin(), 2);
}

std::string to_text(const CampaignResult& r) {
    std::ostringstream os;
    write_results(os, r.config, r.golden_cycles, r.space_size, r.records);
    return os.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) s += l + '\n';
    return s;
}

std::size_t error_line(const std::string& text) {
    std::istringstream is(text);
    try {
        read_results(is);
    } catch (const ResultsError& e) {
        return e.line();
    }
    return SIZE_MAX;
}

bool same_records(const std::vector<InjectionRecord>& a, const std::vector<InjectionRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto &x = a[i], &y = b[i];
        if (!(x.spec == y.spec) || x.spec.bus != y.spec.bus || x.outcome != y.outcome || !(x.effects == y.effects) ||
            x.termination != y.termination || x.cycles != y.cycles || x.divergence != y.divergence ||
            x.g_authenticated != y.g_authenticated)
            return false;
    }
    return true;
}

}  // namespace

TEST(ResultsIo, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(ResultsIo, PersistThenLoadRoundTrips) {
    const auto res = small_campaign(BusKind::Wishbone, 55, 75);
    std::istringstream is(to_text(res));
    const auto f = read_results(is);
    EXPECT_EQ(f.hash, config_hash(res.config));
    EXPECT_EQ(f.golden_cycles, res.golden_cycles);
    EXPECT_EQ(f.space_size, res.space_size);
    EXPECT_EQ(format_config(f.config), format_config(res.config));
    EXPECT_TRUE(same_records(f.records, res.records));
    // Writing what was read gives the same bytes.
    std::ostringstream os;
    write_results(os, f.config, f.golden_cycles, f.space_size, f.records);
    EXPECT_EQ(os.str(), to_text(res));
}

TEST(ResultsIo, OutputPathDoesNotAffectTheHash) {
    CampaignConfig a;
    a.out = "x.jsonl";
    CampaignConfig b = a;
    b.out = "y.jsonl";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 5;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(ResultsIo, TamperedLineIsReportedByNumber) {
    auto lines = lines_of(to_text(small_campaign(BusKind::Wishbone, 60, 66)));
    ASSERT_GT(lines.size(), 6u);
    auto& victim = lines[5];
    const auto pos = victim.find("\"cycles\":");
    ASSERT_NE(pos, std::string::npos);
    victim.insert(pos + 9, "1");
    EXPECT_EQ(error_line(join_lines(lines)), 6u);
}

TEST(ResultsIo, TruncatedJsonIsReportedByNumber) {
    auto lines = lines_of(to_text(small_campaign(BusKind::Wishbone, 60, 62)));
    lines[3].resize(lines[3].size() / 2);
    EXPECT_EQ(error_line(join_lines(lines)), 4u);
}

TEST(ResultsIo, HeaderProblemsAreLineOne) {
    auto lines = lines_of(to_text(small_campaign(BusKind::Wishbone, 60, 62)));
    auto bad_hash = lines;
    const auto p = bad_hash[0].find("\"config_hash\":\"") + 15;
    bad_hash[0][p] = bad_hash[0][p] == '0' ? '1' : '0';
    EXPECT_EQ(error_line(join_lines(bad_hash)), 1u);
    EXPECT_EQ(error_line("{\"hello\":1}\n"), 1u);
    EXPECT_EQ(error_line("not json\n"), 1u);
}

TEST(ResultsIo, MissingRecordsAreDetected) {
    auto lines = lines_of(to_text(small_campaign(BusKind::Wishbone, 60, 62)));
    lines.pop_back();
    std::istringstream is(join_lines(lines));
    EXPECT_THROW(read_results(is), ResultsError);
}

TEST(ResultsIo, MergeRefusesDifferentConfigs) {
    const auto a = small_campaign(BusKind::Wishbone, 60, 62);
    const auto b = small_campaign(BusKind::Wishbone, 63, 65);
    std::istringstream ia(to_text(a)), ib(to_text(b));
    const auto fa = read_results(ia), fb = read_results(ib);
    EXPECT_THROW(merge({fa, fb}), ResultsError);
}

TEST(ResultsIo, MergeOfShardsIsSortedBySpec) {
    const auto a = small_campaign(BusKind::AxiLite, 60, 64);
    std::istringstream is(to_text(a));
    const auto whole = read_results(is);
    ResultsFile first = whole, second = whole;
    const auto half = whole.records.size() / 2;
    first.records.assign(whole.records.begin() + half, whole.records.end());
    second.records.assign(whole.records.begin(), whole.records.begin() + half);
    const auto merged = merge({first, second});
    ASSERT_EQ(merged.records.size(), whole.records.size());
    EXPECT_TRUE(std::is_sorted(merged.records.begin(), merged.records.end(),
                               [](const auto& x, const auto& y) { return spec_key_less(x.spec, y.spec); }));
}

TEST(ResultsIo, LoadMissingFileIsIoError) {
    EXPECT_THROW(load("/nonexistent/dir/results.jsonl"), std::ios_base::failure);
}
