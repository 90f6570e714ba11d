#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "sitelens/error.h"
#include "sitelens/filterlist.h"

namespace sitelens {
namespace {

std::string RandomDomain(std::mt19937_64& rng, int universe) {
  static const char* tlds[] = {"com", "org", "net", "news"};
  return "site" + std::to_string(rng() % universe) + "." + tlds[rng() % 4];
}

Filterlist RandomList(std::mt19937_64& rng, size_t approx, uint64_t checkpoint,
                      int universe = 400) {
  std::map<std::string, FilterEntry> by_domain;
  for (size_t i = 0; i < approx; ++i) {
    FilterEntry e;
    e.domain = RandomDomain(rng, universe);
    e.verdict = rng() % 2 ? Verdict::kBlacklisted : Verdict::kWhitelisted;
    e.probability = double(rng() % 1001) / 1000.0;
    e.updated_at = int64_t(rng() % 5);
    by_domain[e.domain] = e;
  }
  Filterlist list;
  list.checkpoint = checkpoint;
  for (auto& [_, e] : by_domain)
    list.entries.push_back(e);
  return list;
}

std::optional<Verdict> LinearLookup(const Filterlist& list, const std::string& domain) {
  for (const FilterEntry& e : list.entries)
    if (e.domain == domain)
      return e.verdict;
  return std::nullopt;
}

size_t CeilLog2(size_t n) {
  size_t bits = 0;
  while ((size_t{1} << bits) < n)
    ++bits;
  return bits;
}

TEST(BuildList, ThresholdsDecideMembership) {
  std::vector<Prediction> preds = {{"a.com", 0.95}, {"b.com", 0.05}, {"c.com", 0.4}};
  Filterlist list = BuildList(preds, 3, 1700000000);
  ASSERT_EQ(list.entries.size(), 2u);
  EXPECT_EQ(list.checkpoint, 3u);
  EXPECT_EQ(list.entries[0].domain, "a.com");
  EXPECT_EQ(list.entries[0].verdict, Verdict::kBlacklisted);
  EXPECT_EQ(list.entries[0].updated_at, 1700000000);
  EXPECT_EQ(list.entries[1].domain, "b.com");
  EXPECT_EQ(list.entries[1].verdict, Verdict::kWhitelisted);
  EXPECT_FALSE(Lookup(list, "c.com"));
}

TEST(BuildList, BoundariesAreInclusive) {
  std::vector<Prediction> preds = {{"x.com", 0.5}, {"y.com", 0.1}, {"z.com", 0.49}};
  Filterlist list = BuildList(preds, 1);
  EXPECT_EQ(Lookup(list, "x.com"), Verdict::kBlacklisted);
  EXPECT_EQ(Lookup(list, "y.com"), Verdict::kWhitelisted);
  EXPECT_FALSE(Lookup(list, "z.com"));
}

TEST(BuildList, NormalizesAndRejectsDuplicates) {
  std::vector<Prediction> preds = {{"Example.COM.", 0.9}, {"b.org", 0.0}};
  Filterlist list = BuildList(preds, 1);
  EXPECT_EQ(list.entries[0].domain, "b.org");
  EXPECT_EQ(list.entries[1].domain, "example.com");
  std::vector<Prediction> dup = {{"Example.com", 0.9}, {"example.com.", 0.1}};
  EXPECT_THROW(BuildList(dup, 1), Error);
  std::vector<Prediction> bad = {{"a.com", 1.5}};
  EXPECT_THROW(BuildList(bad, 1), Error);
  std::vector<Prediction> ok = {{"a.com", 0.3}};
  EXPECT_THROW(BuildList(ok, 1, 0, ListThresholds{0.05, 0.9}), Error);
}

TEST(Lookup, EmptyAndSingleton) {
  Filterlist empty;
  size_t cmp = 99;
  EXPECT_FALSE(Lookup(empty, "a.com", &cmp));
  EXPECT_EQ(cmp, 0u);
  Filterlist one{1, {{"a.com", Verdict::kWhitelisted, 0.01, 0}}};
  EXPECT_EQ(Lookup(one, "a.com", &cmp), Verdict::kWhitelisted);
  EXPECT_EQ(cmp, 1u);
  EXPECT_FALSE(Lookup(one, "b.com"));
}

TEST(Lookup, AgreesWithLinearScan) {
  std::mt19937_64 rng(10);
  Filterlist list = RandomList(rng, 14000, 1, 20000);
  ASSERT_GT(list.entries.size(), 9000u);
  size_t bound = CeilLog2(list.entries.size()) + 1;
  for (int q = 0; q < 1000; ++q) {
    std::string domain = q % 2 ? list.entries[rng() % list.entries.size()].domain
                               : RandomDomain(rng, 40000);
    size_t cmp = 0;
    EXPECT_EQ(Lookup(list, domain, &cmp), LinearLookup(list, domain)) << domain;
    EXPECT_LE(cmp, bound);
  }
}

TEST(Lookup, ComparisonBoundAtOneHundredThousand) {
  Filterlist list;
  for (int i = 0; i < 100000; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "d%06d.com", i);
    list.entries.push_back({buf, Verdict::kBlacklisted, 0.9, 0});
  }
  size_t worst = 0;
  for (int i = -1; i <= 100000; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "d%06d.com", i < 0 ? 0 : i);
    std::string probe = i < 0 ? "a.com" : (i == 100000 ? "z.com" : buf);
    size_t cmp = 0;
    Lookup(list, probe, &cmp);
    worst = std::max(worst, cmp);
    Lookup(list, probe + "x", &cmp);
    worst = std::max(worst, cmp);
  }
  EXPECT_LE(worst, 18u);
}

TEST(Delta, IdentityAndSingleAddition) {
  std::mt19937_64 rng(1);
  Filterlist a = RandomList(rng, 50, 1);
  Filterlist b = a;
  b.checkpoint = 2;
  Delta d = MakeDelta(a, b);
  EXPECT_TRUE(d.empty());
  EXPECT_EQ(d.from, 1u);
  EXPECT_EQ(d.to, 2u);

  FilterEntry extra{"zzz-new.com", Verdict::kBlacklisted, 0.7, 9};
  b.entries.push_back(extra);
  d = MakeDelta(a, b);
  EXPECT_EQ(d.upserts, std::vector<FilterEntry>{extra});
  EXPECT_TRUE(d.removals.empty());
  EXPECT_THROW(MakeDelta(b, a), Error);
  EXPECT_THROW(MakeDelta(a, a), Error);
}

TEST(Delta, RandomPairsRoundTrip) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    Filterlist old = RandomList(rng, rng() % 200, 5);
    Filterlist updated = RandomList(rng, rng() % 200, 6 + rng() % 3);
    // Keep some overlap so changes, removals and untouched entries all occur.
    for (size_t i = 0; i < old.entries.size(); i += 3)
      updated.entries.push_back(old.entries[i]);
    std::sort(updated.entries.begin(), updated.entries.end(),
              [](const auto& x, const auto& y) { return x.domain < y.domain; });
    updated.entries.erase(std::unique(updated.entries.begin(), updated.entries.end(),
                                      [](const auto& x, const auto& y) {
                                        return x.domain == y.domain;
                                      }),
                          updated.entries.end());
    Delta d = MakeDelta(old, updated);
    d.Validate();
    ASSERT_EQ(ApplyDelta(old, d), updated) << trial;
  }
}

TEST(Delta, ComposeMatchesSequentialApplication) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    Filterlist l1 = RandomList(rng, 60, 1, 100);
    Filterlist l2 = RandomList(rng, 60, 2, 100);
    Filterlist l3 = RandomList(rng, 60, 3, 100);
    Filterlist l4 = RandomList(rng, 60, 4, 100);
    Delta d1 = MakeDelta(l1, l2), d2 = MakeDelta(l2, l3), d3 = MakeDelta(l3, l4);
    Delta d12 = ComposeDelta(d1, d2);
    d12.Validate();
    EXPECT_EQ(ApplyDelta(l1, d12), ApplyDelta(ApplyDelta(l1, d1), d2));
    EXPECT_EQ(ComposeDelta(d12, d3), ComposeDelta(d1, ComposeDelta(d2, d3)));
    EXPECT_EQ(ApplyDelta(l1, ComposeDelta(d12, d3)), l4);
  }
}

TEST(Delta, ComposeEdgeCases) {
  std::mt19937_64 rng(4);
  Filterlist a = RandomList(rng, 30, 1), b = RandomList(rng, 30, 2);
  Delta d = MakeDelta(a, b);
  Delta up_to_date{2, 2, {}, {}};
  EXPECT_EQ(ComposeDelta(d, up_to_date), d);
  Delta empty_step{2, 3, {}, {}};
  Delta stretched = ComposeDelta(d, empty_step);
  EXPECT_EQ(stretched.upserts, d.upserts);
  EXPECT_EQ(stretched.removals, d.removals);
  EXPECT_EQ(stretched.to, 3u);

  Delta add{1, 2, {{"x.com", Verdict::kBlacklisted, 0.8, 0}}, {}};
  Delta remove{2, 3, {}, {"x.com"}};
  Delta net = ComposeDelta(add, remove);
  EXPECT_TRUE(net.upserts.empty());
  EXPECT_EQ(net.removals, std::vector<std::string>{"x.com"});
  EXPECT_THROW(ComposeDelta(add, add), Error);
}

TEST(Delta, ApplyRejectsStaleOrFutureAndIgnoresMissingRemovals) {
  Filterlist list{4, {{"a.com", Verdict::kBlacklisted, 0.9, 0}}};
  Delta stale{3, 5, {}, {}};
  try {
    ApplyDelta(list, stale);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("stale or future delta"), std::string::npos);
  }
  Delta future{5, 6, {}, {}};
  EXPECT_THROW(ApplyDelta(list, future), Error);

  Delta noop{4, 5, {}, {"not-there.com"}};
  Filterlist out = ApplyDelta(list, noop);
  EXPECT_EQ(out.entries, list.entries);
  EXPECT_EQ(out.checkpoint, 5u);
}

TEST(Serialization, CanonicalBytesRoundTrip) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Filterlist list = RandomList(rng, 40, rng() % 1000);
    std::string text = SerializeList(list);
    EXPECT_EQ(ParseList(text), list);
    EXPECT_EQ(SerializeList(ParseList(text)), text);
    EXPECT_EQ(text.find(' '), std::string::npos);
    Delta d = MakeDelta(list, RandomList(rng, 40, list.checkpoint + 1));
    std::string dt = SerializeDelta(d);
    EXPECT_EQ(SerializeDelta(ParseDelta(dt)), dt);
  }
  Filterlist small{7, {{"a.com", Verdict::kWhitelisted, 0.25, 12}}};
  EXPECT_EQ(SerializeList(small),
            R"({"checkpoint":7,"entries":[{"domain":"a.com","probability":0.25,)"
            R"("updated_at":12,"verdict":"whitelisted"}]})");
}

TEST(Serialization, GzipRoundTripAndCorruption) {
  std::mt19937_64 rng(3);
  std::string body = SerializeList(RandomList(rng, 500, 1));
  std::string z = GzipCompress(body);
  EXPECT_LT(z.size(), body.size());
  EXPECT_EQ(static_cast<unsigned char>(z[0]), 0x1f);
  EXPECT_EQ(GzipDecompress(z), body);
  EXPECT_EQ(GzipDecompress(GzipCompress("")), "");
  EXPECT_THROW(GzipDecompress(z.substr(0, z.size() / 2)), Error);
  EXPECT_THROW(GzipDecompress("not gzip"), Error);
}

TEST(Serialization, SaveAndLoadPlainOrCompressed) {
  std::mt19937_64 rng(5);
  Filterlist list = RandomList(rng, 100, 9);
  auto dir = std::filesystem::temp_directory_path() / "sitelens_filterlist_test";
  std::filesystem::create_directories(dir);
  SaveList(dir / "list.json", list);
  EXPECT_EQ(LoadList(dir / "list.json"), list);
  {
    std::ofstream out(dir / "list.json.gz", std::ios::binary);
    out << GzipCompress(SerializeList(list));
  }
  EXPECT_EQ(LoadList(dir / "list.json.gz"), list);
  EXPECT_THROW(LoadList(dir / "missing.json"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Validation, RejectsBrokenDocuments) {
  Filterlist unsorted{1, {{"b.com", Verdict::kBlacklisted, 0.9, 0},
                          {"a.com", Verdict::kBlacklisted, 0.9, 0}}};
  EXPECT_THROW(unsorted.Validate(), Error);
  Filterlist duplicate{1, {{"a.com", Verdict::kBlacklisted, 0.9, 0},
                           {"a.com", Verdict::kBlacklisted, 0.9, 0}}};
  EXPECT_THROW(duplicate.Validate(), Error);
  Filterlist upper{1, {{"A.com", Verdict::kBlacklisted, 0.9, 0}}};
  EXPECT_THROW(upper.Validate(), Error);
  Filterlist prob{1, {{"a.com", Verdict::kBlacklisted, 1.2, 0}}};
  EXPECT_THROW(prob.Validate(), Error);

  Delta overlap{1, 2, {{"a.com", Verdict::kBlacklisted, 0.9, 0}}, {"a.com"}};
  EXPECT_THROW(overlap.Validate(), Error);
  Delta backwards{3, 2, {}, {}};
  EXPECT_THROW(backwards.Validate(), Error);
  EXPECT_THROW(ParseList(R"({"checkpoint":1})"), Error);
  EXPECT_THROW(ParseList("{"), Error);
  EXPECT_THROW(ParseDelta(R"({"from":1,"to":2,"upserts":[],"removals":["B.com"]})"), Error);
}

}  // namespace
}  // namespace sitelens
