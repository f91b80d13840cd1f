#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "hdm/common.hpp"
#include "hdm/kv_config.hpp"
#include "hdm/parallel.hpp"
#include "hdm/summation.hpp"
#include "hdm/text_io.hpp"

namespace hdm {
namespace {

TEST(FormatExactTest, RoundTripsRandomDoubles) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 5000) {
    const std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    double back = 0.0;
    ASSERT_TRUE(ParseDouble(FormatExact(v), back)) << FormatExact(v);
    EXPECT_EQ(back, v);
    ++checked;
  }
}

TEST(FormatExactTest, ShortestForm) {
  EXPECT_EQ(FormatExact(0.1), "0.1");
  EXPECT_EQ(FormatExact(2.0), "2");
  EXPECT_EQ(FormatExact(-0.5), "-0.5");
}

TEST(ParseTest, RejectsTrailingGarbage) {
  double d = 0.0;
  long long i = 0;
  EXPECT_FALSE(ParseDouble("1.5x", d));
  EXPECT_FALSE(ParseDouble("", d));
  EXPECT_FALSE(ParseInt("12.0", i));
  ASSERT_TRUE(ParseInt("12", i));
  EXPECT_EQ(i, 12);
}

TEST(KvConfigTest, SectionsCommentsAndOverwrite) {
  const KvConfig config = KvConfig::Parse(
      "# header comment\n"
      "a = 1\n"
      "b = x  # trailing\n"
      "a = 2\n"
      "[s1]\n"
      "k = v\n");
  EXPECT_EQ(config.GetString("a"), "2");
  EXPECT_EQ(config.GetString("b"), "x");
  ASSERT_NE(config.FindSection("s1"), nullptr);
  EXPECT_EQ(*config.FindSection("s1")->Find("k"), "v");
  EXPECT_EQ(config.sections().front().entries.size(), 2u);
  const KvConfig again = KvConfig::Parse(config.Serialize());
  EXPECT_EQ(again.Serialize(), config.Serialize());
}

TEST(KvConfigTest, MalformedLineNamesLine) {
  try {
    KvConfig::Parse("a = 1\nnot a pair\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(KvConfigTest, TypedGetters) {
  const KvConfig config = KvConfig::Parse("x = 2.5\nn = 7\nlist = 1, 2,3\n");
  EXPECT_DOUBLE_EQ(config.GetDouble("x"), 2.5);
  EXPECT_EQ(config.GetInt("n"), 7);
  EXPECT_EQ(config.GetDoubleList("list"), (std::vector<double>{1, 2, 3}));
  EXPECT_THROW(config.GetInt("x"), Error);
  EXPECT_THROW(config.GetString("missing"), Error);
}

TEST(DeriveSeedTest, DistinctTagsAndIndices) {
  std::set<std::uint64_t> seen;
  for (const char* tag : {"a", "b", "cv.fit", "forest.tree"}) {
    seen.insert(DeriveSeed(42, tag));
    for (std::uint64_t i = 0; i < 10; ++i) seen.insert(DeriveSeed(42, tag, i));
  }
  EXPECT_EQ(seen.size(), 44u);
  EXPECT_EQ(DeriveSeed(42, "a"), DeriveSeed(42, "a"));
  EXPECT_NE(DeriveSeed(42, "a"), DeriveSeed(43, "a"));
}

TEST(DeriveSeedTest, KnownHashes) {
  // FNV-1a 64 reference values.
  EXPECT_EQ(Fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  // SplitMix64 with state 0 yields its first output for seed 0.
  EXPECT_EQ(SplitMix64(0), 0xe220a8397b1dcdafULL);
}

TEST(ParallelForTest, VisitsEveryIndexOnce) {
  for (unsigned threads : {1u, 2u, 7u}) {
    SetNumThreads(threads);
    std::vector<std::atomic<int>> hits(1000);
    ParallelFor(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  SetNumThreads(0);
}

TEST(ParallelForTest, RethrowsBodyException) {
  SetNumThreads(4);
  EXPECT_THROW(ParallelFor(100,
                           [](std::size_t i) {
                             if (i == 37) throw DataError("boom");
                           }),
               DataError);
  SetNumThreads(0);
}

TEST(CompensatedSumTest, OrderIndependent) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1000.0, 1.0);
  std::vector<double> terms(20000);
  for (double& t : terms) t = u(rng) * std::pow(10.0, static_cast<int>(rng() % 6));
  CompensatedSum forward;
  for (double t : terms) forward += t;
  std::shuffle(terms.begin(), terms.end(), rng);
  CompensatedSum shuffled;
  for (double t : terms) shuffled += t;
  EXPECT_NEAR(forward.value(), shuffled.value(),
              1e-12 * std::abs(forward.value()));
}

}  // namespace
}  // namespace hdm
