#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "nasgcn/error.hpp"
#include "nasgcn/random.hpp"
#include "nasgcn/search_space.hpp"
#include "oracles.hpp"

using namespace nasgcn;

namespace {

SearchSpaceSpec space(int layers, int choices = 6) {
  SearchSpaceSpec s;
  s.num_layers = layers;
  s.choices_per_layer = choices;
  if (choices == 6) s.choice_labels = SearchSpaceSpec::default_labels();
  return s;
}

std::string bits_string(const std::vector<std::uint8_t>& bits, int group) {
  std::string out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (i && i % static_cast<std::size_t>(group) == 0) out += ' ';
    out += static_cast<char>('0' + bits[i]);
  }
  return out;
}

}  // namespace

TEST(GrayEncode, ZeroArchitectureIsAllZero) {
  EXPECT_EQ(bits_string(gray_encode(Architecture({0, 0, 0}), space(3)), 3), "000 000 000");
}

TEST(GrayEncode, MatchesReflectedTable) {
  EXPECT_EQ(bits_string(gray_encode(Architecture({5, 4, 3}), space(3)), 3), "111 110 010");
}

TEST(GrayEncode, EveryChoiceMatchesLookupTable) {
  for (int o = 0; o < 6; ++o) {
    EXPECT_EQ(gray_encode(Architecture({o}), space(1)), oracle::gray_bits(o, 3)) << "choice " << o;
  }
}

TEST(GrayEncode, NineteenCellsGiveFiftySevenBits) {
  Rng rng(3);
  std::vector<int> c;
  for (int l = 0; l < 19; ++l) c.push_back(static_cast<int>(rng.uniform_index(6)));
  EXPECT_EQ(gray_encode(Architecture(c), space(19)).size(), 57U);
}

TEST(GrayEncode, ConsecutiveChoicesDifferInOneBit) {
  for (int choices : {2, 3, 4, 5, 6, 7, 8, 11}) {
    const auto spec = space(1, choices);
    for (int o = 0; o + 1 < choices; ++o) {
      const auto a = gray_encode(Architecture({o}), spec);
      const auto b = gray_encode(Architecture({o + 1}), spec);
      int diff = 0;
      for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
      EXPECT_EQ(diff, 1) << "O=" << choices << " o=" << o;
    }
  }
}

TEST(GrayEncode, CodesAreDistinctWithinALayer) {
  const auto spec = space(1, 6);
  std::set<std::vector<std::uint8_t>> seen;
  for (int o = 0; o < 6; ++o) seen.insert(gray_encode(Architecture({o}), spec));
  EXPECT_EQ(seen.size(), 6U);
}

TEST(CellHamming, Examples) {
  EXPECT_EQ(cell_hamming(Architecture({0, 1, 2}), Architecture({0, 1, 2})), 0);
  EXPECT_EQ(cell_hamming(Architecture({0, 1, 2}), Architecture({0, 1, 3})), 1);
  EXPECT_EQ(cell_hamming(Architecture({0, 0, 0}), Architecture({5, 5, 5})), 3);
}

TEST(CellHamming, LengthMismatchThrows) {
  EXPECT_THROW(cell_hamming(Architecture({0, 1}), Architecture({0, 1, 2})), Error);
}

TEST(ArchitectureText, RoundTrips) {
  const Architecture a({1, 0, 5, 3});
  EXPECT_EQ(a.to_string(), "1,0,5,3");
  EXPECT_EQ(Architecture::parse(a.to_string()), a);
  EXPECT_THROW(Architecture::parse("1,x"), Error);
  EXPECT_THROW(Architecture::parse(""), Error);
}

TEST(Sampling, ExhaustiveDrawCoversEveryNodeOnce) {
  const Subspace sub(space(3), {0, 1}, {{2, 0}});
  const auto nodes = sample_node_indices(sub, 36, 11);
  std::set<std::uint64_t> unique(nodes.begin(), nodes.end());
  EXPECT_EQ(nodes.size(), 36U);
  EXPECT_EQ(unique.size(), 36U);
  EXPECT_EQ(*unique.rbegin(), 35U);
}

TEST(Sampling, SameSeedSameDraw) {
  const Subspace sub = Subspace::full(space(5));
  EXPECT_EQ(sample_uniform(sub, 100, 9), sample_uniform(sub, 100, 9));
  EXPECT_NE(sample_uniform(sub, 100, 9), sample_uniform(sub, 100, 10));
}

TEST(Sampling, DrawsAreDistinct) {
  const Subspace sub = Subspace::full(space(19));
  const auto nodes = sample_node_indices(sub, 5000, 1);
  std::set<std::uint64_t> unique(nodes.begin(), nodes.end());
  EXPECT_EQ(unique.size(), nodes.size());
}

TEST(Sampling, TooManyRequestedNamesBothCounts) {
  const Subspace sub(space(2), {0, 1}, {});
  try {
    sample_uniform(sub, 37, 0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("37"), std::string::npos) << msg;
    EXPECT_NE(msg.find("36"), std::string::npos) << msg;
  }
}

TEST(Materialize, FixedAndFreeLayers) {
  const Subspace sub(space(3), {0, 1}, {{2, 4}});
  EXPECT_EQ(sub.materialize({1, 3}), Architecture({1, 3, 4}));
}

TEST(Materialize, SuperCellExpandsCandidate) {
  SuperCell cell{{0, 1}, {{2, 5}, {3, 3}}};
  const Subspace sub(space(3), {}, {{2, 0}}, {cell});
  EXPECT_EQ(sub.materialize({0}), Architecture({2, 5, 0}));
  EXPECT_EQ(sub.materialize({1}), Architecture({3, 3, 0}));
}

TEST(Materialize, MissingOrOutOfRangeEntryThrows) {
  const Subspace sub(space(3), {0, 1}, {{2, 4}});
  EXPECT_THROW(sub.materialize({1}), Error);
  EXPECT_THROW(sub.materialize({1, 6}), Error);
  EXPECT_THROW(sub.materialize({-1, 0}), Error);
}

TEST(Materialize, ExtractIsItsInverse) {
  SuperCell cell{{0, 1}, {{2, 5}, {3, 3}, {0, 1}}};
  const Subspace sub(space(5), {2, 4}, {{3, 1}}, {cell});
  for (std::uint64_t i = 0; i < sub.node_count(); ++i) {
    const auto a = sub.assignment_of(i);
    EXPECT_EQ(sub.extract(sub.materialize(a)), a);
    EXPECT_EQ(sub.node_index(a), i);
  }
}

TEST(Subspace, NodeCountIsProductOfRadices) {
  SuperCell cell{{0, 1}, {{0, 0}, {1, 1}, {2, 2}, {3, 3}}};
  const Subspace sub(space(6), {2, 3, 4}, {{5, 0}}, {cell});
  EXPECT_EQ(sub.node_count(), 6U * 6U * 6U * 4U);
  EXPECT_EQ(Subspace::full(space(7)).node_count(), 279'936U);
}

TEST(Subspace, RejectsOverlapsGapsAndDuplicates) {
  EXPECT_THROW(Subspace(space(3), {0, 1}, {{1, 0}, {2, 0}}), Error);
  EXPECT_THROW(Subspace(space(3), {0, 1}, {}), Error);
  SuperCell dup{{0}, {{1}, {1}}};
  EXPECT_THROW(Subspace(space(2), {1}, {}, {dup}), Error);
}

TEST(SegmentPlan, DefaultPlan) {
  const std::vector<int> sizes{7, 6, 6};
  const auto plan = make_segment_plan(space(19), sizes);
  ASSERT_EQ(plan.rounds(), 3U);
  EXPECT_EQ(plan.segments[0], (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(plan.segments[1], (std::vector<int>{7, 8, 9, 10, 11, 12}));
  EXPECT_EQ(plan.segments[2], (std::vector<int>{13, 14, 15, 16, 17, 18}));
}

TEST(SegmentPlan, SingleSegment) {
  const std::vector<int> sizes{6};
  EXPECT_EQ(make_segment_plan(space(6), sizes).rounds(), 1U);
}

TEST(SegmentPlan, WrongSumThrows) {
  const std::vector<int> sizes{7, 7, 6};
  EXPECT_THROW(make_segment_plan(space(19), sizes), Error);
}

TEST(SegmentPlan, SegmentsPartitionLayers) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int layers = 1 + static_cast<int>(rng.uniform_index(25));
    std::vector<int> sizes;
    for (int left = layers; left > 0;) {
      const int s = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(left)));
      sizes.push_back(s);
      left -= s;
    }
    const auto plan = make_segment_plan(space(layers), sizes);
    std::vector<int> all;
    for (const auto& seg : plan.segments) all.insert(all.end(), seg.begin(), seg.end());
    std::vector<int> expected(static_cast<std::size_t>(layers));
    for (int l = 0; l < layers; ++l) expected[static_cast<std::size_t>(l)] = l;
    EXPECT_EQ(all, expected);
  }
}

TEST(SearchSpaceSpec, Validation) {
  EXPECT_THROW(space(3, 1).validate(), Error);
  EXPECT_THROW(space(0).validate(), Error);
  auto s = space(3);
  s.choice_labels.pop_back();
  EXPECT_THROW(s.validate(), Error);
  EXPECT_EQ(space(3).choice_index("k3e6"), 1);
  EXPECT_EQ(space(3).bits_per_cell(), 3);
  EXPECT_EQ(space(3, 2).bits_per_cell(), 1);
  EXPECT_EQ(space(3, 9).bits_per_cell(), 4);
}
