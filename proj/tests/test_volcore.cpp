#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "interseg/components.hpp"
#include "interseg/edt.hpp"
#include "interseg/metrics.hpp"
#include "interseg/morphology.hpp"
#include "interseg/noise.hpp"
#include "interseg/resample.hpp"
#include "interseg/rng.hpp"
#include "interseg/skeleton.hpp"
#include "interseg/warp.hpp"
#include "oracles.hpp"

using namespace interseg;

// ------------------------------------------------------------------ rng

TEST(Rng, PhiloxKnownAnswers) {
  // Random123 philox4x32_10 known-answer vectors.
  EXPECT_EQ(philox::block({0, 0, 0, 0}, {0, 0}), (philox::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (philox::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (philox::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Rng, GoldenStream) {
  // First draws of stream (seed 0, stream 0) are the KAT block above.
  Rng r(0, 0);
  EXPECT_EQ(r.next_u64(), 0xe169c58d6627e8d5ull);
  EXPECT_EQ(r.next_u64(), 0x9b00dbd8bc57ac4cull);
}

TEST(Rng, SameSeedAndStreamSameSequence) {
  Rng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SplitDoesNotDependOnParentPosition) {
  Rng a(5, 1);
  const Rng child_before = a.split(3);
  for (int i = 0; i < 10; ++i) a.next_u64();
  Rng c1 = child_before, c2 = a.split(3);
  EXPECT_EQ(c1.next_u64(), c2.next_u64());
}

TEST(Rng, BelowIsUniform) {
  Rng r(9);
  std::vector<long> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  EXPECT_LT(oracle::chi_square_uniform(counts), oracle::chi_square_crit_p01(6));
  EXPECT_THROW(r.below(0), std::invalid_argument);
}

TEST(Rng, Uniform01Range) {
  Rng r(1);
  double lo = 1, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
}

// ---------------------------------------------------- connected components

TEST(ConnectedComponents, DiagonalPairDependsOnConnectivity) {
  BinaryMask3D m({3, 3, 1}, 0);
  m(0, 0, 0) = 1;
  m(1, 1, 0) = 1;
  EXPECT_EQ(label_components(m, Connectivity::face).count(), 2);
  EXPECT_EQ(label_components(m, Connectivity::vertex).count(), 1);
}

TEST(ConnectedComponents, EmptyMaskHasNoComponents) {
  BinaryMask3D m({4, 4, 4}, 0);
  const auto cc = label_components(m);
  EXPECT_EQ(cc.count(), 0);
  for (auto v : cc.labels) EXPECT_EQ(v, 0);
}

namespace {
void expect_matches_oracle(const BinaryMask3D& m, int conn) {
  const auto cc = label_components(m, connectivity_from_int(conn));
  const auto roots = oracle::union_find_roots(m, conn);
  ASSERT_EQ(cc.count(), oracle::count_roots(roots));
  // Same partition: labels and roots must be in bijection.
  std::map<long, int> root_to_label;
  std::set<int> seen;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) {
      ASSERT_EQ(cc.labels[i], 0);
      continue;
    }
    ASSERT_GE(cc.labels[i], 1);
    ASSERT_LE(cc.labels[i], cc.count());
    auto [it, inserted] = root_to_label.emplace(roots[i], cc.labels[i]);
    ASSERT_EQ(it->second, cc.labels[i]);
    seen.insert(cc.labels[i]);
  }
  EXPECT_EQ(static_cast<int>(seen.size()), cc.count());
}
}  // namespace

TEST(ConnectedComponents, ExhaustiveThreeByThree) {
  for (int bits = 0; bits < 512; ++bits) {
    BinaryMask3D m({3, 3, 1}, 0);
    for (int k = 0; k < 9; ++k) m[k] = (bits >> k) & 1;
    for (int conn : {6, 18, 26}) expect_matches_oracle(m, conn);
  }
}

TEST(ConnectedComponents, RandomVolumesMatchUnionFind) {
  Rng rng(2024);
  for (int t = 0; t < 300; ++t) {
    const Shape3 s{static_cast<int>(rng.integer(4, 8)), static_cast<int>(rng.integer(4, 8)),
                   static_cast<int>(rng.integer(4, 8))};
    const auto m = oracle::random_mask(s, rng.uniform(0.1, 0.6), rng);
    for (int conn : {6, 18, 26}) expect_matches_oracle(m, conn);
  }
}

TEST(ConnectedComponents, LargestComponentPicksBiggest) {
  BinaryMask3D m({8, 1, 1}, 0);
  m[0] = 1;
  m[3] = m[4] = m[5] = 1;
  const auto big = largest_component(m);
  EXPECT_EQ(count(big), 3u);
  EXPECT_EQ(big[4], 1);
}

// ------------------------------------------------------------------ edt

TEST(Edt, LineFixture) {
  BinaryMask3D m({1, 1, 5}, 0);
  m[1] = m[2] = m[3] = 1;
  const auto raw = edt(m, false);
  const auto norm = edt(m, true);
  const float expect_raw[] = {0, 1, 2, 1, 0};
  const float expect_norm[] = {0, 0.5f, 1, 0.5f, 0};
  for (int i = 0; i < 5; ++i) {
    EXPECT_FLOAT_EQ(raw[i], expect_raw[i]);
    EXPECT_FLOAT_EQ(norm[i], expect_norm[i]);
  }
}

TEST(Edt, IsolatedVoxelNormalizesToOne) {
  BinaryMask3D m({5, 5, 5}, 0);
  m(2, 2, 2) = 1;
  EXPECT_FLOAT_EQ(edt(m, true)(2, 2, 2), 1.0f);
}

TEST(Edt, EmptyMaskIsZero) {
  BinaryMask3D m({4, 3, 2}, 0);
  for (float v : edt(m, true)) EXPECT_EQ(v, 0.0f);
}

TEST(Edt, MatchesBruteForceExactly) {
  Rng rng(77);
  for (int t = 0; t < 300; ++t) {
    const Shape3 s{static_cast<int>(rng.integer(1, 12)), static_cast<int>(rng.integer(1, 12)),
                   static_cast<int>(rng.integer(1, 12))};
    const auto m = oracle::random_mask(s, rng.uniform(0.3, 0.97), rng);
    const auto got = squared_edt(m);
    const auto want = oracle::brute_squared_edt(m);
    for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(got[i], want[i]) << "trial " << t << " voxel " << i;
  }
}

TEST(Edt, DistanceToFeaturesWithoutAnyFeature) {
  BinaryMask3D m({3, 3, 3}, 0);
  for (auto v : squared_distance_to(m)) EXPECT_EQ(v, kNoFeature);
}

TEST(DirectionalEdt, RowFixture) {
  Mask2D m({5, 1, 1}, 0);
  m[1] = m[2] = m[3] = 1;
  const auto d = directional_edt(m);
  const float expect[] = {0, 1, 2, 1, 0};
  for (int i = 0; i < 5; ++i) EXPECT_FLOAT_EQ(d[0][i], expect[i]);
  // Across a single row, every pixel is one step from the border.
  for (int i = 1; i < 4; ++i) EXPECT_FLOAT_EQ(d[1][i], 1.0f);
}

TEST(DirectionalEdt, FullRowUsesGridEdgeAsBackground) {
  Mask2D m({5, 1, 1}, 1);
  const auto d = directional_edt(m);
  const float expect[] = {1, 2, 3, 2, 1};
  for (int i = 0; i < 5; ++i) EXPECT_FLOAT_EQ(d[0][i], expect[i]);
}

TEST(DirectionalEdt, EmptyIsZero) {
  Mask2D m({6, 4, 1}, 0);
  const auto d = directional_edt(m);
  for (int a = 0; a < 2; ++a)
    for (float v : d[a]) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(directional_edt(BinaryMask3D({2, 2, 2}, 0)), std::invalid_argument);
}

// ----------------------------------------------------------- morphology

TEST(Morphology, DilatePixelGivesPlus) {
  Mask2D m({5, 5, 1}, 0);
  m(2, 2) = 1;
  const auto d = dilate(m, 1.0);
  EXPECT_EQ(count(d), 5u);
  for (auto [x, y] : {std::pair{2, 2}, {1, 2}, {3, 2}, {2, 1}, {2, 3}}) EXPECT_EQ(d(x, y), 1);
  EXPECT_EQ(d, oracle::brute_dilate(m, 1.0));
}

TEST(Morphology, CloseFillsSinglePixelHole) {
  auto m = oracle::disc(15, 7, 7, 5);
  m(7, 7) = 0;
  const auto closed = morphology(m, MorphOp::close, 1.0);
  EXPECT_EQ(closed(7, 7), 1);
  // dilate-then-erode composition, with erosion not eating the border
  const auto composed = oracle::brute_erode(oracle::brute_dilate(m, 1.0), 1.0);
  EXPECT_EQ(closed, composed);  // disc is far from the border
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) { EXPECT_EQ(closed[i], 1); }
}

TEST(Morphology, ErodeEmptyStaysEmpty) {
  BinaryMask3D m({6, 6, 6}, 0);
  EXPECT_FALSE(any(erode(m, 2.0)));
  EXPECT_FALSE(any(erode(m, 2.0, Element::box)));
}

TEST(Morphology, RadiusZeroIsIdentity) {
  Rng rng(3);
  const auto m = oracle::random_mask({7, 6, 5}, 0.5, rng);
  for (auto op : {MorphOp::erode, MorphOp::dilate, MorphOp::open, MorphOp::close})
    EXPECT_EQ(morphology(m, op, 0.0), m);
  EXPECT_THROW(dilate(m, -1.0), std::invalid_argument);
}

TEST(Morphology, BallMatchesBruteForce) {
  Rng rng(11);
  for (int t = 0; t < 60; ++t) {
    const Shape3 s{static_cast<int>(rng.integer(3, 9)), static_cast<int>(rng.integer(3, 9)),
                   static_cast<int>(rng.integer(1, 9))};
    const auto m = oracle::random_mask(s, rng.uniform(0.2, 0.9), rng);
    const double r = rng.uniform(0.5, 3.0);
    ASSERT_EQ(dilate(m, r), oracle::brute_dilate(m, r));
    ASSERT_EQ(erode(m, r), oracle::brute_erode(m, r));
  }
}

TEST(Morphology, ErosionDilationDualityOnPaddedGrids) {
  Rng rng(12);
  for (int t = 0; t < 40; ++t) {
    const double r = rng.uniform(0.5, 2.5);
    const int pad = 3;
    BinaryMask3D m({14, 14, 14}, 1);
    // random interior pattern, full foreground in the padding shell
    for (int z = pad; z < 14 - pad; ++z)
      for (int y = pad; y < 14 - pad; ++y)
        for (int x = pad; x < 14 - pad; ++x) m(x, y, z) = rng.bernoulli(0.6);
    for (auto el : {Element::ball, Element::box}) {
      const auto lhs = erode(m, r, el, Border::ignore);
      const auto rhs = complement(dilate(complement(m), r, el));
      ASSERT_EQ(lhs, rhs);
    }
  }
}

TEST(Morphology, BoxElementDilatesToSquare) {
  Mask2D m({7, 7, 1}, 0);
  m(3, 3) = 1;
  const auto d = dilate(m, 1.0, Element::box);
  EXPECT_EQ(count(d), 9u);
  EXPECT_EQ(erode(d, 1.0, Element::box), m);
}

TEST(Morphology, InnerBorderOfSquare) {
  Mask2D m({6, 6, 1}, 0);
  for (int y = 1; y < 5; ++y)
    for (int x = 1; x < 5; ++x) m(x, y) = 1;
  EXPECT_EQ(count(inner_border(m)), 12u);
}

// ------------------------------------------------------------- skeleton

TEST(Skeleton, StraightLineUnchanged) {
  Mask2D m({9, 5, 1}, 0);
  for (int x = 1; x < 8; ++x) m(x, 2) = 1;
  EXPECT_EQ(skeletonize2d(m), m);
}

TEST(Skeleton, DiagonalLineUnchanged) {
  Mask2D m({8, 8, 1}, 0);
  for (int i = 0; i < 8; ++i) m(i, i) = 1;
  EXPECT_EQ(skeletonize2d(m), m);
}

TEST(Skeleton, FilledSquareThinsToCentreStroke) {
  Mask2D m({7, 7, 1}, 0);
  for (int y = 1; y < 6; ++y)
    for (int x = 1; x < 6; ++x) m(x, y) = 1;
  const auto sk = skeletonize2d(m);
  EXPECT_LE(count(sk), 5u);
  EXPECT_GE(count(sk), 1u);
  EXPECT_EQ(sk(3, 3), 1);
  EXPECT_EQ(label_components(sk, Connectivity::vertex).count(), 1);
}

TEST(Skeleton, EmptyStaysEmpty) {
  Mask2D m({5, 5, 1}, 0);
  EXPECT_FALSE(any(skeletonize2d(m)));
}

TEST(Skeleton, SubsetAndComponentCountPreserved) {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    const Mask2D m = oracle::random_mask({static_cast<int>(rng.integer(3, 20)), static_cast<int>(rng.integer(3, 20)), 1},
                                         rng.uniform(0.3, 0.9), rng);
    const auto sk = skeletonize2d(m);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (sk[i]) { ASSERT_EQ(m[i], 1); }
    ASSERT_EQ(label_components(sk, Connectivity::vertex).count(), label_components(m, Connectivity::vertex).count());
    ASSERT_EQ(skeletonize2d(sk), sk);  // idempotent
  }
}

TEST(Skeleton, DiscSkeletonIsThin) {
  const auto m = oracle::disc(31, 15, 15, 10);
  const auto sk = skeletonize2d(m);
  // no 2x2 block of skeleton pixels survives
  for (int y = 0; y + 1 < 31; ++y)
    for (int x = 0; x + 1 < 31; ++x)
      EXPECT_FALSE(sk(x, y) && sk(x + 1, y) && sk(x, y + 1) && sk(x + 1, y + 1));
  EXPECT_EQ(label_components(sk).count(), 1);
}

// --------------------------------------------------------------- perlin

TEST(Perlin, ZeroAtLatticeCorners) {
  Rng rng(5);
  const auto f2 = perlin2d(33, 33, 8, rng);
  for (int y = 0; y < 33; y += 8)
    for (int x = 0; x < 33; x += 8) EXPECT_EQ(f2(x, y), 0.0f);
  const auto f3 = perlin3d({17, 17, 17}, 4, rng);
  for (int z = 0; z < 17; z += 4)
    for (int y = 0; y < 17; y += 4)
      for (int x = 0; x < 17; x += 4) EXPECT_EQ(f3(x, y, z), 0.0f);
}

TEST(Perlin, RangeAndMean) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto f = perlin2d(64, 64, 8, rng);
    double mean = 0;
    for (float v : f) {
      ASSERT_GE(v, -1.0f);
      ASSERT_LE(v, 1.0f);
      mean += v;
    }
    mean /= static_cast<double>(f.size());
    EXPECT_LT(std::abs(mean), 0.1) << "seed " << seed;
  }
}

TEST(Perlin, DeterministicPerSeed) {
  Rng a(99), b(99), c(100);
  const auto fa = perlin2d(40, 30, 6, a), fb = perlin2d(40, 30, 6, b), fc = perlin2d(40, 30, 6, c);
  EXPECT_EQ(fa, fb);
  EXPECT_NE(fa, fc);
  Rng d(1);
  EXPECT_THROW(perlin2d(8, 8, 1.5, d), std::invalid_argument);
}

TEST(Perlin, SmoothBetweenNeighbours) {
  Rng rng(8);
  const auto f = perlin2d(64, 64, 16, rng);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x + 1 < 64; ++x) EXPECT_LT(std::abs(f(x + 1, y) - f(x, y)), 0.25f);
}

// ----------------------------------------------------------------- warp

TEST(Warp, ZeroFieldIsIdentity) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Mask2D m = oracle::random_mask({13, 9, 1}, 0.5, rng);
    EXPECT_EQ(warp2d(m, zero_displacement(m.shape())), m);
  }
}

TEST(Warp, ConstantShiftDropsEdgeColumn) {
  Mask2D m({4, 3, 1}, 1);
  auto d = zero_displacement(m.shape());
  for (float& v : d[0]) v = 1.0f;
  const auto w = warp2d(m, d);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) EXPECT_EQ(w(x, y), 1);
    EXPECT_EQ(w(3, y), 0);
  }
  Mask2D single({4, 1, 1}, 0);
  single[2] = 1;
  auto shift = zero_displacement(single.shape());
  for (float& v : shift[0]) v = 1.0f;
  const auto ws = warp2d(single, shift);
  EXPECT_EQ(ws[1], 1);
  EXPECT_EQ(count(ws), 1u);
}

TEST(Warp, EmptyStaysEmpty) {
  Rng rng(6);
  Mask2D m({16, 16, 1}, 0);
  const auto d = random_displacement(m.shape(), {3.0, 3.0}, rng);
  EXPECT_FALSE(any(warp2d(m, d)));
}

TEST(Warp, RandomDisplacementRespectsAmplitude) {
  Rng rng(7);
  const auto d = random_displacement({20, 30, 1}, {1.5, 0.5}, rng);
  ASSERT_EQ(d.size(), 2u);
  float m0 = 0, m1 = 0;
  for (float v : d[0]) m0 = std::max(m0, std::abs(v));
  for (float v : d[1]) m1 = std::max(m1, std::abs(v));
  EXPECT_LE(m0, 1.5f);
  EXPECT_LE(m1, 0.5f);
  EXPECT_GT(m0, 1.49f);  // rescaled so the peak reaches the amplitude
}

// ------------------------------------------------------------- resample

TEST(Resample, ConstantPreserved) {
  Volume3D v({7, 5, 3}, 2.5f);
  for (const Shape3 t : {Shape3{3, 3, 3}, Shape3{14, 10, 6}, Shape3{1, 1, 1}}) {
    for (float x : resample(v, t, Interp::trilinear)) EXPECT_FLOAT_EQ(x, 2.5f);
    for (float x : resample(v, t, Interp::nearest)) EXPECT_FLOAT_EQ(x, 2.5f);
  }
}

TEST(Resample, NearestDoublingMakesBlock) {
  BinaryMask3D m({3, 3, 3}, 0);
  m(1, 1, 1) = 1;
  const auto up = resample(m, {6, 6, 6}, Interp::nearest);
  EXPECT_EQ(count(up), 8u);
  for (int z = 2; z < 4; ++z)
    for (int y = 2; y < 4; ++y)
      for (int x = 2; x < 4; ++x) EXPECT_EQ(up(x, y, z), 1);
}

TEST(Resample, IdentityWhenShapesMatch) {
  Rng rng(2);
  Volume3D v({5, 4, 3});
  for (float& x : v) x = static_cast<float>(rng.uniform01());
  EXPECT_EQ(resample(v, v.shape(), Interp::trilinear), v);
}

TEST(Resample, SphereDownUpKeepsDice) {
  const auto m = oracle::sphere({48, 48, 48}, {23.5, 23.5, 23.5}, 20);
  const auto down = resample(m, {24, 24, 24}, Interp::nearest);
  const auto up = resample(down, m.shape(), Interp::nearest);
  EXPECT_GE(dice(m, up), 0.9);
}

TEST(Resample, TrilinearInterpolatesLinearRamp) {
  Volume3D v({4, 1, 1});
  for (int i = 0; i < 4; ++i) v[i] = static_cast<float>(i);
  const auto up = resample(v, {8, 1, 1}, Interp::trilinear);
  // target i samples (i + 0.5) / 2 - 0.5, clamped to [0, 3]
  const float expect[] = {0, 0.25f, 0.75f, 1.25f, 1.75f, 2.25f, 2.75f, 3};
  for (int i = 0; i < 8; ++i) EXPECT_FLOAT_EQ(up[i], expect[i]);
}

// ----------------------------------------------------------------- dice

TEST(Dice, Basics) {
  BinaryMask3D a({4, 1, 1}, 0), b({4, 1, 1}, 0);
  EXPECT_DOUBLE_EQ(dice(a, b), 1.0);
  a[0] = a[1] = 1;
  EXPECT_DOUBLE_EQ(dice(a, a), 1.0);
  b[2] = b[3] = 1;
  EXPECT_DOUBLE_EQ(dice(a, b), 0.0);
  b[2] = 0;
  b[1] = 1;
  EXPECT_DOUBLE_EQ(dice(a, b), 0.5);
  EXPECT_THROW(dice(a, BinaryMask3D({2, 2, 1}, 0)), std::invalid_argument);
}

TEST(Dice, SymmetricAndBounded) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto a = oracle::random_mask({6, 6, 6}, rng.uniform01(), rng);
    const auto b = oracle::random_mask({6, 6, 6}, rng.uniform01(), rng);
    const double d = dice(a, b);
    EXPECT_DOUBLE_EQ(d, dice(b, a));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
}
