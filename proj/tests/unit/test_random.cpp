#include <gtest/gtest.h>

#include <cmath>

#include "viscest/random.hpp"

using namespace viscest;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(UnitInterval, ExcludesZeroIncludesOne) {
  EXPECT_GT(to_unit_interval(0, 0), 0.0);
  EXPECT_EQ(to_unit_interval(0xffffffffu, 0xffffffffu), 1.0);
}

TEST(RandomStream, PureFunctionOfCoordinates) {
  const RandomStream a{42, 3, 0};
  const RandomStream b{42, 3, 17};
  EXPECT_EQ(a.normal_at(17, 5), b.normal(5));
  EXPECT_NE(a.normal_at(17, 5), RandomStream({43, 3, 0}).normal_at(17, 5));
  EXPECT_NE(a.normal_at(17, 5), RandomStream({42, 4, 0}).normal_at(17, 5));
  const auto pair = a.normal_pair(9, 2);
  EXPECT_EQ(pair[0], a.normal_at(9, 4));
  EXPECT_EQ(pair[1], a.normal_at(9, 5));
}

TEST(RandomStream, StandardNormalMoments) {
  const RandomStream s{2024, 0, 0};
  constexpr int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  int below = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal_at(static_cast<std::uint64_t>(i / 4), static_cast<std::uint32_t>(i % 4));
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
    below += z < 1.0;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  // Tolerances are about five standard errors.
  EXPECT_NEAR(m1, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 5.0 * std::sqrt(96.0 / n));
  EXPECT_NEAR(static_cast<double>(below) / n, 0.8413447460685429, 5.0 * std::sqrt(0.134 / n));
}

TEST(RandomStream, NeighbouringDrawsUncorrelated) {
  const RandomStream s{5, 1, 0};
  constexpr int n = 100000;
  double c = 0.0;
  for (int i = 0; i < n; ++i) c += s.normal_at(static_cast<std::uint64_t>(i), 0) * s.normal_at(static_cast<std::uint64_t>(i + 1), 0);
  EXPECT_NEAR(c / n, 0.0, 5.0 / std::sqrt(n));
}
