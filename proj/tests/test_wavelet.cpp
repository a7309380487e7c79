#include "respnav/wavelet.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace respnav;

// Reference coefficients come from PyWavelets, mode='periodization'.

TEST(Wavelet, Db1MatchesReference)
{
  std::vector<double> x{1, 4, -2, 5, 3, 0, 7, -1};
  std::vector<double> a(4), d(4);
  dwt1<double>(x, a, d, Wavelet::daubechies(1));
  std::vector<double> const ea{3.5355339059327378, 2.121320343559643, 2.121320343559643, 4.242640687119285};
  std::vector<double> const ed{-2.121320343559643, -4.949747468305833, 2.121320343559643, 5.656854249492381};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(a[i], ea[i], 1e-12);
    EXPECT_NEAR(d[i], ed[i], 1e-12);
  }
}

TEST(Wavelet, Db2MatchesReference)
{
  std::vector<double> x{1, 4, -2, 5, 3, 0, 7, -1};
  std::vector<double> a(4), d(4);
  dwt1<double>(x, a, d, Wavelet::daubechies(2));
  std::vector<double> const ea{1.508947907863848, 0.9913098176588067, 4.0184968190772725, 5.502060735571382};
  std::vector<double> const ed{4.217256695749548, 2.6643424251344228, -4.700219608894081, -2.888486293176436};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(a[i], ea[i], 1e-12);
    EXPECT_NEAR(d[i], ed[i], 1e-12);
  }
}

TEST(Wavelet, Db4TwoDimensionalLayout)
{
  // 16 wide (x) by 8 high (y); value(x, y) = ((3y + 7x) mod 11) - 0.5y.
  Image img(16, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 16; ++x) {
      img(x, y) = ((3 * y + 7 * x) % 11) - 0.5 * y;
    }
  }
  dwt2(img, Wavelet::daubechies(4), 1);
  EXPECT_NEAR(img(0, 0), 5.3343748170595875, 1e-12);       // approximation
  EXPECT_NEAR(img(3, 1), 9.706723384227638, 1e-12);        // approximation
  EXPECT_NEAR(img(8 + 5, 2), -0.056314660672592685, 1e-12); // high along x
  EXPECT_NEAR(img(0, 4 + 3), -2.9256056415071305, 1e-12);  // high along y
  EXPECT_NEAR(img(8 + 6, 4 + 1), -0.46155674886004217, 1e-12);
}

TEST(Wavelet, FilterLengthsAndQuadratureRelation)
{
  for (int m = 1; m <= 8; ++m) {
    auto const w = Wavelet::daubechies(m);
    ASSERT_EQ(w.lo.size(), static_cast<std::size_t>(2 * m));
    double sum = 0.0, energy = 0.0;
    for (std::size_t k = 0; k < w.lo.size(); ++k) {
      sum += w.lo[k];
      energy += w.lo[k] * w.lo[k];
      double const sign = k % 2 == 0 ? -1.0 : 1.0;
      EXPECT_DOUBLE_EQ(w.hi[k], sign * w.lo[w.lo.size() - 1 - k]);
    }
    EXPECT_NEAR(sum, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(energy, 1.0, 1e-12);
  }
  EXPECT_THROW(Wavelet::daubechies(0), std::invalid_argument);
  EXPECT_THROW(Wavelet::daubechies(9), std::invalid_argument);
}

TEST(Wavelet, PerfectReconstructionAndEnergy)
{
  CxImage img(32, 16);
  img.data = fixtures::random_complex(img.size(), 11);
  auto const original = img;
  double e0 = 0.0;
  for (auto const &v : img.data) {
    e0 += std::norm(v);
  }
  auto const w = Wavelet::daubechies(4);
  dwt2(img, w, 3);
  double e1 = 0.0;
  for (auto const &v : img.data) {
    e1 += std::norm(v);
  }
  EXPECT_NEAR(e1, e0, 1e-9 * e0);
  idwt2(img, w, 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_NEAR(std::abs(img.data[i] - original.data[i]), 0.0, 1e-10);
  }
}

TEST(Wavelet, LongFilterOnShortSignal)
{
  // db8 has 16 taps; periodization must still invert on an 8-sample signal.
  std::vector<double> x{1, -3, 2, 8, 0, 4, -6, 5};
  std::vector<double> a(4), d(4), back(8);
  auto const w = Wavelet::daubechies(8);
  dwt1<double>(x, a, d, w);
  idwt1<double>(a, d, back, w);
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(back[i], x[i], 1e-10);
  }
}

TEST(Wavelet, UsableLevels)
{
  EXPECT_EQ(usable_levels(64, 64, 3), 3);
  EXPECT_EQ(usable_levels(64, 36, 3), 2);
  EXPECT_EQ(usable_levels(63, 64, 3), 0);
  EXPECT_EQ(usable_levels(8, 8, 5), 3);
}

TEST(Wavelet, DiagonalDetailOfPlane)
{
  // Constant along y, so the high-pass along y removes everything.
  Image img(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      img(x, y) = 2.0 * x + 3.0;
    }
  }
  auto const hh = diagonal_detail(img, Wavelet::daubechies(2));
  ASSERT_EQ(hh.width, 8);
  ASSERT_EQ(hh.height, 8);
  for (double v : hh.data) {
    EXPECT_NEAR(v, 0.0, 1e-10);
  }
}
