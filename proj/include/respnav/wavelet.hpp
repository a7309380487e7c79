#pragma once

#include "respnav/types.hpp"

#include <span>
#include <vector>

namespace respnav {

// Orthogonal Daubechies wavelet with periodized boundaries.
struct Wavelet
{
  std::vector<double> lo; // decomposition low-pass
  std::vector<double> hi; // decomposition high-pass, hi[k] = (-1)^(k+1) lo[L-1-k]

  // Daubechies wavelet with the given number of vanishing moments (1..8
  // supported; filter length is twice that), e.g. 4 -> db4 with 8 taps.
  static Wavelet daubechies(int vanishing_moments);
};

// Single-level periodized analysis of an even-length signal:
// approx[i] = sum_k lo[k] x[(2i + L/2 - k) mod n], same for detail with hi.
template <typename T>
void dwt1(std::span<T const> x, std::span<T> approx, std::span<T> detail, Wavelet const &w);

template <typename T>
void idwt1(std::span<T const> approx, std::span<T const> detail, std::span<T> x, Wavelet const &w);

// Deepest level count (<= requested) for which every level sees even extents.
int usable_levels(int width, int height, int requested);

// Multi-level separable 2-D transform in place, Mallat layout: after one
// level the approximation occupies the top-left quadrant and the
// diagonal (high-high) detail the bottom-right quadrant.
template <typename T>
void dwt2(Image2<T> &img, Wavelet const &w, int levels);

template <typename T>
void idwt2(Image2<T> &img, Wavelet const &w, int levels);

// Finest-scale diagonal detail coefficients (high-pass along both axes).
Image diagonal_detail(Image const &img, Wavelet const &w);

} // namespace respnav
