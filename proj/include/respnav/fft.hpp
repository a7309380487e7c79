#pragma once

#include "respnav/types.hpp"

#include <span>
#include <vector>

namespace respnav {

// Centered discrete Fourier transforms (DC at index n/2 on every axis).
//
// Convention: the forward transform is unnormalized and the inverse carries
// 1/N, so with k and r both centered, F{x}(k) = sum_r x(r) exp(-2 pi i k r / N).
// A translation by s along an axis multiplies the spectrum by
// exp(-2 pi i k s / N). The Ortho variants scale both directions by 1/sqrt(N).
enum class Norm
{
  Backward,
  Ortho
};

// In-place n-D transform over a contiguous buffer. dims lists axis extents
// slowest first (row-major), e.g. {nz, ny, nx} for an Array3.
void fft_inplace(std::span<Cx> data, std::span<int const> dims, Norm norm = Norm::Backward);
void ifft_inplace(std::span<Cx> data, std::span<int const> dims, Norm norm = Norm::Backward);

CxVolume fft3(CxVolume v, Norm norm = Norm::Backward);
CxVolume ifft3(CxVolume v, Norm norm = Norm::Backward);
CxImage fft2(CxImage img, Norm norm = Norm::Backward);
CxImage ifft2(CxImage img, Norm norm = Norm::Backward);
std::vector<Cx> ifft1(std::vector<Cx> line, Norm norm = Norm::Backward);

} // namespace respnav
