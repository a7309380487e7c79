#include "respnav/fft.hpp"

#include <fftw3.h>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>
#include <mutex>
#include <numeric>

namespace respnav {

namespace {

// Planner calls are not thread-safe in FFTW; execution is.
std::mutex &planner_mutex()
{
  static std::mutex m;
  return m;
}

// Circular shift of every axis by by[a]: out[j] = in[(j + by) mod n] per axis.
// Dims are padded on the slow side to three axes.
void roll_all(std::span<Cx> data, std::span<int const> dims, bool inverse)
{
  std::array<int, 3> d{1, 1, 1};
  std::size_t const pad = 3 - dims.size();
  for (std::size_t a = 0; a < dims.size(); ++a) {
    d[pad + a] = dims[a];
  }
  std::array<std::vector<std::size_t>, 3> src;
  for (std::size_t a = 0; a < 3; ++a) {
    int const n = d[a];
    int const by = inverse ? n / 2 : n - n / 2;
    src[a].resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      src[a][static_cast<std::size_t>(j)] = static_cast<std::size_t>((j + by) % n);
    }
  }
  thread_local std::vector<Cx> tmp;
  tmp.assign(data.begin(), data.end());
  std::size_t const n1 = static_cast<std::size_t>(d[1]);
  std::size_t const n2 = static_cast<std::size_t>(d[2]);
  std::size_t out = 0;
  for (std::size_t i0 = 0; i0 < static_cast<std::size_t>(d[0]); ++i0) {
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
      Cx const *row = tmp.data() + (src[0][i0] * n1 + src[1][i1]) * n2;
      std::size_t const *s2 = src[2].data();
      for (std::size_t i2 = 0; i2 < n2; ++i2) {
        data[out++] = row[s2[i2]];
      }
    }
  }
}

void ifftshift(std::span<Cx> data, std::span<int const> dims) { roll_all(data, dims, true); }

void fftshift(std::span<Cx> data, std::span<int const> dims) { roll_all(data, dims, false); }

void transform(std::span<Cx> data, std::span<int const> dims, int sign, double scale)
{
  std::size_t const total = std::accumulate(
      dims.begin(), dims.end(), std::size_t{1}, [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  if (total != data.size()) {
    throw std::invalid_argument("fft: buffer size does not match dims");
  }
  if (total == 0) {
    return;
  }
  if (dims.size() > 3) {
    throw std::invalid_argument("fft: at most three dimensions");
  }
  ifftshift(data, dims);
  auto *buf = reinterpret_cast<fftw_complex *>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    // UNALIGNED keeps the codelet choice independent of allocation alignment,
    // which keeps results bit-reproducible across runs.
    plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf, sign,
                         FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute_dft(plan, buf, buf);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftshift(data, dims);
  if (scale != 1.0) {
    for (auto &v : data) {
      v *= scale;
    }
  }
}

double count(std::span<int const> dims)
{
  double n = 1.0;
  for (int d : dims) {
    n *= d;
  }
  return n;
}

} // namespace

void fft_inplace(std::span<Cx> data, std::span<int const> dims, Norm norm)
{
  double const scale = norm == Norm::Ortho ? 1.0 / std::sqrt(count(dims)) : 1.0;
  transform(data, dims, FFTW_FORWARD, scale);
}

void ifft_inplace(std::span<Cx> data, std::span<int const> dims, Norm norm)
{
  double const n = count(dims);
  double const scale = norm == Norm::Ortho ? 1.0 / std::sqrt(n) : 1.0 / n;
  transform(data, dims, FFTW_BACKWARD, scale);
}

CxVolume fft3(CxVolume v, Norm norm)
{
  int const dims[] = {v.nz, v.ny, v.nx};
  fft_inplace(v.data, dims, norm);
  return v;
}

CxVolume ifft3(CxVolume v, Norm norm)
{
  int const dims[] = {v.nz, v.ny, v.nx};
  ifft_inplace(v.data, dims, norm);
  return v;
}

CxImage fft2(CxImage img, Norm norm)
{
  int const dims[] = {img.height, img.width};
  fft_inplace(img.data, dims, norm);
  return img;
}

CxImage ifft2(CxImage img, Norm norm)
{
  int const dims[] = {img.height, img.width};
  ifft_inplace(img.data, dims, norm);
  return img;
}

std::vector<Cx> ifft1(std::vector<Cx> line, Norm norm)
{
  int const dims[] = {static_cast<int>(line.size())};
  ifft_inplace(line, dims, norm);
  return line;
}

} // namespace respnav
