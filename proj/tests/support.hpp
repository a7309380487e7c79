#pragma once

#include "respnav/phantom.hpp"
#include "respnav/sampling.hpp"

#include <complex>
#include <random>
#include <vector>

namespace respnav::fixtures {

// 32 x 32 x 8 grid with one static block, an AP-moving slab and an SI-moving
// blob. Small enough for full simulations inside unit tests.
inline PhantomConfig small_phantom()
{
  PhantomConfig p;
  p.grid = {32, 32, 8};
  p.coils = 2;
  p.noise_sigma = 0.0;
  p.resp_amp_ap_px = 2.0;
  p.resp_amp_si_px = 1.0;
  p.components = {
      {"body", {{{0.0, 0.0, 0.0}, {13.0, 11.0, 3.0}, 0.2}}, Axis::None, MotionSource::Respiration, 0.0},
      {"wall", {{{0.0, 9.0, 0.0}, {10.0, 2.0, 2.0}, 1.0}}, Axis::AP, MotionSource::Respiration, 0.0},
      {"blob", {{{-4.0, -2.0, 0.0}, {4.0, 4.0, 2.0}, 0.7}}, Axis::SI, MotionSource::Respiration, 0.0},
  };
  return p;
}

inline PatternConfig small_pattern(double seconds = 10.0)
{
  PatternConfig c;
  c.nx = 32;
  c.ny = 32;
  c.nz = 8;
  c.spoke_len = 8;
  c.total_dur_s = seconds;
  return c;
}

template <typename T>
std::vector<std::complex<double>> random_complex(std::size_t n, T seed)
{
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::normal_distribution<double> g;
  std::vector<std::complex<double>> v(n);
  for (auto &c : v) {
    c = {g(rng), g(rng)};
  }
  return v;
}

} // namespace respnav::fixtures
