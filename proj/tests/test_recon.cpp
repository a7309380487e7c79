#include "respnav/error.hpp"
#include "respnav/fft.hpp"
#include "respnav/recon.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

using namespace respnav;

namespace {

struct Problem
{
  CxVolume truth;
  CxVolume kspace;
  std::vector<std::uint8_t> mask;
};

// Variable-density random (ky, kz) mask with about `fraction` of the cells
// and the central 4 x 4 block always sampled.
Problem undersampled(double fraction, std::uint64_t seed, MotionState state = {})
{
  auto const p = fixtures::small_phantom();
  Volume const vol = render_state(p, state);
  Problem out;
  out.truth = CxVolume(vol.nx, vol.ny, vol.nz);
  for (std::size_t i = 0; i < vol.size(); ++i) {
    out.truth.data[i] = vol.data[i];
  }
  CxVolume const full = fft3(out.truth);
  out.mask.assign(static_cast<std::size_t>(vol.ny * vol.nz), 0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int kz = 0; kz < vol.nz; ++kz) {
    for (int ky = 0; ky < vol.ny; ++ky) {
      bool const center = std::abs(ky - vol.ny / 2) < 2 && std::abs(kz - vol.nz / 2) < 2;
      out.mask[static_cast<std::size_t>(kz * vol.ny + ky)] = center || u(rng) < fraction;
    }
  }
  out.kspace = CxVolume(vol.nx, vol.ny, vol.nz);
  for (int z = 0; z < vol.nz; ++z) {
    for (int y = 0; y < vol.ny; ++y) {
      if (out.mask[static_cast<std::size_t>(z * vol.ny + y)]) {
        for (int x = 0; x < vol.nx; ++x) {
          out.kspace(x, y, z) = full(x, y, z);
        }
      }
    }
  }
  return out;
}

double nrmse(CxVolume const &x, CxVolume const &truth)
{
  double e = 0.0, t = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e += std::norm(x.data[i] - truth.data[i]);
    t += std::norm(truth.data[i]);
  }
  return std::sqrt(e / t);
}

bool non_increasing(std::vector<double> const &f)
{
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i] > f[i - 1] * (1.0 + 1e-9)) {
      return false;
    }
  }
  return true;
}

} // namespace

TEST(CsWavelet, ZeroLambdaFullSamplingIsZeroFilled)
{
  auto const prob = undersampled(1.1, 1);
  ReconParams params;
  params.lambda = 0.0;
  params.iterations = 3;
  IterationLog log;
  CxVolume const cs = cs_wavelet(prob.kspace, prob.mask, params, log);
  CxVolume const zf = zero_filled(prob.kspace);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    ASSERT_NEAR(std::abs(cs.data[i] - zf.data[i]), 0.0, 1e-9);
  }
  EXPECT_LT(nrmse(zf, prob.truth), 1e-12);
}

TEST(CsWavelet, BeatsZeroFillingAtFourfoldUndersampling)
{
  // Noiseless rest state of the default phantom, sampled on consecutive
  // pseudo-spiral spokes until a quarter of the phase-encode plane is covered.
  auto const p = PhantomConfig::standard();
  PatternConfig const pattern;
  Volume const vol = render_state(p, {});
  CxVolume truth(vol.nx, vol.ny, vol.nz);
  for (std::size_t i = 0; i < vol.size(); ++i) {
    truth.data[i] = vol.data[i];
  }
  CxVolume const full = fft3(truth);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(vol.ny * vol.nz), 0);
  std::size_t sampled = 0;
  for (int s = 0; 4 * sampled < mask.size(); ++s) {
    for (auto const &pe : generate_spoke(s, pattern)) {
      auto &m = mask[static_cast<std::size_t>(centered_index(pe.kz, vol.nz) * vol.ny + centered_index(pe.ky, vol.ny))];
      sampled += m == 0;
      m = 1;
    }
  }
  CxVolume k(vol.nx, vol.ny, vol.nz);
  for (int z = 0; z < vol.nz; ++z) {
    for (int y = 0; y < vol.ny; ++y) {
      if (mask[static_cast<std::size_t>(z * vol.ny + y)]) {
        for (int x = 0; x < vol.nx; ++x) {
          k(x, y, z) = full(x, y, z);
        }
      }
    }
  }
  double const r = static_cast<double>(mask.size()) / static_cast<double>(sampled);
  EXPECT_NEAR(r, 4.0, 0.1);
  IterationLog log;
  CxVolume const cs = cs_wavelet(k, mask, ReconParams{}, log);
  double const e_zf = nrmse(zero_filled(k), truth);
  double const e_cs = nrmse(cs, truth);
  EXPECT_LT(e_cs, e_zf);
  EXPECT_LE(e_cs, 0.5 * e_zf) << "zero-filled " << e_zf << " cs " << e_cs;
}

TEST(CsWavelet, ObjectiveMonotone)
{
  auto const prob = undersampled(0.3, 3);
  ReconParams params;
  params.iterations = 25;
  IterationLog log;
  cs_wavelet(prob.kspace, prob.mask, params, log);
  ASSERT_EQ(log.objective.size(), 25u);
  EXPECT_GT(log.lambda, 0.0);
  EXPECT_TRUE(non_increasing(log.objective));
  EXPECT_FALSE(log.non_convergence);
}

TEST(CsWavelet, TemporalObjectiveMonotone)
{
  std::vector<CxVolume> k;
  std::vector<std::vector<std::uint8_t>> masks;
  for (int p = 0; p < 4; ++p) {
    auto prob = undersampled(0.3, 10 + static_cast<std::uint64_t>(p), {0, p % 2, 0.0});
    k.push_back(std::move(prob.kspace));
    masks.push_back(std::move(prob.mask));
  }
  ReconParams params;
  params.iterations = 20;
  params.temporal_levels = 2;
  IterationLog log;
  auto const out = cs_wavelet_temporal(k, masks, params, log);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_TRUE(non_increasing(log.objective));
  EXPECT_FALSE(log.non_convergence);
  masks.pop_back();
  EXPECT_THROW(cs_wavelet_temporal(k, masks, params, log), ConfigMismatch);
}

TEST(Gridding, AveragesRepeatedSamples)
{
  auto p = fixtures::small_phantom();
  p.noise_sigma = 1.0;
  auto const raw = simulate_acquisition(p, generate_schedule(fixtures::small_pattern(2.0)));
  // Every navigation readout hits kz = 0; several events revisit the same cells.
  std::vector<std::size_t> navs;
  for (auto const &r : raw.schedule.readouts) {
    if (r.role == Role::Navigation && r.ky == 1) {
      navs.push_back(static_cast<std::size_t>(r.index));
    }
  }
  ASSERT_GE(navs.size(), 2u);
  std::vector<int> const phase(navs.size(), 0);
  auto const g = grid_phase(raw, navs, phase, 0);
  EXPECT_EQ(g.samples, navs.size());
  auto const &c = raw.schedule.config;
  int const y = centered_index(1, c.ny), z = centered_index(0, c.nz);
  for (int x = 0; x < c.nx; ++x) {
    Cx mean{};
    for (auto i : navs) {
      mean += Cx(raw.line(i, 1)[static_cast<std::size_t>(x)]);
    }
    mean /= static_cast<double>(navs.size());
    EXPECT_NEAR(std::abs(g.coils[1](x, y, z) - mean), 0.0, 1e-5);
  }
  EXPECT_DOUBLE_EQ(g.occupancy(), 1.0 / (c.ny * c.nz));
}

TEST(Gridding, OccupancyIsInverseR)
{
  auto const raw = simulate_acquisition(fixtures::small_phantom(), generate_schedule(fixtures::small_pattern(3.0)));
  auto const bins = select_all(raw, 3);
  auto const report = undersampling_report(raw, bins);
  auto const g = grid_adjoint(raw, bins.selected_readouts, bins.cardiac_phase_of_readout, 3);
  for (int p = 0; p < 3; ++p) {
    EXPECT_NEAR(g.phases[p].occupancy(), 1.0 / report.phases[p].r_factor, 1e-12);
  }
}

TEST(Gridding, EmptyPhase)
{
  auto const raw = simulate_acquisition(fixtures::small_phantom(), generate_schedule(fixtures::small_pattern(2.0)));
  std::vector<std::size_t> const readouts{0, 1, 2};
  std::vector<int> const phase{0, 0, 0};
  EXPECT_THROW(grid_phase(raw, readouts, phase, 1), EmptyPhase);
  std::vector<int> const short_labels{0};
  EXPECT_THROW(grid_phase(raw, readouts, short_labels, 0), ConfigMismatch);
}

TEST(Reconstruct, CoilOrderDoesNotMatter)
{
  auto p = fixtures::small_phantom();
  p.noise_sigma = 0.5;
  auto const raw = simulate_acquisition(p, generate_schedule(fixtures::small_pattern(4.0)));
  auto swapped = raw;
  for (std::size_t i = 0; i < raw.schedule.readouts.size(); ++i) {
    auto a = swapped.line(i, 0);
    auto b = swapped.line(i, 1);
    std::swap_ranges(a.begin(), a.end(), b.begin());
  }
  auto const bins = select_all(raw, 2);
  ReconParams params;
  params.iterations = 4;
  for (auto mode : {ReconMode::ZeroFilled, ReconMode::CsWavelet}) {
    auto const a = reconstruct(raw, bins, mode, params);
    auto const b = reconstruct(swapped, bins, mode, params);
    for (std::size_t ph = 0; ph < a.volumes.size(); ++ph) {
      for (std::size_t v = 0; v < a.volumes[ph].size(); ++v) {
        ASSERT_NEAR(a.volumes[ph].data[v], b.volumes[ph].data[v], 1e-9);
      }
    }
  }
}

TEST(Reconstruct, JointModeProducesEveryPhase)
{
  auto const raw = simulate_acquisition(fixtures::small_phantom(), generate_schedule(fixtures::small_pattern(6.0)));
  auto const bins = select_all(raw, 4);
  ReconParams params;
  params.iterations = 5;
  params.temporal_levels = 2;
  auto const s = reconstruct(raw, bins, ReconMode::CsWavelet, params);
  ASSERT_EQ(s.volumes.size(), 4u);
  for (auto const &v : s.volumes) {
    EXPECT_GT(*std::max_element(v.data.begin(), v.data.end()), 0.0);
  }
  EXPECT_FALSE(s.meta.at("non_convergence").get<bool>());
}

TEST(Reconstruct, EmptyPhaseSurfaces)
{
  auto const raw = simulate_acquisition(fixtures::small_phantom(), generate_schedule(fixtures::small_pattern(2.0)));
  auto bins = select_all(raw, 2);
  for (auto &ph : bins.cardiac_phase_of_readout) {
    ph = ph >= 0 ? 0 : ph;
  }
  EXPECT_THROW(reconstruct(raw, bins, ReconMode::ZeroFilled), EmptyPhase);
}

TEST(VolumeIo, RoundTrip)
{
  VolumeSeries s;
  s.mode = ReconMode::CsWavelet;
  s.meta = {{"note", "x"}};
  for (int p = 0; p < 3; ++p) {
    Volume v(6, 4, 2);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v.data[i] = 0.25 * static_cast<double>(i) + p;
    }
    s.volumes.push_back(v);
  }
  auto const path = std::filesystem::temp_directory_path() / "respnav_volume_io.rnv";
  write_volumes(s, path);
  auto const back = read_volumes(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.volumes.size(), 3u);
  EXPECT_EQ(back.mode, ReconMode::CsWavelet);
  EXPECT_EQ(back.meta.at("note"), "x");
  for (std::size_t p = 0; p < 3; ++p) {
    EXPECT_EQ(back.volumes[p].data, s.volumes[p].data);
  }
  EXPECT_THROW(read_volumes(path), FormatError);
}

TEST(ReconParams, JsonRoundTrip)
{
  ReconParams p;
  p.iterations = 12;
  p.lambda = 0.5;
  p.temporal_levels = 1;
  nlohmann::json const j = p;
  EXPECT_EQ(nlohmann::json(j.get<ReconParams>()), j);
}
