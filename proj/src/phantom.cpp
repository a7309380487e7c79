#include "respnav/phantom.hpp"

#include "respnav/error.hpp"
#include "respnav/fft.hpp"
#include "respnav/parallel.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

namespace respnav {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent noise stream per (seed, readout, coil).
std::mt19937_64 noise_stream(std::uint64_t seed, std::size_t readout, int coil)
{
  std::uint64_t const k = splitmix64(splitmix64(seed) ^ splitmix64(readout * 0x100000001B3ull + coil));
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return std::mt19937_64(seq);
}

double fractional(double v) { return v - std::floor(v); }

void rasterize(Volume &v, Ellipsoid const &e, std::array<double, 3> const &offset, double scale)
{
  std::array<double, 3> const c{e.center[0] + offset[0], e.center[1] + offset[1], e.center[2] + offset[2]};
  std::array<double, 3> const a{e.semi_axes[0] * scale, e.semi_axes[1] * scale, e.semi_axes[2] * scale};
  for (int z = 0; z < v.nz; ++z) {
    double const dz = (z - v.nz / 2 - c[2]) / a[2];
    if (dz * dz > 1.0) {
      continue;
    }
    for (int y = 0; y < v.ny; ++y) {
      double const dy = (y - v.ny / 2 - c[1]) / a[1];
      double const rest = 1.0 - dz * dz - dy * dy;
      if (rest < 0.0) {
        continue;
      }
      for (int x = 0; x < v.nx; ++x) {
        double const dx = (x - v.nx / 2 - c[0]) / a[0];
        if (dx * dx <= rest) {
          v(x, y, z) += e.intensity;
        }
      }
    }
  }
}

} // namespace

PhantomConfig PhantomConfig::standard()
{
  PhantomConfig p;
  p.components = {
      {"torso", {{{0.0, -2.0, 0.0}, {28.0, 24.0, 8.0}, 0.1}}, Axis::None, MotionSource::Respiration, 0.0},
      {"spine", {{{0.0, -22.0, 0.0}, {26.0, 4.0, 4.0}, 0.4}}, Axis::None, MotionSource::Respiration, 0.0},
      {"chest_wall", {{{0.0, 20.0, 0.0}, {24.0, 4.0, 7.0}, 1.2}}, Axis::AP, MotionSource::Respiration, 0.0},
      {"heart", {{{-6.0, 2.0, 0.0}, {10.0, 9.0, 6.0}, 0.7}}, Axis::SI, MotionSource::Respiration, 0.0},
      {"blood_pool", {{{-6.0, 2.0, 0.0}, {6.0, 5.0, 4.0}, 0.5}}, Axis::SI, MotionSource::Cardiac, 0.12},
      {"liver", {{{16.0, -2.0, 0.0}, {10.0, 16.0, 7.0}, 0.5}}, Axis::SI, MotionSource::Respiration, 0.0},
  };
  return p;
}

void PhantomConfig::validate() const
{
  for (int n : grid) {
    if (n < 8 || n % 2 != 0) {
      throw ConfigError(fmt::format("phantom grid extents must be even and >= 8 (got {})", n));
    }
  }
  if (coils < 1) {
    throw ConfigError("phantom needs at least one coil");
  }
  if (!(coil_width_frac > 0.0)) {
    throw ConfigError("coil_width_frac must be positive");
  }
  if (noise_sigma < 0.0) {
    throw ConfigError("noise_sigma must be non-negative");
  }
  if (!(resp_period_s > 0.0) || !(cardiac_period_s > 0.0)) {
    throw ConfigError("respiration and cardiac periods must be positive");
  }
  if (cardiac_frames < 1) {
    throw ConfigError("cardiac_frames must be >= 1");
  }
  if (resp_amp_ap_px < 0.0 || resp_amp_si_px < 0.0 || resp_drift < 0.0 || resp_drift >= 1.0) {
    throw ConfigError("amplitudes must be non-negative and resp_drift in [0, 1)");
  }
  // Every ellipsoid must stay inside the grid at maximal displacement and pulsation.
  double const max_ap = std::ceil(resp_amp_ap_px * (1.0 + resp_drift));
  double const max_si = std::ceil(resp_amp_si_px * (1.0 + resp_drift));
  for (auto const &comp : components) {
    double const scale = comp.motion_source == MotionSource::Cardiac ? 1.0 + std::abs(comp.pulsation_frac) : 1.0;
    std::array<double, 3> reach{0.0, 0.0, 0.0};
    if (comp.motion_axis == Axis::SI) {
      reach[0] = max_si;
    } else if (comp.motion_axis == Axis::AP) {
      reach[1] = max_ap;
    }
    for (auto const &e : comp.shape) {
      for (std::size_t a = 0; a < 3; ++a) {
        double const lo = -grid[a] / 2;
        double const hi = grid[a] / 2 - 1;
        double const extent = e.semi_axes[a] * scale + reach[a];
        if (!(e.semi_axes[a] > 0.0) || e.center[a] - extent < lo || e.center[a] + extent > hi) {
          throw ConfigError(fmt::format("component '{}' leaves the grid along axis {}", comp.name, a));
        }
      }
    }
  }
}

double respiration_waveform(double resp_phase) { return std::sin(kTwoPi * resp_phase); }

double cardiac_waveform(double cardiac_phase) { return 0.5 * (1.0 - std::cos(kTwoPi * cardiac_phase)); }

MotionState motion_at(PhantomConfig const &p, double resp_phase, double cardiac_phase)
{
  double const w = respiration_waveform(resp_phase);
  return {static_cast<int>(std::lround(p.resp_amp_ap_px * w)), static_cast<int>(std::lround(p.resp_amp_si_px * w)),
          fractional(cardiac_phase)};
}

MotionState respiration_at_time(PhantomConfig const &p, double t)
{
  double const w = respiration_waveform(t / p.resp_period_s);
  // Slow amplitude modulation over roughly seven breaths.
  double const m = 1.0 + p.resp_drift * std::sin(kTwoPi * t / (7.3 * p.resp_period_s));
  return {static_cast<int>(std::lround(p.resp_amp_ap_px * m * w)),
          static_cast<int>(std::lround(p.resp_amp_si_px * m * w)), 0.0};
}

Volume render_state(PhantomConfig const &p, MotionState const &s)
{
  Volume v(p.grid[0], p.grid[1], p.grid[2]);
  double const c = cardiac_waveform(s.cardiac_phase);
  for (auto const &comp : p.components) {
    std::array<double, 3> offset{0.0, 0.0, 0.0};
    if (comp.motion_axis == Axis::SI) {
      offset[0] = s.si;
    } else if (comp.motion_axis == Axis::AP) {
      offset[1] = s.ap;
    }
    double const scale = comp.motion_source == MotionSource::Cardiac ? 1.0 + comp.pulsation_frac * c : 1.0;
    for (auto const &e : comp.shape) {
      rasterize(v, e, offset, scale);
    }
  }
  return v;
}

Volume render_volume(PhantomConfig const &p, double resp_phase, double cardiac_phase)
{
  return render_state(p, motion_at(p, resp_phase, cardiac_phase));
}

std::vector<CxVolume> coil_maps(PhantomConfig const &p)
{
  int const nx = p.grid[0], ny = p.grid[1], nz = p.grid[2];
  double const ring = 0.5 * nx;
  double const width = p.coil_width_frac * nx;
  std::vector<CxVolume> maps;
  for (int c = 0; c < p.coils; ++c) {
    CxVolume m(nx, ny, nz);
    if (p.coils == 1) {
      // A single coil is treated as a uniform body coil.
      std::fill(m.data.begin(), m.data.end(), Cx{1.0, 0.0});
      maps.push_back(std::move(m));
      continue;
    }
    double const angle = kTwoPi * (c + 0.5) / p.coils;
    double const cx = ring * std::cos(angle);
    double const cy = ring * std::sin(angle);
    Cx const phase = std::polar(1.0, angle);
    for (int z = 0; z < nz; ++z) {
      for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
          double const dx = x - nx / 2 - cx;
          double const dy = y - ny / 2 - cy;
          double const dz = z - nz / 2;
          double const g = std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * width * width));
          m(x, y, z) = g * phase;
        }
      }
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

std::vector<double> trigger_times(PhantomConfig const &p, double total_dur_s)
{
  std::vector<double> t;
  auto const n = static_cast<std::size_t>(std::floor(total_dur_s / p.cardiac_period_s + 1e-9)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    t.push_back(static_cast<double>(k) * p.cardiac_period_s);
  }
  return t;
}

GroundTruth ground_truth(PhantomConfig const &p, SamplingSchedule const &schedule)
{
  GroundTruth truth;
  for (auto const &e : schedule.nav_events) {
    auto const s = respiration_at_time(p, e.time_s);
    truth.nav_ap.push_back(s.ap);
    truth.nav_si.push_back(s.si);
  }
  truth.cardiac_phase.reserve(schedule.readouts.size());
  for (auto const &r : schedule.readouts) {
    truth.cardiac_phase.push_back(fractional(r.time_s / p.cardiac_period_s));
  }
  return truth;
}

RawDataset simulate_acquisition(PhantomConfig const &p, SamplingSchedule const &schedule)
{
  p.validate();
  auto const &pc = schedule.config;
  if (p.grid[0] != pc.nx || p.grid[1] != pc.ny || p.grid[2] != pc.nz) {
    throw ConfigMismatch(fmt::format("phantom grid {}x{}x{} does not match schedule {}x{}x{}", p.grid[0], p.grid[1],
                                     p.grid[2], pc.nx, pc.ny, pc.nz));
  }

  RawDataset raw;
  raw.schedule = schedule;
  raw.phantom = p;
  raw.coils = p.coils;
  raw.nx = pc.nx;
  raw.coil_maps = coil_maps(p);
  raw.trigger_times_s = trigger_times(p, pc.total_dur_s);
  raw.truth = ground_truth(p, schedule);
  raw.samples.assign(schedule.readouts.size() * static_cast<std::size_t>(p.coils) * pc.nx, Cxf{});

  // Motion is held at the governing navigation event; cardiac phase is
  // quantized to cardiac_frames for rendering. Readouts sharing a state share
  // one rendered volume and one set of coil spectra.
  using Key = std::tuple<int, int, int>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < schedule.readouts.size(); ++i) {
    auto const &r = schedule.readouts[i];
    int const frame = std::min(p.cardiac_frames - 1,
                               static_cast<int>(std::floor(raw.truth.cardiac_phase[i] * p.cardiac_frames)));
    auto const nav = static_cast<std::size_t>(r.nav_id);
    groups[{raw.truth.nav_ap[nav], raw.truth.nav_si[nav], frame}].push_back(i);
  }
  std::vector<std::pair<Key, std::vector<std::size_t>>> work(groups.begin(), groups.end());

  parallel_for(work.size(), [&](std::size_t g) {
    auto const &[key, members] = work[g];
    auto const &[ap, si, frame] = key;
    Volume const vol = render_state(p, {ap, si, static_cast<double>(frame) / p.cardiac_frames});
    for (int c = 0; c < p.coils; ++c) {
      CxVolume weighted(vol.nx, vol.ny, vol.nz);
      auto const &map = raw.coil_maps[static_cast<std::size_t>(c)];
      for (std::size_t v = 0; v < vol.size(); ++v) {
        weighted.data[v] = vol.data[v] * map.data[v];
      }
      CxVolume const k = fft3(std::move(weighted));
      for (auto i : members) {
        auto const &r = schedule.readouts[i];
        auto out = raw.line(i, c);
        int const y = centered_index(r.ky, pc.ny);
        int const z = centered_index(r.kz, pc.nz);
        if (p.noise_sigma > 0.0) {
          auto rng = noise_stream(p.seed, i, c);
          std::normal_distribution<double> noise(0.0, p.noise_sigma);
          for (int x = 0; x < pc.nx; ++x) {
            double const re = noise(rng);
            double const im = noise(rng);
            out[static_cast<std::size_t>(x)] = Cxf(k(x, y, z) + Cx(re, im));
          }
        } else {
          for (int x = 0; x < pc.nx; ++x) {
            out[static_cast<std::size_t>(x)] = Cxf(k(x, y, z));
          }
        }
      }
    }
  });
  return raw;
}

namespace {

std::string axis_name(Axis a)
{
  switch (a) {
  case Axis::AP:
    return "AP";
  case Axis::SI:
    return "SI";
  default:
    return "none";
  }
}

Axis axis_from(std::string const &s)
{
  if (s == "AP") {
    return Axis::AP;
  }
  if (s == "SI") {
    return Axis::SI;
  }
  if (s == "none") {
    return Axis::None;
  }
  throw FormatError("unknown motion axis '" + s + "'");
}

} // namespace

void to_json(nlohmann::json &j, PhantomConfig const &c)
{
  nlohmann::json comps = nlohmann::json::array();
  for (auto const &m : c.components) {
    nlohmann::json shapes = nlohmann::json::array();
    for (auto const &e : m.shape) {
      shapes.push_back({{"center", e.center}, {"semi_axes", e.semi_axes}, {"intensity", e.intensity}});
    }
    comps.push_back({{"name", m.name},
                     {"shape", shapes},
                     {"motion_axis", axis_name(m.motion_axis)},
                     {"motion_source", m.motion_source == MotionSource::Cardiac ? "cardiac" : "respiration"},
                     {"pulsation_frac", m.pulsation_frac}});
  }
  j = {{"grid", c.grid},
       {"voxel_mm", c.voxel_mm},
       {"components", comps},
       {"coils", c.coils},
       {"coil_width_frac", c.coil_width_frac},
       {"noise_sigma", c.noise_sigma},
       {"resp_period_s", c.resp_period_s},
       {"resp_amp_ap_px", c.resp_amp_ap_px},
       {"resp_amp_si_px", c.resp_amp_si_px},
       {"resp_drift", c.resp_drift},
       {"cardiac_period_s", c.cardiac_period_s},
       {"cardiac_frames", c.cardiac_frames},
       {"seed", c.seed}};
}

void from_json(nlohmann::json const &j, PhantomConfig &c)
{
  PhantomConfig const d = PhantomConfig::standard();
  c.grid = j.value("grid", d.grid);
  c.voxel_mm = j.value("voxel_mm", d.voxel_mm);
  if (j.contains("components")) {
    c.components.clear();
    for (auto const &m : j.at("components")) {
      MotionComponent comp;
      comp.name = m.value("name", std::string{});
      for (auto const &e : m.at("shape")) {
        comp.shape.push_back({e.at("center").get<std::array<double, 3>>(),
                              e.at("semi_axes").get<std::array<double, 3>>(), e.value("intensity", 1.0)});
      }
      comp.motion_axis = axis_from(m.value("motion_axis", std::string("none")));
      auto const source = m.value("motion_source", std::string("respiration"));
      if (source != "cardiac" && source != "respiration") {
        throw FormatError("unknown motion source '" + source + "'");
      }
      comp.motion_source = source == "cardiac" ? MotionSource::Cardiac : MotionSource::Respiration;
      comp.pulsation_frac = m.value("pulsation_frac", 0.0);
      c.components.push_back(std::move(comp));
    }
  } else {
    c.components = d.components;
  }
  c.coils = j.value("coils", d.coils);
  c.coil_width_frac = j.value("coil_width_frac", d.coil_width_frac);
  c.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  c.resp_period_s = j.value("resp_period_s", d.resp_period_s);
  c.resp_amp_ap_px = j.value("resp_amp_ap_px", d.resp_amp_ap_px);
  c.resp_amp_si_px = j.value("resp_amp_si_px", d.resp_amp_si_px);
  c.resp_drift = j.value("resp_drift", d.resp_drift);
  c.cardiac_period_s = j.value("cardiac_period_s", d.cardiac_period_s);
  c.cardiac_frames = j.value("cardiac_frames", d.cardiac_frames);
  c.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json &j, GroundTruth const &t)
{
  j = {{"nav_ap", t.nav_ap}, {"nav_si", t.nav_si}, {"cardiac_phase", t.cardiac_phase}};
}

void from_json(nlohmann::json const &j, GroundTruth &t)
{
  t.nav_ap = j.at("nav_ap").get<std::vector<int>>();
  t.nav_si = j.at("nav_si").get<std::vector<int>>();
  t.cardiac_phase = j.at("cardiac_phase").get<std::vector<double>>();
}

} // namespace respnav
