#include "respnav/recon.hpp"

#include "respnav/error.hpp"
#include "respnav/fft.hpp"
#include "respnav/parallel.hpp"
#include "respnav/raw_io.hpp"
#include "respnav/wavelet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace respnav {

double PhaseKspace::occupancy() const
{
  if (mask.empty()) {
    return 0.0;
  }
  auto const hit = std::count(mask.begin(), mask.end(), std::uint8_t{1});
  return static_cast<double>(hit) / static_cast<double>(mask.size());
}

PhaseKspace grid_phase(RawDataset const &raw, std::span<std::size_t const> readouts,
                       std::span<int const> phase_of_readout, int phase)
{
  if (readouts.size() != phase_of_readout.size()) {
    throw ConfigMismatch("phase labels do not match readout list");
  }
  auto const &c = raw.schedule.config;
  PhaseKspace out;
  out.coils.assign(static_cast<std::size_t>(raw.coils), CxVolume(c.nx, c.ny, c.nz));
  out.mask.assign(static_cast<std::size_t>(c.ny) * c.nz, 0);
  std::vector<int> hits(out.mask.size(), 0);

  for (std::size_t k = 0; k < readouts.size(); ++k) {
    if (phase_of_readout[k] != phase) {
      continue;
    }
    auto const i = readouts[k];
    if (i >= raw.schedule.readouts.size()) {
      throw ConfigMismatch(fmt::format("readout index {} out of range", i));
    }
    auto const &r = raw.schedule.readouts[i];
    int const y = centered_index(r.ky, c.ny);
    int const z = centered_index(r.kz, c.nz);
    ++hits[static_cast<std::size_t>(z) * c.ny + y];
    ++out.samples;
    for (int coil = 0; coil < raw.coils; ++coil) {
      auto const line = raw.line(i, coil);
      auto &vol = out.coils[static_cast<std::size_t>(coil)];
      for (int x = 0; x < c.nx; ++x) {
        vol(x, y, z) += Cx(line[static_cast<std::size_t>(x)]);
      }
    }
  }
  if (out.samples == 0) {
    throw EmptyPhase(fmt::format("cardiac phase {} received no samples", phase));
  }
  for (int z = 0; z < c.nz; ++z) {
    for (int y = 0; y < c.ny; ++y) {
      int const h = hits[static_cast<std::size_t>(z) * c.ny + y];
      if (h == 0) {
        continue;
      }
      out.mask[static_cast<std::size_t>(z) * c.ny + y] = 1;
      for (auto &vol : out.coils) {
        for (int x = 0; x < c.nx; ++x) {
          vol(x, y, z) /= static_cast<double>(h);
        }
      }
    }
  }
  return out;
}

GriddedKspace grid_adjoint(RawDataset const &raw, std::span<std::size_t const> readouts,
                           std::span<int const> phase_of_readout, int phases)
{
  GriddedKspace g;
  for (int p = 0; p < phases; ++p) {
    g.phases.push_back(grid_phase(raw, readouts, phase_of_readout, p));
  }
  return g;
}

CxVolume zero_filled(CxVolume const &kspace) { return ifft3(kspace); }

namespace {

// Per-slice 2-D wavelet analysis / synthesis of a complex volume.
CxVolume analyze(CxVolume const &v, Wavelet const &w, int levels)
{
  CxVolume out = v;
  for (int z = 0; z < v.nz; ++z) {
    auto slice = slice_z(v, z);
    dwt2(slice, w, levels);
    std::copy(slice.data.begin(), slice.data.end(), out.data.begin() + static_cast<long>(v.index(0, 0, z)));
  }
  return out;
}

CxVolume synthesize(CxVolume const &v, Wavelet const &w, int levels)
{
  CxVolume out = v;
  for (int z = 0; z < v.nz; ++z) {
    auto slice = slice_z(v, z);
    idwt2(slice, w, levels);
    std::copy(slice.data.begin(), slice.data.end(), out.data.begin() + static_cast<long>(v.index(0, 0, z)));
  }
  return out;
}

void apply_mask(CxVolume &k, std::span<std::uint8_t const> mask)
{
  for (int z = 0; z < k.nz; ++z) {
    for (int y = 0; y < k.ny; ++y) {
      if (mask[static_cast<std::size_t>(z) * k.ny + y] != 0) {
        continue;
      }
      for (int x = 0; x < k.nx; ++x) {
        k(x, y, z) = Cx{};
      }
    }
  }
}

// Multi-level periodic transform along the phase axis for every voxel.
void temporal_transform(std::vector<CxVolume> &v, Wavelet const &w, int levels, bool forward)
{
  std::size_t const phases = v.size();
  std::size_t const voxels = v.front().size();
  std::vector<Cx> line(phases), out(phases);
  for (std::size_t i = 0; i < voxels; ++i) {
    for (std::size_t p = 0; p < phases; ++p) {
      line[p] = v[p].data[i];
    }
    if (forward) {
      for (int l = 0; l < levels; ++l) {
        std::size_t const n = phases >> l;
        std::span<Cx> dst(out.data(), n);
        dwt1<Cx>(std::span<Cx const>(line.data(), n), dst.first(n / 2), dst.subspan(n / 2), w);
        std::copy(out.begin(), out.begin() + static_cast<long>(n), line.begin());
      }
    } else {
      for (int l = levels - 1; l >= 0; --l) {
        std::size_t const n = phases >> l;
        std::span<Cx const> src(line.data(), n);
        idwt1<Cx>(src.first(n / 2), src.subspan(n / 2), std::span<Cx>(out.data(), n), w);
        std::copy(out.begin(), out.begin() + static_cast<long>(n), line.begin());
      }
    }
    for (std::size_t p = 0; p < phases; ++p) {
      v[p].data[i] = line[p];
    }
  }
}

int usable_temporal_levels(std::size_t phases, int requested)
{
  int levels = 0;
  while (levels < requested && phases % 2 == 0 && phases >= 2) {
    phases /= 2;
    ++levels;
  }
  return levels;
}

// Complex soft threshold; returns the l1 norm of the thresholded coefficients.
double soft_threshold(CxVolume &c, double lambda)
{
  double penalty = 0.0;
  for (auto &v : c.data) {
    double const mag = std::abs(v);
    v = mag > lambda ? v * ((mag - lambda) / mag) : Cx{};
    penalty += std::abs(v);
  }
  return penalty;
}

double masked_residual_energy(CxVolume const &fx, CxVolume const &y, std::span<std::uint8_t const> mask)
{
  double data = 0.0;
  for (int z = 0; z < fx.nz; ++z) {
    for (int yy = 0; yy < fx.ny; ++yy) {
      if (mask[static_cast<std::size_t>(z) * fx.ny + yy] == 0) {
        continue;
      }
      for (int x = 0; x < fx.nx; ++x) {
        data += std::norm(fx(x, yy, z) - y(x, yy, z));
      }
    }
  }
  return data;
}

} // namespace

CxVolume cs_wavelet(CxVolume const &kspace, std::span<std::uint8_t const> mask, ReconParams const &params,
                    IterationLog &log)
{
  Wavelet const w = Wavelet::daubechies(params.wavelet_moments);
  int const levels = usable_levels(kspace.nx, kspace.ny, params.levels);

  // Rescale to the orthonormal convention so the masked operator has unit norm.
  CxVolume y = kspace;
  double const scale = 1.0 / std::sqrt(static_cast<double>(kspace.size()));
  for (auto &v : y.data) {
    v *= scale;
  }
  apply_mask(y, mask);

  CxVolume x = ifft3(y, Norm::Ortho);
  double lambda = 0.0;
  if (params.lambda) {
    lambda = *params.lambda;
  } else {
    double peak = 0.0;
    for (auto const &c : analyze(x, w, levels).data) {
      peak = std::max(peak, std::abs(c));
    }
    lambda = params.lambda_frac * peak;
  }
  log.lambda = lambda;
  log.objective.clear();
  log.non_convergence = false;

  // F x is carried across iterations; W is orthonormal, so W x equals the
  // thresholded coefficients and the objective needs no extra transforms.
  CxVolume fx = fft3(x, Norm::Ortho);
  for (int it = 0; it < params.iterations; ++it) {
    for (std::size_t i = 0; i < fx.size(); ++i) {
      fx.data[i] = y.data[i] - fx.data[i];
    }
    apply_mask(fx, mask);
    CxVolume const step = ifft3(std::move(fx), Norm::Ortho);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x.data[i] += step.data[i];
    }
    double penalty = 0.0;
    if (lambda > 0.0) {
      CxVolume coeffs = analyze(x, w, levels);
      penalty = lambda * soft_threshold(coeffs, lambda);
      x = synthesize(coeffs, w, levels);
    }
    fx = fft3(x, Norm::Ortho);
    double const f = 0.5 * masked_residual_energy(fx, y, mask) + penalty;
    if (!log.objective.empty() && f > log.objective.back() * (1.0 + 1e-6) + 1e-300) {
      log.non_convergence = true;
    }
    log.objective.push_back(f);
  }
  return x;
}

std::vector<CxVolume> cs_wavelet_temporal(std::span<CxVolume const> kspace,
                                          std::span<std::vector<std::uint8_t> const> masks,
                                          ReconParams const &params, IterationLog &log)
{
  if (kspace.empty() || kspace.size() != masks.size()) {
    throw ConfigMismatch("temporal recon needs one mask per phase");
  }
  std::size_t const phases = kspace.size();
  Wavelet const w = Wavelet::daubechies(params.wavelet_moments);
  int const levels = usable_levels(kspace[0].nx, kspace[0].ny, params.levels);
  int const tlevels = usable_temporal_levels(phases, params.temporal_levels);

  double const scale = 1.0 / std::sqrt(static_cast<double>(kspace[0].size()));
  std::vector<CxVolume> y(kspace.begin(), kspace.end());
  std::vector<CxVolume> x(phases);
  for (std::size_t p = 0; p < phases; ++p) {
    for (auto &v : y[p].data) {
      v *= scale;
    }
    apply_mask(y[p], masks[p]);
    x[p] = ifft3(y[p], Norm::Ortho);
  }

  auto const analyze_all = [&](std::vector<CxVolume> const &img) {
    std::vector<CxVolume> c(phases);
    for (std::size_t p = 0; p < phases; ++p) {
      c[p] = analyze(img[p], w, levels);
    }
    temporal_transform(c, w, tlevels, true);
    return c;
  };
  auto const synthesize_all = [&](std::vector<CxVolume> c) {
    temporal_transform(c, w, tlevels, false);
    for (std::size_t p = 0; p < phases; ++p) {
      c[p] = synthesize(c[p], w, levels);
    }
    return c;
  };

  double lambda = 0.0;
  if (params.lambda) {
    lambda = *params.lambda;
  } else {
    double peak = 0.0;
    for (auto const &c : analyze_all(x)) {
      for (auto const &v : c.data) {
        peak = std::max(peak, std::abs(v));
      }
    }
    lambda = params.lambda_frac * peak;
  }
  log.lambda = lambda;
  log.objective.clear();
  log.non_convergence = false;

  std::vector<CxVolume> fx(phases);
  for (std::size_t p = 0; p < phases; ++p) {
    fx[p] = fft3(x[p], Norm::Ortho);
  }
  for (int it = 0; it < params.iterations; ++it) {
    for (std::size_t p = 0; p < phases; ++p) {
      for (std::size_t i = 0; i < fx[p].size(); ++i) {
        fx[p].data[i] = y[p].data[i] - fx[p].data[i];
      }
      apply_mask(fx[p], masks[p]);
      CxVolume const step = ifft3(std::move(fx[p]), Norm::Ortho);
      for (std::size_t i = 0; i < x[p].size(); ++i) {
        x[p].data[i] += step.data[i];
      }
    }
    double penalty = 0.0;
    if (lambda > 0.0) {
      auto coeffs = analyze_all(x);
      for (auto &c : coeffs) {
        penalty += lambda * soft_threshold(c, lambda);
      }
      x = synthesize_all(std::move(coeffs));
    }
    double data = 0.0;
    for (std::size_t p = 0; p < phases; ++p) {
      fx[p] = fft3(x[p], Norm::Ortho);
      data += masked_residual_energy(fx[p], y[p], masks[p]);
    }
    double const f = 0.5 * data + penalty;
    if (!log.objective.empty() && f > log.objective.back() * (1.0 + 1e-6) + 1e-300) {
      log.non_convergence = true;
    }
    log.objective.push_back(f);
  }
  return x;
}

VolumeSeries reconstruct(RawDataset const &raw, BinSelection const &bins, ReconMode mode, ReconParams const &params)
{
  auto const &c = raw.schedule.config;
  VolumeSeries series;
  series.mode = mode;
  series.volumes.assign(static_cast<std::size_t>(bins.phases), Volume(c.nx, c.ny, c.nz));
  std::vector<std::vector<IterationLog>> logs(static_cast<std::size_t>(bins.phases));
  std::vector<double> occupancy(static_cast<std::size_t>(bins.phases), 0.0);

  auto const combine = [](std::vector<CxVolume> const &images, Volume &vol) {
    for (std::size_t v = 0; v < vol.size(); ++v) {
      double s = 0.0;
      for (auto const &img : images) {
        s += std::norm(img.data[v]);
      }
      vol.data[v] = std::sqrt(s);
    }
  };

  bool const joint = mode == ReconMode::CsWavelet && params.temporal_levels > 0;
  if (joint) {
    auto const g = grid_adjoint(raw, bins.selected_readouts, bins.cardiac_phase_of_readout, bins.phases);
    std::vector<std::vector<std::uint8_t>> masks;
    for (std::size_t p = 0; p < g.phases.size(); ++p) {
      occupancy[p] = g.phases[p].occupancy();
      masks.push_back(g.phases[p].mask);
    }
    // images[coil][phase]
    std::vector<std::vector<CxVolume>> images(static_cast<std::size_t>(raw.coils));
    logs.assign(1, std::vector<IterationLog>(static_cast<std::size_t>(raw.coils)));
    parallel_for(static_cast<std::size_t>(raw.coils), [&](std::size_t coil) {
      std::vector<CxVolume> k;
      for (auto const &ph : g.phases) {
        k.push_back(ph.coils[coil]);
      }
      images[coil] = cs_wavelet_temporal(k, masks, params, logs[0][coil]);
    });
    for (std::size_t p = 0; p < series.volumes.size(); ++p) {
      std::vector<CxVolume> per_coil;
      for (auto &coil_images : images) {
        per_coil.push_back(std::move(coil_images[p]));
      }
      combine(per_coil, series.volumes[p]);
    }
  }

  for (int p = 0; p < bins.phases && !joint; ++p) {
    PhaseKspace const k = grid_phase(raw, bins.selected_readouts, bins.cardiac_phase_of_readout, p);
    occupancy[static_cast<std::size_t>(p)] = k.occupancy();
    std::vector<CxVolume> images(static_cast<std::size_t>(raw.coils));
    auto &phase_logs = logs[static_cast<std::size_t>(p)];
    phase_logs.resize(static_cast<std::size_t>(raw.coils));
    parallel_for(static_cast<std::size_t>(raw.coils), [&](std::size_t coil) {
      if (mode == ReconMode::ZeroFilled) {
        images[coil] = zero_filled(k.coils[coil]);
      } else {
        images[coil] = cs_wavelet(k.coils[coil], k.mask, params, phase_logs[coil]);
      }
    });
    combine(images, series.volumes[static_cast<std::size_t>(p)]);
  }

  nlohmann::json iterations = nlohmann::json::array();
  bool non_convergence = false;
  if (mode == ReconMode::CsWavelet) {
    for (auto const &phase_logs : logs) {
      nlohmann::json row = nlohmann::json::array();
      for (auto const &l : phase_logs) {
        row.push_back({{"lambda", l.lambda}, {"objective", l.objective}, {"non_convergence", l.non_convergence}});
        non_convergence = non_convergence || l.non_convergence;
      }
      iterations.push_back(std::move(row));
    }
  }
  series.meta = {{"params", params},
                 {"selected_state", {bins.selected_state.a, bins.selected_state.b}},
                 {"fraction_selected", bins.fraction_selected},
                 {"selected_readouts", bins.selected_readouts.size()},
                 {"dropped_readouts", bins.dropped},
                 {"occupancy", occupancy},
                 {"non_convergence", non_convergence},
                 {"joint_phases", joint},
                 {"iterations", iterations}};
  return series;
}

void write_volumes(VolumeSeries const &series, std::filesystem::path const &path)
{
  if (series.volumes.empty()) {
    throw FormatError("no volumes to write");
  }
  auto const &v0 = series.volumes.front();
  nlohmann::json header = {{"format", "RNAVVOL1"},
                           {"nx", v0.nx},
                           {"ny", v0.ny},
                           {"nz", v0.nz},
                           {"phases", series.volumes.size()},
                           {"mode", series.mode == ReconMode::CsWavelet ? "cs" : "zf"},
                           {"meta", series.meta}};
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw FormatError("cannot write " + path.string());
  }
  os << header.dump() << '\n';
  std::vector<float> buf;
  for (auto const &v : series.volumes) {
    if (!v.same_shape(v0)) {
      throw FormatError("volume series has mixed shapes");
    }
    buf.assign(v.data.begin(), v.data.end());
    write_f32le(os, buf);
  }
}

VolumeSeries read_volumes(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw FormatError("cannot open " + path.string());
  }
  std::string line;
  std::getline(is, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (nlohmann::json::exception const &e) {
    throw FormatError(std::string("RNAVVOL header: ") + e.what());
  }
  if (header.value("format", std::string{}) != "RNAVVOL1") {
    throw FormatError("not an RNAVVOL1 file: " + path.string());
  }
  VolumeSeries series;
  series.mode = header.at("mode").get<std::string>() == "cs" ? ReconMode::CsWavelet : ReconMode::ZeroFilled;
  series.meta = header.value("meta", nlohmann::json::object());
  int const nx = header.at("nx").get<int>();
  int const ny = header.at("ny").get<int>();
  int const nz = header.at("nz").get<int>();
  auto const phases = header.at("phases").get<std::size_t>();
  std::vector<float> buf(static_cast<std::size_t>(nx) * ny * nz);
  for (std::size_t p = 0; p < phases; ++p) {
    read_f32le(is, buf);
    Volume v(nx, ny, nz);
    std::copy(buf.begin(), buf.end(), v.data.begin());
    series.volumes.push_back(std::move(v));
  }
  return series;
}

void to_json(nlohmann::json &j, ReconParams const &p)
{
  j = {{"iterations", p.iterations},
       {"lambda_frac", p.lambda_frac},
       {"wavelet_moments", p.wavelet_moments},
       {"levels", p.levels},
       {"temporal_levels", p.temporal_levels}};
  if (p.lambda) {
    j["lambda"] = *p.lambda;
  }
}

void from_json(nlohmann::json const &j, ReconParams &p)
{
  ReconParams const d;
  p.iterations = j.value("iterations", d.iterations);
  p.lambda_frac = j.value("lambda_frac", d.lambda_frac);
  if (j.contains("lambda") && !j.at("lambda").is_null()) {
    p.lambda = j.at("lambda").get<double>();
  } else {
    p.lambda.reset();
  }
  p.wavelet_moments = j.value("wavelet_moments", d.wavelet_moments);
  p.levels = j.value("levels", d.levels);
  p.temporal_levels = j.value("temporal_levels", d.temporal_levels);
}

} // namespace respnav
