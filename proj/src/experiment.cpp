#include "respnav/experiment.hpp"

#include "respnav/nav_recon.hpp"
#include "respnav/raw_io.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>

namespace respnav {

ExperimentConfig ExperimentConfig::standard()
{
  ExperimentConfig c;
  c.pattern.total_dur_s = 70.0;
  c.phantom.noise_sigma = 5.0;
  c.recon.temporal_levels = 2;
  return c;
}

ExperimentConfig ExperimentConfig::resolved() const
{
  ExperimentConfig c = *this;
  if (c.seed) {
    c.pattern.seed = *c.seed;
    c.phantom.seed = *c.seed;
  }
  c.pattern.validate();
  c.phantom.validate();
  if (c.phantom.grid[0] != c.pattern.nx || c.phantom.grid[1] != c.pattern.ny || c.phantom.grid[2] != c.pattern.nz) {
    throw ConfigMismatch("phantom grid does not match the sampling pattern");
  }
  c.motion.validate(c.pattern.nx, c.pattern.ny);
  double const reach = std::ceil(std::max(c.phantom.resp_amp_ap_px, c.phantom.resp_amp_si_px) *
                                 (1.0 + c.phantom.resp_drift));
  if (reach > c.motion.search_radius_px) {
    throw ConfigError(fmt::format("respiration amplitude {} px exceeds the search radius {} px", reach,
                                  c.motion.search_radius_px));
  }
  if (!(c.phantom.resp_period_s > 2.0 * c.pattern.nav_interval_s)) {
    throw ConfigError("respiration period must exceed twice the navigation interval");
  }
  if (c.phases < 1) {
    throw ConfigError("phases must be >= 1");
  }
  if (c.recon.iterations < 0 || c.recon.lambda_frac < 0.0) {
    throw ConfigError("recon iterations and lambda_frac must be non-negative");
  }
  return c;
}

MotionRecovery motion_recovery(MotionTrace const &trace, GroundTruth const &truth)
{
  if (trace.count() != truth.nav_ap.size()) {
    throw ConfigMismatch("trace and ground truth cover different navigator counts");
  }
  MotionRecovery r;
  for (std::size_t i = 1; i < trace.count(); ++i) {
    ++r.navigators;
    if (trace.ap[i] == truth.nav_ap[i] - truth.nav_ap[0] && trace.si[i] == truth.nav_si[i] - truth.nav_si[0]) {
      ++r.hits;
    }
  }
  r.hit_rate = r.navigators > 0 ? static_cast<double>(r.hits) / static_cast<double>(r.navigators) : 1.0;
  return r;
}

std::string sha256_file(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw FormatError("cannot open " + path.string());
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += fmt::format("{:02x}", digest[i]);
  }
  return hex;
}

void write_difference_images(VolumeSeries const &a, VolumeSeries const &b, int phase,
                             std::filesystem::path const &dir, std::string const &stem)
{
  auto const &va = a.volumes.at(static_cast<std::size_t>(phase));
  auto const &vb = b.volumes.at(static_cast<std::size_t>(phase));
  if (!va.same_shape(vb)) {
    throw ConfigMismatch("difference images need equally shaped volumes");
  }
  std::filesystem::create_directories(dir);
  double peak = 0.0;
  for (double v : va.data) {
    peak = std::max(peak, v);
  }
  for (int z = 0; z < va.nz; ++z) {
    Image diff(va.nx, va.ny);
    for (int y = 0; y < va.ny; ++y) {
      for (int x = 0; x < va.nx; ++x) {
        diff(x, y) = std::abs(va(x, y, z) - vb(x, y, z));
      }
    }
    write_pgm16(diff, peak, dir / fmt::format("{}_z{:02d}.pgm", stem, z));
  }
}

namespace {

template <typename F>
auto stage(std::string const &name, int code, F &&fn) -> decltype(fn())
{
  std::cerr << "[respnav] " << name << '\n';
  try {
    return fn();
  } catch (StageError const &) {
    throw;
  } catch (std::exception const &e) {
    throw StageError(name, code, e.what());
  }
}

void write_json(std::filesystem::path const &path, nlohmann::json const &j)
{
  std::ofstream os(path);
  if (!os) {
    throw FormatError("cannot write " + path.string());
  }
  os << j.dump(1) << '\n';
}

} // namespace

ExperimentReport run_experiment(ExperimentConfig const &input, std::filesystem::path const &out)
{
  ExperimentConfig const cfg = stage("config", exit_codes::config, [&] { return input.resolved(); });
  std::filesystem::create_directories(out);
  write_json(out / "config.json", cfg);

  auto const schedule = stage("pattern", exit_codes::pattern, [&] {
    auto s = generate_schedule(cfg.pattern);
    write_json(out / "schedule.json", s);
    return s;
  });

  auto const raw = stage("simulate", exit_codes::simulate, [&] {
    auto r = simulate_acquisition(cfg.phantom, schedule);
    write_raw(r, out / "raw");
    return r;
  });

  auto const navs = stage("navimages", exit_codes::navimages, [&] {
    auto n = reconstruct_nav_images(raw);
    double peak = 0.0;
    for (auto const &img : n.images) {
      peak = std::max(peak, *std::max_element(img.data.begin(), img.data.end()));
    }
    std::filesystem::create_directories(out / "navs");
    for (std::size_t i = 0; i < n.count(); ++i) {
      write_pgm16(n.images[i], peak, out / "navs" / fmt::format("nav_{:04d}.pgm", i));
    }
    return n;
  });

  ExperimentReport report;
  auto const trace = stage("motion", exit_codes::motion, [&] {
    MotionTrace t;
    try {
      t = extract_motion_2d(navs, cfg.motion);
    } catch (DegenerateMotion const &e) {
      std::cerr << "[respnav] " << e.what() << "; using the constant trace\n";
      t = e.trace;
      report.recovery.degenerate = true;
    }
    write_json(out / "trace_2d.json", t);
    return t;
  });
  auto const trace1d = stage("motion", exit_codes::motion, [&] {
    auto t = extract_motion_1d(raw);
    write_json(out / "trace_1d.json", t);
    return t;
  });

  bool const degenerate = report.recovery.degenerate;
  report.recovery = motion_recovery(trace, raw.truth);
  report.recovery.degenerate = degenerate;
  if (trace1d.scores.size() >= 2) {
    std::vector<double> si(raw.truth.nav_si.begin(), raw.truth.nav_si.end());
    std::vector<double> ap(raw.truth.nav_ap.begin(), raw.truth.nav_ap.end());
    report.recovery.rank_corr_1d_si = rank_correlation(trace1d.scores, si);
    report.recovery.rank_corr_1d_ap = rank_correlation(trace1d.scores, ap);
  }

  struct Arm
  {
    std::string name;
    BinSelection bins;
  };
  std::vector<Arm> arms = stage("bin", exit_codes::bin, [&] {
    std::vector<Arm> a;
    a.push_back({"no-nav", select_all(raw, cfg.phases)});
    a.push_back({"1d-nav", select_bin(cluster_states(trace1d, cfg.quantizer), raw, cfg.phases)});
    a.push_back({"2d-nav", select_bin(cluster_states(trace), raw, cfg.phases)});
    for (auto const &arm : a) {
      write_json(out / fmt::format("bins_{}.json", arm.name), arm.bins);
      report.sampling.emplace_back(arm.name, undersampling_report(raw, arm.bins));
      report.fraction_selected.emplace_back(arm.name, arm.bins.fraction_selected);
    }
    return a;
  });

  std::vector<VolumeSeries> volumes;
  for (auto const &arm : arms) {
    volumes.push_back(stage("recon", exit_codes::recon, [&] {
      auto v = reconstruct(raw, arm.bins, cfg.mode, cfg.recon);
      write_volumes(v, out / fmt::format("vols_{}.rnavvol", arm.name));
      return v;
    }));
  }

  report.metrics = stage("metrics", exit_codes::metrics, [&] {
    std::vector<MethodMetrics> methods;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      methods.push_back(evaluate(arms[i].name, volumes[i]));
    }
    return build_report(std::move(methods));
  });

  stage("compare", exit_codes::compare, [&] {
    write_difference_images(volumes[0], volumes[2], 0, out / "diff", "nonav_minus_2dnav");
    nlohmann::json sampling = nlohmann::json::object();
    for (auto const &[name, r] : report.sampling) {
      sampling[name] = r;
    }
    nlohmann::json fractions = nlohmann::json::object();
    for (auto const &[name, f] : report.fraction_selected) {
      fractions[name] = f;
    }
    write_json(out / "report.json", {{"metrics", report.metrics},
                                     {"motion_recovery", report.recovery},
                                     {"undersampling", sampling},
                                     {"fraction_selected", fractions}});
    std::ofstream(out / "table.txt") << format_table(report.metrics);
    return 0;
  });

  // Manifest of every file written so far, sorted by relative path.
  std::vector<std::filesystem::path> files;
  for (auto const &entry : std::filesystem::recursive_directory_iterator(out)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
      files.push_back(std::filesystem::relative(entry.path(), out));
    }
  }
  std::sort(files.begin(), files.end());
  nlohmann::json listing = nlohmann::json::array();
  for (auto const &f : files) {
    listing.push_back({{"path", f.generic_string()},
                       {"bytes", std::filesystem::file_size(out / f)},
                       {"sha256", sha256_file(out / f)}});
  }
  report.manifest = {{"config", cfg}, {"files", listing}};
  write_json(out / "manifest.json", report.manifest);
  return report;
}

void to_json(nlohmann::json &j, ExperimentConfig const &c)
{
  j = {{"pattern", c.pattern}, {"phantom", c.phantom},   {"motion", c.motion},
       {"phases", c.phases},   {"buckets_1d", c.quantizer.buckets},
       {"mode", c.mode == ReconMode::CsWavelet ? "cs" : "zf"}, {"recon", c.recon}};
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
}

void from_json(nlohmann::json const &j, ExperimentConfig &c)
{
  ExperimentConfig const d = ExperimentConfig::standard();
  c.pattern = j.contains("pattern") ? j.at("pattern").get<PatternConfig>() : d.pattern;
  c.phantom = j.contains("phantom") ? j.at("phantom").get<PhantomConfig>() : d.phantom;
  c.motion = j.contains("motion") ? j.at("motion").get<MotionConfig>() : d.motion;
  c.phases = j.value("phases", d.phases);
  c.quantizer.buckets = j.value("buckets_1d", d.quantizer.buckets);
  auto const mode = j.value("mode", std::string("cs"));
  if (mode != "cs" && mode != "zf") {
    throw FormatError("mode must be 'cs' or 'zf'");
  }
  c.mode = mode == "cs" ? ReconMode::CsWavelet : ReconMode::ZeroFilled;
  c.recon = j.contains("recon") ? j.at("recon").get<ReconParams>() : d.recon;
  if (j.contains("seed") && !j.at("seed").is_null()) {
    c.seed = j.at("seed").get<std::uint64_t>();
  } else {
    c.seed.reset();
  }
}

void to_json(nlohmann::json &j, MotionRecovery const &r)
{
  j = {{"navigators", r.navigators},          {"hits", r.hits},
       {"hit_rate", r.hit_rate},              {"degenerate", r.degenerate},
       {"rank_corr_1d_si", r.rank_corr_1d_si}, {"rank_corr_1d_ap", r.rank_corr_1d_ap}};
}

} // namespace respnav
