#include "respnav/binning.hpp"
#include "respnav/experiment.hpp"
#include "respnav/metrics.hpp"
#include "respnav/motion.hpp"
#include "respnav/nav_recon.hpp"
#include "respnav/parallel.hpp"
#include "respnav/raw_io.hpp"
#include "respnav/recon.hpp"
#include "respnav/sampling.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace respnav;
namespace fs = std::filesystem;

namespace {

nlohmann::json load_json(fs::path const &path)
{
  std::ifstream is(path);
  if (!is) {
    throw FormatError("cannot open " + path.string());
  }
  try {
    return nlohmann::json::parse(is);
  } catch (nlohmann::json::exception const &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_json(fs::path const &path, nlohmann::json const &j)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream os(path);
  if (!os) {
    throw FormatError("cannot write " + path.string());
  }
  os << j.dump(1) << '\n';
}

// Experiment config from an optional file; a bare PatternConfig document is
// accepted for the pattern subcommand.
ExperimentConfig load_config(std::string const &path, std::optional<std::uint64_t> seed)
{
  ExperimentConfig c = ExperimentConfig::standard();
  if (!path.empty()) {
    auto const j = load_json(path);
    if (j.contains("pattern") || j.contains("phantom") || j.contains("motion")) {
      c = j.get<ExperimentConfig>();
    } else {
      c.pattern = j.get<PatternConfig>();
    }
  }
  if (seed) {
    c.seed = seed;
  }
  if (c.seed) {
    c.pattern.seed = *c.seed;
    c.phantom.seed = *c.seed;
  }
  return c;
}

template <typename F>
int run_stage(int code, F &&fn)
{
  try {
    fn();
    return 0;
  } catch (StageError const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return code;
  }
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Respiratory self-navigation for continuous free-breathing cardiac MRI (simulation and analysis)"};
  app.require_subcommand(1);
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)");
  app.add_option("--seed", seed, "Seed overriding the config's pattern and phantom seeds");

  std::string config_path, out;

  auto *pattern = app.add_subcommand("pattern", "Generate the sampling schedule");
  pattern->add_option("--config", config_path, "Pattern or experiment config (JSON)");
  pattern->add_option("--out", out, "Schedule JSON output")->required();

  auto *simulate = app.add_subcommand("simulate", "Simulate multi-coil raw data for the schedule (RNAV1)");
  simulate->add_option("--config", config_path, "Experiment config (JSON)");
  simulate->add_option("--out", out, "Output prefix (<prefix>.json + <prefix>.bin)")->required();

  std::string raw_prefix;
  auto *navimages = app.add_subcommand("navimages", "Write navigator images as 16-bit PGM");
  navimages->add_option("--raw", raw_prefix, "RNAV1 prefix")->required();
  navimages->add_option("--out", out, "Output directory")->required();

  std::string rois_path, motion_mode = "2d";
  auto *motion = app.add_subcommand("motion", "Extract the respiration trace");
  motion->add_option("--raw", raw_prefix, "RNAV1 prefix")->required();
  motion->add_option("--rois", rois_path, "Motion config JSON (rois, search_radius_px)");
  motion->add_option("--mode", motion_mode, "2d or 1d")->check(CLI::IsMember({"2d", "1d"}));
  motion->add_option("--out", out, "Trace JSON output")->required();

  std::string trace_path;
  int phases = 20;
  int buckets = 8;
  auto *bin = app.add_subcommand("bin", "Cluster respiration states and select the modal bin");
  bin->add_option("--trace", trace_path, "Trace JSON from 'motion'")->required();
  bin->add_option("--raw", raw_prefix, "RNAV1 prefix")->required();
  bin->add_option("--phases", phases, "Cardiac phases")->check(CLI::PositiveNumber);
  bin->add_option("--buckets", buckets, "Bucket count for 1-D traces")->check(CLI::PositiveNumber);
  bin->add_option("--out", out, "Bins JSON output")->required();

  std::string bins_path, recon_mode = "cs";
  auto *recon = app.add_subcommand("recon", "Reconstruct the cardiac-phase volume series");
  recon->add_option("--raw", raw_prefix, "RNAV1 prefix")->required();
  recon->add_option("--bins", bins_path, "Bins JSON; omit to use every readout");
  recon->add_option("--phases", phases, "Cardiac phases when --bins is omitted")->check(CLI::PositiveNumber);
  recon->add_option("--mode", recon_mode, "zf or cs")->check(CLI::IsMember({"zf", "cs"}));
  recon->add_option("--config", config_path, "Experiment config supplying recon parameters");
  recon->add_option("--out", out, "Volume output (.rnavvol)")->required();

  std::vector<std::string> vols, names;
  auto *metrics = app.add_subcommand("metrics", "Image-quality metrics for one or more volume series");
  metrics->add_option("--vols", vols, "Volume files")->required();
  metrics->add_option("--names", names, "Method names (default: file stems)");
  metrics->add_option("--out", out, "Report JSON output")->required();

  auto *compare = app.add_subcommand("compare", "Comparison table and |A - B| difference images");
  compare->add_option("--vols", vols, "Volume files (first two are differenced)")->required()->expected(2, -1);
  compare->add_option("--names", names, "Method names (default: file stems)");
  int diff_phase = 0;
  compare->add_option("--phase", diff_phase, "Cardiac phase for difference images");
  compare->add_option("--out", out, "Output directory")->required();

  auto *run = app.add_subcommand("run", "Full experiment: simulate, navigate, bin, reconstruct, evaluate");
  run->add_option("--config", config_path, "Experiment config (JSON); defaults when omitted");
  run->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  set_max_threads(threads);

  auto const method_names = [&] {
    std::vector<std::string> n = names;
    for (std::size_t i = n.size(); i < vols.size(); ++i) {
      n.push_back(fs::path(vols[i]).stem().string());
    }
    return n;
  };

  if (*pattern) {
    return run_stage(exit_codes::pattern, [&] {
      auto const cfg = load_config(config_path, seed);
      auto const schedule = generate_schedule(cfg.pattern);
      save_json(out, schedule);
      std::cout << fmt::format("{} readouts, {} navigation events\n", schedule.readouts.size(),
                               schedule.nav_events.size());
    });
  }
  if (*simulate) {
    return run_stage(exit_codes::simulate, [&] {
      auto const cfg = load_config(config_path, seed).resolved();
      auto const raw = simulate_acquisition(cfg.phantom, generate_schedule(cfg.pattern));
      if (fs::path(out).has_parent_path()) {
        fs::create_directories(fs::path(out).parent_path());
      }
      write_raw(raw, out);
      std::cout << fmt::format("navigator SNR {:.1f}\n", navigator_snr(cfg.phantom, cfg.pattern));
    });
  }
  if (*navimages) {
    return run_stage(exit_codes::navimages, [&] {
      auto const navs = reconstruct_nav_images(read_raw(raw_prefix));
      double peak = 0.0;
      for (auto const &img : navs.images) {
        peak = std::max(peak, *std::max_element(img.data.begin(), img.data.end()));
      }
      fs::create_directories(out);
      for (std::size_t i = 0; i < navs.count(); ++i) {
        write_pgm16(navs.images[i], peak, fs::path(out) / fmt::format("nav_{:04d}.pgm", i));
      }
    });
  }
  if (*motion) {
    return run_stage(exit_codes::motion, [&] {
      auto const raw = read_raw(raw_prefix);
      if (motion_mode == "1d") {
        save_json(out, extract_motion_1d(raw));
        return;
      }
      MotionConfig const mc = rois_path.empty() ? MotionConfig::standard() : load_json(rois_path).get<MotionConfig>();
      try {
        save_json(out, extract_motion_2d(reconstruct_nav_images(raw), mc));
      } catch (DegenerateMotion const &e) {
        std::cerr << "warning: " << e.what() << '\n';
        save_json(out, e.trace);
      }
    });
  }
  if (*bin) {
    return run_stage(exit_codes::bin, [&] {
      auto const raw = read_raw(raw_prefix);
      auto const j = load_json(trace_path);
      StateMap const states = j.value("mode", std::string("2d")) == "1d"
                                  ? cluster_states(j.get<Trace1D>(), Quantizer{buckets})
                                  : cluster_states(j.get<MotionTrace>());
      auto const bins = select_bin(states, raw, phases);
      save_json(out, bins);
      std::cout << fmt::format("selected state ({}, {}): {} of {} navigators ({:.1f} %)\n", bins.selected_state.a,
                               bins.selected_state.b, bins.selected_navigators.size(), states.navigators,
                               100.0 * bins.fraction_selected);
    });
  }
  if (*recon) {
    return run_stage(exit_codes::recon, [&] {
      auto const raw = read_raw(raw_prefix);
      BinSelection const bins = bins_path.empty() ? select_all(raw, phases) : load_json(bins_path).get<BinSelection>();
      ReconParams const params = config_path.empty() ? ReconParams{} : load_config(config_path, seed).recon;
      auto const mode = recon_mode == "cs" ? ReconMode::CsWavelet : ReconMode::ZeroFilled;
      write_volumes(reconstruct(raw, bins, mode, params), out);
    });
  }
  if (*metrics) {
    return run_stage(exit_codes::metrics, [&] {
      auto const n = method_names();
      std::vector<MethodMetrics> methods;
      for (std::size_t i = 0; i < vols.size(); ++i) {
        methods.push_back(evaluate(n[i], read_volumes(vols[i])));
      }
      auto const report = build_report(std::move(methods));
      save_json(out, report);
      std::cout << format_table(report);
    });
  }
  if (*compare) {
    return run_stage(exit_codes::compare, [&] {
      auto const n = method_names();
      std::vector<VolumeSeries> series;
      std::vector<MethodMetrics> methods;
      for (std::size_t i = 0; i < vols.size(); ++i) {
        series.push_back(read_volumes(vols[i]));
        methods.push_back(evaluate(n[i], series.back()));
      }
      auto const report = build_report(std::move(methods));
      fs::create_directories(out);
      std::ofstream(fs::path(out) / "table.txt") << format_table(report);
      write_difference_images(series[0], series[1], diff_phase, fs::path(out) / "diff",
                              fmt::format("{}_minus_{}", n[0], n[1]));
      std::cout << format_table(report);
    });
  }
  if (*run) {
    return run_stage(exit_codes::config, [&] {
      auto const report = run_experiment(load_config(config_path, seed), out);
      std::cout << format_table(report.metrics);
      std::cout << fmt::format("\n2-D motion recovery: {}/{} navigators exact ({:.1f} %)\n", report.recovery.hits,
                               report.recovery.navigators, 100.0 * report.recovery.hit_rate);
      for (auto const &[name, f] : report.fraction_selected) {
        std::cout << fmt::format("{}: {:.1f} % of navigators selected\n", name, 100.0 * f);
      }
    });
  }
  return 0;
}
