#pragma once

#include "respnav/binning.hpp"
#include "respnav/metrics.hpp"
#include "respnav/motion.hpp"
#include "respnav/phantom.hpp"
#include "respnav/recon.hpp"
#include "respnav/sampling.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace respnav {

struct ExperimentConfig
{
  PatternConfig pattern;
  PhantomConfig phantom = PhantomConfig::standard();
  MotionConfig motion = MotionConfig::standard();
  Quantizer quantizer;
  int phases = 20;
  ReconMode mode = ReconMode::CsWavelet;
  ReconParams recon;
  std::optional<std::uint64_t> seed; // overrides pattern and phantom seeds when set

  // Default desk-scale experiment: 64 x 64 x 18 grid, 16-sample spokes,
  // 1 s navigation interval, 70 s scan, 4 coils, joint recon over the
  // cardiac cycle.
  static ExperimentConfig standard();

  // Seeds applied; cross-module checks (grid sizes, search window, motion
  // amplitudes vs window, respiration period vs navigation interval).
  // Throws ConfigError or ConfigMismatch.
  ExperimentConfig resolved() const;
};

// Failure in one pipeline stage; exit_code identifies the stage.
class StageError : public Error
{
public:
  StageError(std::string stage_name, int code, std::string const &what)
      : Error("stage '" + stage_name + "': " + what), stage(std::move(stage_name)), exit_code(code)
  {
  }
  std::string stage;
  int exit_code;
};

namespace exit_codes {
inline constexpr int config = 2;
inline constexpr int pattern = 10;
inline constexpr int simulate = 11;
inline constexpr int navimages = 12;
inline constexpr int motion = 13;
inline constexpr int bin = 14;
inline constexpr int recon = 15;
inline constexpr int metrics = 16;
inline constexpr int compare = 17;
} // namespace exit_codes

struct MotionRecovery
{
  std::size_t navigators = 0; // compared navigators, reference excluded
  std::size_t hits = 0;       // exact (ap, si) matches against ground truth
  double hit_rate = 0.0;
  bool degenerate = false;
  double rank_corr_1d_si = 0.0;
  double rank_corr_1d_ap = 0.0;
};

// Exact-hit rate of the combined trace against truth relative to navigator 1.
MotionRecovery motion_recovery(MotionTrace const &trace, GroundTruth const &truth);

struct ExperimentReport
{
  MetricsReport metrics;
  MotionRecovery recovery;
  std::vector<std::pair<std::string, UndersamplingReport>> sampling;
  std::vector<std::pair<std::string, double>> fraction_selected;
  nlohmann::json manifest;
};

// simulate -> navigator images -> 2-D and 1-D traces -> bins -> three
// reconstructions (no-nav, 1d-nav, 2d-nav) -> metrics. Every intermediate is
// written under out_dir and listed with its SHA-256 in manifest.json.
// Throws StageError.
ExperimentReport run_experiment(ExperimentConfig const &config, std::filesystem::path const &out_dir);

std::string sha256_file(std::filesystem::path const &path);

// |a - b| per slice of one phase as 16-bit PGMs named <stem>_z<slice>.pgm.
void write_difference_images(VolumeSeries const &a, VolumeSeries const &b, int phase,
                             std::filesystem::path const &dir, std::string const &stem);

void to_json(nlohmann::json &j, ExperimentConfig const &c);
void from_json(nlohmann::json const &j, ExperimentConfig &c);
void to_json(nlohmann::json &j, MotionRecovery const &r);

} // namespace respnav
