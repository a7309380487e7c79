#pragma once

#include "respnav/error.hpp"
#include "respnav/nav_recon.hpp"
#include "respnav/phantom.hpp"

#include <json.hpp>

#include <array>
#include <string>
#include <vector>

namespace respnav {

// Rectangle on the reference navigator; x runs along the readout (SI) and y
// along ky (AP).
struct Roi
{
  std::string name;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  Axis expected_axis = Axis::None; // informational hint only
};

struct MotionConfig
{
  std::vector<Roi> rois;
  int search_radius_px = 6;

  // Chest-wall and heart/liver ROIs matching PhantomConfig::standard().
  static MotionConfig standard();

  // Throws ConfigError unless every ROI grown by the search radius fits.
  void validate(int image_width, int image_height) const;
};

struct Shift
{
  int dx = 0;
  int dy = 0;
  friend bool operator==(Shift const &, Shift const &) = default;
};

struct RoiMatch
{
  Shift shift;
  double cc = 0.0;
};

// Exhaustive Pearson-correlation search of `reference_patch` over target
// patches at origin + (dx, dy), |dx|, |dy| <= radius. Offsets where the
// target patch has zero variance are skipped. Equal correlations resolve to
// the smallest |shift|, then lexicographic (dx, dy).
// Throws ConfigError if the window leaves the image, DegeneratePatch if no
// offset is usable.
RoiMatch match_roi(Image const &reference_patch, Image const &target, int origin_x, int origin_y, int radius);

Image crop(Image const &img, Roi const &roi);

// First principal component of one ROI's shift vectors.
struct RoiPca
{
  std::array<double, 2> component{0.0, 0.0}; // (x = SI, y = AP), largest |entry| positive
  double explained = 0.0;                     // variance ratio of the first component
  double total_variance = 0.0;
  bool degenerate = false;
};

struct MotionTrace
{
  MotionConfig config;
  std::vector<std::vector<RoiMatch>> raw; // [navigator][roi]; navigator 0 is the reference
  std::vector<int> ap;                    // combined shift per navigator
  std::vector<int> si;
  std::vector<RoiPca> pca;
  int roi_for_si = -1; // ROI serving the x axis
  int roi_for_ap = -1; // ROI serving the y axis

  std::size_t count() const { return ap.size(); }
};

// All ROIs had zero shift variance. Carries the trace with both axes taken
// from ROI 0 so callers may still use it.
class DegenerateMotion : public Error
{
public:
  DegenerateMotion(std::string const &what, MotionTrace partial)
      : Error("DegenerateMotion: " + what), trace(std::move(partial))
  {
  }
  MotionTrace trace;
};

// Reference = N_1; per ROI and navigator i >= 2 a template match; per-ROI PCA
// over the centered shift vectors; each image axis is served by the ROI
// maximizing |component along the axis| * explained variance.
MotionTrace extract_motion_2d(NavImageSeries const &navs, MotionConfig const &config);

struct Trace1D
{
  std::vector<double> scores; // first principal-component score per navigator
  double explained = 0.0;
};

// Per navigator: ky = kz = 0 line of every coil, 1-D inverse DFT, magnitude,
// concatenated; PCA across navigators. Throws MissingNavData.
Trace1D extract_motion_1d(RawDataset const &raw);

void to_json(nlohmann::json &j, Roi const &r);
void from_json(nlohmann::json const &j, Roi &r);
void to_json(nlohmann::json &j, MotionConfig const &c);
void from_json(nlohmann::json const &j, MotionConfig &c);
void to_json(nlohmann::json &j, MotionTrace const &t);
void from_json(nlohmann::json const &j, MotionTrace &t);
void to_json(nlohmann::json &j, Trace1D const &t);
void from_json(nlohmann::json const &j, Trace1D &t);

} // namespace respnav
