#include "respnav/motion.hpp"

#include "respnav/fft.hpp"
#include "respnav/parallel.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace respnav {

namespace {

struct PatchStats
{
  double mean = 0.0;
  double ss = 0.0; // sum of squared deviations
};

PatchStats stats(Image const &p)
{
  PatchStats s;
  for (double v : p.data) {
    s.mean += v;
  }
  s.mean /= static_cast<double>(p.size());
  for (double v : p.data) {
    s.ss += (v - s.mean) * (v - s.mean);
  }
  return s;
}

bool preferred(Shift a, Shift b)
{
  int const na = a.dx * a.dx + a.dy * a.dy;
  int const nb = b.dx * b.dx + b.dy * b.dy;
  if (na != nb) {
    return na < nb;
  }
  return std::pair(a.dx, a.dy) < std::pair(b.dx, b.dy);
}

RoiPca roi_pca(std::vector<std::vector<RoiMatch>> const &raw, std::size_t roi)
{
  std::size_t const n = raw.size() - 1;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 1; i < raw.size(); ++i) {
    m(static_cast<Eigen::Index>(i - 1), 0) = raw[i][roi].shift.dx;
    m(static_cast<Eigen::Index>(i - 1), 1) = raw[i][roi].shift.dy;
  }
  Eigen::MatrixXd const centered = m.rowwise() - m.colwise().mean();
  Eigen::Matrix2d const cov = centered.transpose() * centered / static_cast<double>(n);

  RoiPca out;
  out.total_variance = cov.trace();
  if (out.total_variance <= 1e-12) {
    out.degenerate = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  // Eigenvalues ascending.
  Eigen::Vector2d v = eig.eigenvectors().col(1);
  Eigen::Index big = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
  if (v(big) < 0.0) {
    v = -v;
  }
  out.component = {v(0), v(1)};
  out.explained = eig.eigenvalues()(1) / out.total_variance;
  return out;
}

int assign_axis(std::vector<RoiPca> const &pca, int axis)
{
  int best = -1;
  double best_score = -1.0;
  for (std::size_t r = 0; r < pca.size(); ++r) {
    if (pca[r].degenerate) {
      continue;
    }
    double const score = std::abs(pca[r].component[static_cast<std::size_t>(axis)]) * pca[r].explained;
    if (score > best_score + 1e-12) {
      best = static_cast<int>(r);
      best_score = score;
    }
  }
  return best;
}

std::string axis_label(Axis a)
{
  return a == Axis::AP ? "AP" : a == Axis::SI ? "SI" : "none";
}

} // namespace

MotionConfig MotionConfig::standard()
{
  MotionConfig c;
  c.rois = {{"chest", 8, 44, 15, 13, Axis::AP}, {"heart", 28, 22, 17, 17, Axis::SI}};
  c.search_radius_px = 6;
  return c;
}

void MotionConfig::validate(int image_width, int image_height) const
{
  if (rois.empty()) {
    throw ConfigError("motion config needs at least one ROI");
  }
  if (search_radius_px < 0) {
    throw ConfigError("search radius must be non-negative");
  }
  for (auto const &r : rois) {
    if (r.width < 2 || r.height < 2) {
      throw ConfigError(fmt::format("ROI '{}' must be at least 2x2", r.name));
    }
    if (r.x - search_radius_px < 0 || r.y - search_radius_px < 0 ||
        r.x + r.width + search_radius_px > image_width || r.y + r.height + search_radius_px > image_height) {
      throw ConfigError(fmt::format("ROI '{}' plus search radius {} leaves the {}x{} image", r.name,
                                    search_radius_px, image_width, image_height));
    }
  }
}

Image crop(Image const &img, Roi const &roi)
{
  Image out(roi.width, roi.height);
  for (int y = 0; y < roi.height; ++y) {
    for (int x = 0; x < roi.width; ++x) {
      out(x, y) = img(roi.x + x, roi.y + y);
    }
  }
  return out;
}

RoiMatch match_roi(Image const &ref, Image const &target, int origin_x, int origin_y, int radius)
{
  if (origin_x - radius < 0 || origin_y - radius < 0 || origin_x + ref.width + radius > target.width ||
      origin_y + ref.height + radius > target.height) {
    throw ConfigError("search window leaves the target image");
  }
  PatchStats const rs = stats(ref);
  if (rs.ss <= 0.0) {
    throw DegeneratePatch("reference patch has zero variance");
  }
  double const n = static_cast<double>(ref.size());

  RoiMatch best;
  bool found = false;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      double sum = 0.0, sum2 = 0.0, cross = 0.0;
      for (int y = 0; y < ref.height; ++y) {
        for (int x = 0; x < ref.width; ++x) {
          double const t = target(origin_x + dx + x, origin_y + dy + y);
          sum += t;
          sum2 += t * t;
          cross += t * (ref(x, y) - rs.mean);
        }
      }
      double const tss = sum2 - sum * sum / n;
      if (tss <= 1e-12 * std::max(1.0, sum2)) {
        continue;
      }
      double const cc = cross / std::sqrt(tss * rs.ss);
      Shift const s{dx, dy};
      if (!found || cc > best.cc + 1e-12 || (std::abs(cc - best.cc) <= 1e-12 && preferred(s, best.shift))) {
        best = {s, cc};
        found = true;
      }
    }
  }
  if (!found) {
    throw DegeneratePatch("every target patch in the search window has zero variance");
  }
  return best;
}

MotionTrace extract_motion_2d(NavImageSeries const &navs, MotionConfig const &config)
{
  if (navs.count() < 2) {
    throw ConfigError("motion extraction needs at least two navigator images");
  }
  auto const &ref = navs.images.front();
  config.validate(ref.width, ref.height);
  std::size_t const rois = config.rois.size();
  std::vector<Image> templates;
  for (auto const &r : config.rois) {
    templates.push_back(crop(ref, r));
  }

  MotionTrace trace;
  trace.config = config;
  trace.raw.assign(navs.count(), std::vector<RoiMatch>(rois, RoiMatch{{0, 0}, 1.0}));
  parallel_for((navs.count() - 1) * rois, [&](std::size_t k) {
    std::size_t const i = 1 + k / rois;
    std::size_t const r = k % rois;
    auto const &roi = config.rois[r];
    trace.raw[i][r] = match_roi(templates[r], navs.images[i], roi.x, roi.y, config.search_radius_px);
  });

  for (std::size_t r = 0; r < rois; ++r) {
    trace.pca.push_back(roi_pca(trace.raw, r));
  }
  trace.roi_for_si = assign_axis(trace.pca, 0);
  trace.roi_for_ap = assign_axis(trace.pca, 1);
  bool const degenerate = trace.roi_for_si < 0 || trace.roi_for_ap < 0;
  std::size_t const rx = degenerate ? 0 : static_cast<std::size_t>(trace.roi_for_si);
  std::size_t const ry = degenerate ? 0 : static_cast<std::size_t>(trace.roi_for_ap);
  for (std::size_t i = 0; i < navs.count(); ++i) {
    trace.si.push_back(trace.raw[i][rx].shift.dx);
    trace.ap.push_back(trace.raw[i][ry].shift.dy);
  }
  if (degenerate) {
    throw DegenerateMotion("no ROI shows shift variance", std::move(trace));
  }
  return trace;
}

Trace1D extract_motion_1d(RawDataset const &raw)
{
  auto const &s = raw.schedule;
  if (s.nav_events.empty()) {
    throw MissingNavData("dataset has no navigation events");
  }
  auto const rows = static_cast<Eigen::Index>(s.nav_events.size());
  auto const cols = static_cast<Eigen::Index>(raw.coils) * raw.nx;
  Eigen::MatrixXd features(rows, cols);
  for (std::size_t e = 0; e < s.nav_events.size(); ++e) {
    auto const &event = s.nav_events[e];
    int center = -1;
    for (int i = event.start_index; i < event.end_index; ++i) {
      auto const &r = s.readouts[static_cast<std::size_t>(i)];
      if (r.ky == 0 && r.kz == 0) {
        center = i;
        break;
      }
    }
    if (center < 0) {
      throw MissingNavData(fmt::format("navigation event {} lacks the ky = kz = 0 line", e));
    }
    for (int c = 0; c < raw.coils; ++c) {
      auto const line = raw.line(static_cast<std::size_t>(center), c);
      auto const profile = ifft1(std::vector<Cx>(line.begin(), line.end()));
      for (int x = 0; x < raw.nx; ++x) {
        features(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(c) * raw.nx + x) =
            std::abs(profile[static_cast<std::size_t>(x)]);
      }
    }
  }

  Eigen::MatrixXd const centered = features.rowwise() - features.colwise().mean();
  Trace1D out;
  out.scores.assign(static_cast<std::size_t>(rows), 0.0);
  double const total = centered.squaredNorm();
  if (total <= 0.0) {
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::VectorXd v = svd.matrixV().col(0);
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  if (v(big) < 0.0) {
    v = -v;
  }
  Eigen::VectorXd const scores = centered * v;
  for (Eigen::Index i = 0; i < rows; ++i) {
    out.scores[static_cast<std::size_t>(i)] = scores(i);
  }
  double const s0 = svd.singularValues()(0);
  out.explained = s0 * s0 / total;
  return out;
}

void to_json(nlohmann::json &j, Roi const &r)
{
  j = {{"name", r.name}, {"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height},
       {"expected_axis", axis_label(r.expected_axis)}};
}

void from_json(nlohmann::json const &j, Roi &r)
{
  r.name = j.value("name", std::string{});
  r.x = j.at("x").get<int>();
  r.y = j.at("y").get<int>();
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  auto const axis = j.value("expected_axis", std::string("none"));
  r.expected_axis = axis == "AP" ? Axis::AP : axis == "SI" ? Axis::SI : Axis::None;
}

void to_json(nlohmann::json &j, MotionConfig const &c)
{
  j = {{"rois", c.rois}, {"search_radius_px", c.search_radius_px}};
}

void from_json(nlohmann::json const &j, MotionConfig &c)
{
  MotionConfig const d = MotionConfig::standard();
  c.rois = j.contains("rois") ? j.at("rois").get<std::vector<Roi>>() : d.rois;
  c.search_radius_px = j.value("search_radius_px", d.search_radius_px);
}

void to_json(nlohmann::json &j, MotionTrace const &t)
{
  nlohmann::json raw = nlohmann::json::array();
  for (auto const &per_nav : t.raw) {
    nlohmann::json row = nlohmann::json::array();
    for (auto const &m : per_nav) {
      row.push_back({{"dx", m.shift.dx}, {"dy", m.shift.dy}, {"cc", m.cc}});
    }
    raw.push_back(std::move(row));
  }
  nlohmann::json pca = nlohmann::json::array();
  for (auto const &p : t.pca) {
    pca.push_back({{"component", p.component},
                   {"explained", p.explained},
                   {"total_variance", p.total_variance},
                   {"degenerate", p.degenerate}});
  }
  j = {{"mode", "2d"},      {"config", t.config},           {"raw", raw},
       {"ap", t.ap},        {"si", t.si},                   {"pca", pca},
       {"roi_for_si", t.roi_for_si}, {"roi_for_ap", t.roi_for_ap}};
}

void from_json(nlohmann::json const &j, MotionTrace &t)
{
  t.config = j.at("config").get<MotionConfig>();
  t.raw.clear();
  for (auto const &row : j.at("raw")) {
    std::vector<RoiMatch> per_nav;
    for (auto const &m : row) {
      per_nav.push_back({{m.at("dx").get<int>(), m.at("dy").get<int>()}, m.at("cc").get<double>()});
    }
    t.raw.push_back(std::move(per_nav));
  }
  t.ap = j.at("ap").get<std::vector<int>>();
  t.si = j.at("si").get<std::vector<int>>();
  t.pca.clear();
  for (auto const &p : j.at("pca")) {
    t.pca.push_back({p.at("component").get<std::array<double, 2>>(), p.at("explained").get<double>(),
                     p.at("total_variance").get<double>(), p.at("degenerate").get<bool>()});
  }
  t.roi_for_si = j.at("roi_for_si").get<int>();
  t.roi_for_ap = j.at("roi_for_ap").get<int>();
}

void to_json(nlohmann::json &j, Trace1D const &t)
{
  j = {{"mode", "1d"}, {"scores", t.scores}, {"explained", t.explained}};
}

void from_json(nlohmann::json const &j, Trace1D &t)
{
  t.scores = j.at("scores").get<std::vector<double>>();
  t.explained = j.value("explained", 0.0);
}

} // namespace respnav
