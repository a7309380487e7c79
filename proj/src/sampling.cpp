#include "respnav/sampling.hpp"

#include "respnav/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace respnav {

namespace {

int clamp_to_grid(long v, int n) { return static_cast<int>(std::clamp<long>(v, -n / 2, n / 2 - 1)); }

PeCoord lattice_point(double r, double theta, PatternConfig const &c)
{
  double const kz_scale = (c.nz / 2.0 - 1.0) / (c.ny / 2.0 - 1.0);
  double const ky = r * std::cos(theta);
  double const kz = r * std::sin(theta) * kz_scale;
  return {clamp_to_grid(std::lround(ky), c.ny), clamp_to_grid(std::lround(kz), c.nz)};
}

long key_of(PeCoord p, PatternConfig const &c)
{
  return static_cast<long>(p.kz + c.nz / 2) * c.ny + (p.ky + c.ny / 2);
}

} // namespace

void PatternConfig::validate() const
{
  auto const even_at_least_8 = [](int v) { return v >= 8 && v % 2 == 0; };
  if (!even_at_least_8(nx) || !even_at_least_8(ny) || !even_at_least_8(nz) || !even_at_least_8(spoke_len)) {
    throw ConfigError(fmt::format("nx, ny, nz, spoke_len must be even and >= 8 (got {}, {}, {}, {})", nx,
                                  ny, nz, spoke_len));
  }
  if (spoke_len > ny) {
    throw ConfigError(fmt::format("spoke_len {} exceeds ny {}", spoke_len, ny));
  }
  if (!(tr_s > 0.0) || !(total_dur_s > 0.0) || !(nav_interval_s > 0.0)) {
    throw ConfigError("tr_s, total_dur_s and nav_interval_s must be positive");
  }
  if (nav_interval_s < spoke_len * tr_s) {
    throw ConfigError(fmt::format("nav_interval_s {} shorter than one navigation line ({} s)", nav_interval_s,
                                  spoke_len * tr_s));
  }
  if (!std::isfinite(spoke_angle_increment)) {
    throw ConfigError("spoke_angle_increment must be finite");
  }
  if (readout_count() < static_cast<std::size_t>(spoke_len)) {
    throw ConfigError("total_dur_s too short to hold one navigation line");
  }
}

std::size_t PatternConfig::readout_count() const
{
  return static_cast<std::size_t>(std::floor(total_dur_s / tr_s + 1e-9));
}

double normalized_radius(PeCoord p, PatternConfig const &c)
{
  double const y = p.ky / (c.ny / 2.0 - 1.0);
  double const z = p.kz / (c.nz / 2.0 - 1.0);
  return std::hypot(y, z);
}

std::vector<PeCoord> generate_spoke(int spoke_index, PatternConfig const &c)
{
  double const theta = spoke_index * c.spoke_angle_increment;
  double const spacing = (c.ny / 2.0 - 1.0) / (c.spoke_len - 1.0);
  double const advance = 0.25;

  std::vector<PeCoord> spoke;
  spoke.reserve(static_cast<std::size_t>(c.spoke_len));
  std::set<long> used;
  double last_radius = 0.0;
  double r_prev = 0.0;

  auto const acceptable = [&](PeCoord p) {
    return !used.contains(key_of(p, c)) && normalized_radius(p, c) >= last_radius - 1e-12;
  };

  for (int s = 0; s < c.spoke_len; ++s) {
    double r = std::max(s * spacing, r_prev);
    PeCoord p = lattice_point(r, theta, c);
    double const r_limit = c.ny + c.nz;
    while (!acceptable(p) && r < r_limit) {
      r += advance;
      p = lattice_point(r, theta, c);
    }
    if (!acceptable(p)) {
      // Ray exhausted at the grid edge: take the free point nearest the ideal
      // position, preferring points that keep the radius non-decreasing. When
      // spoke_len is too long for the ray no such point exists and only
      // distinctness is kept.
      PeCoord const ideal = lattice_point(s * spacing, theta, c);
      double best = std::numeric_limits<double>::infinity();
      bool best_monotone = false;
      for (int kz = -c.nz / 2; kz < c.nz / 2; ++kz) {
        for (int ky = -c.ny / 2; ky < c.ny / 2; ++ky) {
          PeCoord const q{ky, kz};
          if (used.contains(key_of(q, c))) {
            continue;
          }
          bool const monotone = acceptable(q);
          double const d = std::hypot(ky - ideal.ky, kz - ideal.kz);
          if ((monotone && !best_monotone) || (monotone == best_monotone && d < best)) {
            best = d;
            best_monotone = monotone;
            p = q;
          }
        }
      }
    }
    used.insert(key_of(p, c));
    last_radius = normalized_radius(p, c);
    r_prev = r;
    spoke.push_back(p);
  }
  return spoke;
}

std::vector<PeCoord> navigation_line(PatternConfig const &c)
{
  std::vector<PeCoord> line;
  for (int ky = -c.spoke_len / 2; ky < c.spoke_len / 2; ++ky) {
    line.push_back({ky, 0});
  }
  return line;
}

SamplingSchedule generate_schedule(PatternConfig const &c)
{
  c.validate();
  SamplingSchedule schedule;
  schedule.config = c;
  std::size_t const total = c.readout_count();
  std::size_t const u = static_cast<std::size_t>(c.spoke_len);
  schedule.readouts.reserve(total);

  int nav_id = -1;
  auto const emit = [&](PeCoord p, Role role) {
    ReadoutDescriptor r;
    r.nav_id = nav_id;
    r.index = static_cast<int>(schedule.readouts.size());
    r.time_s = r.index * c.tr_s;
    r.ky = p.ky;
    r.kz = p.kz;
    r.role = role;
    schedule.readouts.push_back(r);
  };

  auto const nav_line = navigation_line(c);
  long next_nav = 0;
  int spoke_index = 0;
  while (schedule.readouts.size() < total) {
    double const now = static_cast<double>(schedule.readouts.size()) * c.tr_s;
    bool const nav_due = now >= next_nav * c.nav_interval_s - 1e-9;
    if (nav_due && schedule.readouts.size() + u <= total) {
      ++nav_id;
      for (auto const &p : nav_line) {
        emit(p, Role::Navigation);
      }
      ++next_nav;
      continue;
    }
    for (auto const &p : generate_spoke(spoke_index++, c)) {
      if (schedule.readouts.size() >= total) {
        break;
      }
      emit(p, Role::Imaging);
    }
  }
  rebuild_nav_events(schedule);
  return schedule;
}

void rebuild_nav_events(SamplingSchedule &schedule)
{
  schedule.nav_events.clear();
  for (auto const &r : schedule.readouts) {
    if (r.role != Role::Navigation) {
      continue;
    }
    if (schedule.nav_events.empty() || schedule.nav_events.back().nav_id != r.nav_id) {
      if (r.nav_id != static_cast<int>(schedule.nav_events.size())) {
        throw FormatError(fmt::format("navigation readout {} has out-of-order nav_id {}", r.index, r.nav_id));
      }
      schedule.nav_events.push_back({r.nav_id, r.index, r.index + 1, r.time_s});
    } else {
      schedule.nav_events.back().end_index = r.index + 1;
    }
  }
}

void index_navigation(SamplingSchedule &schedule)
{
  int current = -1;
  bool in_nav = false;
  for (auto &r : schedule.readouts) {
    bool const nav = r.role == Role::Navigation;
    if (nav && !in_nav) {
      ++current;
    }
    in_nav = nav;
    r.nav_id = std::max(current, 0);
  }
  rebuild_nav_events(schedule);
}

UndersamplingReport undersampling_report(SamplingSchedule const &schedule,
                                         std::span<int const> phase_of_readout,
                                         int phases,
                                         std::optional<std::span<std::size_t const>> selected)
{
  auto const &c = schedule.config;
  if (phase_of_readout.size() != schedule.readouts.size()) {
    throw ConfigMismatch("phase labels do not match readout count");
  }
  std::vector<std::set<long>> distinct(static_cast<std::size_t>(phases));
  std::vector<std::size_t> counts(static_cast<std::size_t>(phases), 0);
  auto const add = [&](std::size_t i) {
    int const p = phase_of_readout[i];
    if (p < 0 || p >= phases) {
      return;
    }
    auto const &r = schedule.readouts[i];
    distinct[static_cast<std::size_t>(p)].insert(key_of({r.ky, r.kz}, c));
    ++counts[static_cast<std::size_t>(p)];
  };
  if (selected) {
    for (auto i : *selected) {
      add(i);
    }
  } else {
    for (std::size_t i = 0; i < schedule.readouts.size(); ++i) {
      add(i);
    }
  }

  UndersamplingReport report;
  double const grid = static_cast<double>(c.ny) * c.nz;
  for (int p = 0; p < phases; ++p) {
    auto const n = distinct[static_cast<std::size_t>(p)].size();
    if (n == 0) {
      throw EmptyBin(fmt::format("cardiac phase {} has no readouts", p));
    }
    report.phases.push_back({p, counts[static_cast<std::size_t>(p)], n, grid / static_cast<double>(n)});
  }
  return report;
}

void to_json(nlohmann::json &j, PatternConfig const &c)
{
  j = {{"nx", c.nx},
       {"ny", c.ny},
       {"nz", c.nz},
       {"spoke_len", c.spoke_len},
       {"nav_interval_s", c.nav_interval_s},
       {"tr_s", c.tr_s},
       {"total_dur_s", c.total_dur_s},
       {"spoke_angle_increment", c.spoke_angle_increment},
       {"seed", c.seed}};
}

void from_json(nlohmann::json const &j, PatternConfig &c)
{
  PatternConfig d;
  c.nx = j.value("nx", d.nx);
  c.ny = j.value("ny", d.ny);
  c.nz = j.value("nz", d.nz);
  c.spoke_len = j.value("spoke_len", d.spoke_len);
  c.nav_interval_s = j.value("nav_interval_s", d.nav_interval_s);
  c.tr_s = j.value("tr_s", d.tr_s);
  c.total_dur_s = j.value("total_dur_s", d.total_dur_s);
  c.spoke_angle_increment = j.value("spoke_angle_increment", d.spoke_angle_increment);
  c.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json &j, SamplingSchedule const &s)
{
  nlohmann::json readouts = nlohmann::json::array();
  for (auto const &r : s.readouts) {
    readouts.push_back({{"index", r.index},
                        {"time_s", r.time_s},
                        {"ky", r.ky},
                        {"kz", r.kz},
                        {"role", r.role == Role::Navigation ? "navigation" : "imaging"},
                        {"nav_id", r.nav_id}});
  }
  j = {{"config", s.config}, {"readouts", std::move(readouts)}};
}

void from_json(nlohmann::json const &j, SamplingSchedule &s)
{
  s.config = j.at("config").get<PatternConfig>();
  s.readouts.clear();
  for (auto const &o : j.at("readouts")) {
    ReadoutDescriptor r;
    r.index = o.at("index").get<int>();
    r.time_s = o.at("time_s").get<double>();
    r.ky = o.at("ky").get<int>();
    r.kz = o.at("kz").get<int>();
    auto const role = o.at("role").get<std::string>();
    if (role != "navigation" && role != "imaging") {
      throw FormatError("unknown readout role '" + role + "'");
    }
    r.role = role == "navigation" ? Role::Navigation : Role::Imaging;
    r.nav_id = o.at("nav_id").get<int>();
    s.readouts.push_back(r);
  }
  rebuild_nav_events(s);
}

void to_json(nlohmann::json &j, UndersamplingReport const &r)
{
  j = nlohmann::json::array();
  for (auto const &p : r.phases) {
    j.push_back({{"phase", p.phase}, {"readouts", p.readouts}, {"distinct", p.distinct}, {"r_factor", p.r_factor}});
  }
}

} // namespace respnav
