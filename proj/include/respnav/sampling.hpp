#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace respnav {

// Continuous Cartesian acquisition: pseudo-spiral spokes on the (ky, kz)
// phase-encode plane with a kz = 0 navigation line interleaved every
// nav_interval_s seconds.
struct PatternConfig
{
  int nx = 64;        // samples per readout line
  int ny = 64;        // phase-encode steps along ky
  int nz = 18;        // phase-encode steps along kz
  int spoke_len = 16; // samples per spoke; also the navigation line length
  double nav_interval_s = 1.0;
  double tr_s = 0.0033;
  double total_dur_s = 120.0;
  double spoke_angle_increment = 2.39996;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
  std::size_t readout_count() const;
};

enum class Role
{
  Imaging,
  Navigation
};

struct PeCoord
{
  int ky = 0;
  int kz = 0;
  friend bool operator==(PeCoord const &, PeCoord const &) = default;
};

struct ReadoutDescriptor
{
  int index = 0;
  double time_s = 0.0;
  int ky = 0;
  int kz = 0;
  Role role = Role::Imaging;
  int nav_id = 0; // most recent navigation event at or before time_s
};

struct NavEvent
{
  int nav_id = 0;
  int start_index = 0;
  int end_index = 0; // exclusive
  double time_s = 0.0;
};

struct SamplingSchedule
{
  PatternConfig config;
  std::vector<ReadoutDescriptor> readouts;
  std::vector<NavEvent> nav_events;
};

// One spoke of spoke_len lattice points starting at the center. Points follow
// the ray r(s) = s (ny/2 - 1) / (spoke_len - 1) at azimuth
// spoke_index * spoke_angle_increment, with kz scaled by (nz/2 - 1)/(ny/2 - 1)
// so the spoke spans an ellipse inscribed in the grid. Rounding is half away
// from zero; a point that collides with an earlier one, or would step back
// towards the center, is advanced along the ray to the next free point.
std::vector<PeCoord> generate_spoke(int spoke_index, PatternConfig const &config);

// Elliptical radius used for the spoke monotonicity property.
double normalized_radius(PeCoord p, PatternConfig const &config);

// Navigation line readouts, ky = -spoke_len/2 .. spoke_len/2 - 1 at kz = 0.
std::vector<PeCoord> navigation_line(PatternConfig const &config);

SamplingSchedule generate_schedule(PatternConfig const &config);

// Assigns nav_id from readout roles, treating each run of consecutive
// navigation readouts as one event, then rebuilds nav_events. For schedules
// assembled by hand.
void index_navigation(SamplingSchedule &schedule);

// Rebuilds nav_events from the navigation readouts' nav_id fields.
void rebuild_nav_events(SamplingSchedule &schedule);

struct PhaseSampling
{
  int phase = 0;
  std::size_t readouts = 0;
  std::size_t distinct = 0;
  double r_factor = 0.0;
};

struct UndersamplingReport
{
  std::vector<PhaseSampling> phases;
};

// Acceleration R = ny * nz / distinct sampled (ky, kz) per cardiac phase.
// phase_of_readout holds one label per readout, negative for dropped readouts.
// When selected is given only those readout indices count. Throws EmptyBin.
UndersamplingReport undersampling_report(SamplingSchedule const &schedule,
                                         std::span<int const> phase_of_readout,
                                         int phases,
                                         std::optional<std::span<std::size_t const>> selected = std::nullopt);

void to_json(nlohmann::json &j, PatternConfig const &c);
void from_json(nlohmann::json const &j, PatternConfig &c);
void to_json(nlohmann::json &j, SamplingSchedule const &s);
void from_json(nlohmann::json const &j, SamplingSchedule &s);
void to_json(nlohmann::json &j, UndersamplingReport const &r);

} // namespace respnav
