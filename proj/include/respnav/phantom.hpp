#pragma once

#include "respnav/sampling.hpp"
#include "respnav/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace respnav {

enum class Axis
{
  None,
  AP,
  SI
};

enum class MotionSource
{
  Respiration,
  Cardiac
};

// Solid ellipsoid in voxel coordinates relative to the grid center
// (voxel index i maps to coordinate i - n/2). Order is (x = SI, y = AP, z).
struct Ellipsoid
{
  std::array<double, 3> center{};
  std::array<double, 3> semi_axes{1.0, 1.0, 1.0};
  double intensity = 1.0;
};

// A rigid group of ellipsoids. Components with a motion axis translate by the
// respiration shift along it; Cardiac components additionally pulsate, their
// semi-axes scaled by 1 + pulsation_frac * c(cardiac phase).
struct MotionComponent
{
  std::string name;
  std::vector<Ellipsoid> shape;
  Axis motion_axis = Axis::None;
  MotionSource motion_source = MotionSource::Respiration;
  double pulsation_frac = 0.0;
};

struct PhantomConfig
{
  std::array<int, 3> grid{64, 64, 18}; // (nx, ny, nz)
  double voxel_mm = 4.8;
  std::vector<MotionComponent> components;
  int coils = 4;
  double coil_width_frac = 2.0; // Gaussian coil profile width as a fraction of nx
  double noise_sigma = 0.0;     // per real and imaginary component
  double resp_period_s = 4.3;
  double resp_amp_ap_px = 2.0;
  double resp_amp_si_px = 1.0;
  double resp_drift = 0.0; // relative amplitude modulation depth
  double cardiac_period_s = 0.85;
  int cardiac_frames = 20; // cardiac phase quantization used for rendering
  std::uint64_t seed = 1;

  // Bright chest wall (AP), heart and liver (SI, heart pulsating), dim static
  // spine and torso on a 64 x 64 x 18 grid.
  static PhantomConfig standard();

  // Throws ConfigError.
  void validate() const;
};

struct MotionState
{
  int ap = 0;
  int si = 0;
  double cardiac_phase = 0.0; // fraction of the RR interval in [0, 1)
  friend bool operator==(MotionState const &, MotionState const &) = default;
};

// Respiration waveform: sin(2 pi phase). Shifts are round(amp * w).
double respiration_waveform(double resp_phase);
// Cardiac waveform: raised cosine, 0 at phase 0, 1 at mid cycle.
double cardiac_waveform(double cardiac_phase);

MotionState motion_at(PhantomConfig const &phantom, double resp_phase, double cardiac_phase);
// Respiration shift at absolute time t, including drift modulation.
MotionState respiration_at_time(PhantomConfig const &phantom, double t);

Volume render_state(PhantomConfig const &phantom, MotionState const &state);
Volume render_volume(PhantomConfig const &phantom, double resp_phase, double cardiac_phase);

// Smooth complex Gaussian sensitivities centered at equally spaced angles
// on a ring in the (x, y) plane.
std::vector<CxVolume> coil_maps(PhantomConfig const &phantom);

struct GroundTruth
{
  std::vector<int> nav_ap; // per navigation event
  std::vector<int> nav_si;
  std::vector<double> cardiac_phase; // per readout
};

struct RawDataset
{
  SamplingSchedule schedule;
  PhantomConfig phantom;
  int coils = 0;
  int nx = 0;
  std::vector<Cxf> samples; // readout-major, then coil, then kx
  std::vector<CxVolume> coil_maps;
  std::vector<double> trigger_times_s;
  GroundTruth truth;

  std::span<Cxf const> line(std::size_t readout, int coil) const
  {
    return {samples.data() + (readout * static_cast<std::size_t>(coils) + static_cast<std::size_t>(coil)) * nx,
            static_cast<std::size_t>(nx)};
  }
  std::span<Cxf> line(std::size_t readout, int coil)
  {
    return {samples.data() + (readout * static_cast<std::size_t>(coils) + static_cast<std::size_t>(coil)) * nx,
            static_cast<std::size_t>(nx)};
  }
};

std::vector<double> trigger_times(PhantomConfig const &phantom, double total_dur_s);
GroundTruth ground_truth(PhantomConfig const &phantom, SamplingSchedule const &schedule);

// Forward model: per readout render the held motion state, weight by each
// coil map, 3-D DFT, take the kx line at (ky, kz), add complex Gaussian noise.
// Throws ConfigMismatch when the grid does not match the schedule.
RawDataset simulate_acquisition(PhantomConfig const &phantom, SamplingSchedule const &schedule);

void to_json(nlohmann::json &j, PhantomConfig const &c);
void from_json(nlohmann::json const &j, PhantomConfig &c);
void to_json(nlohmann::json &j, GroundTruth const &t);
void from_json(nlohmann::json const &j, GroundTruth &t);

} // namespace respnav
