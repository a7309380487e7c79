#pragma once

#include "respnav/binning.hpp"
#include "respnav/phantom.hpp"
#include "respnav/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace respnav {

enum class ReconMode
{
  ZeroFilled,
  CsWavelet
};

struct ReconParams
{
  int iterations = 30;
  double lambda_frac = 0.01;    // lambda = lambda_frac * max |W x0| when lambda is unset
  std::optional<double> lambda; // absolute override
  int wavelet_moments = 4;      // db4
  int levels = 3;               // reduced automatically for small or odd slices
  int temporal_levels = 0;      // > 0: joint recon with a wavelet along the cardiac-phase axis
};

// Gridded k-space of one cardiac phase. Cells hold the mean of all samples
// that landed there; `mask` marks sampled (ky, kz) cells, index kz * ny + ky.
struct PhaseKspace
{
  std::vector<CxVolume> coils;
  std::vector<std::uint8_t> mask;
  std::size_t samples = 0;

  double occupancy() const;
};

struct GriddedKspace
{
  std::vector<PhaseKspace> phases;
};

// Accumulates raw samples of the given readouts into their (kx, ky, kz)
// cells per phase and coil. phase_of_readout is parallel to readouts; negative
// entries are skipped. Throws EmptyPhase.
PhaseKspace grid_phase(RawDataset const &raw, std::span<std::size_t const> readouts,
                       std::span<int const> phase_of_readout, int phase);
GriddedKspace grid_adjoint(RawDataset const &raw, std::span<std::size_t const> readouts,
                           std::span<int const> phase_of_readout, int phases);

struct IterationLog
{
  double lambda = 0.0;
  std::vector<double> objective; // after each iteration
  bool non_convergence = false;  // objective rose by more than 1e-6 relative
};

// Orthonormal-FT model: minimizes 0.5 ||M F x - y||^2 + lambda ||W x||_1 by
// proximal gradient with unit step, W the per-slice 2-D Daubechies transform.
// `kspace` uses the unnormalized forward convention of the simulator.
CxVolume cs_wavelet(CxVolume const &kspace, std::span<std::uint8_t const> mask, ReconParams const &params,
                    IterationLog &log);

// Same model over a whole cardiac cycle of one coil: W is the per-slice 2-D
// transform followed by a periodic transform along the phase axis with
// params.temporal_levels levels (reduced while the phase count stays even).
std::vector<CxVolume> cs_wavelet_temporal(std::span<CxVolume const> kspace,
                                          std::span<std::vector<std::uint8_t> const> masks,
                                          ReconParams const &params, IterationLog &log);

// Inverse DFT (1/N) of each coil's gridded k-space.
CxVolume zero_filled(CxVolume const &kspace);

struct VolumeSeries
{
  std::vector<Volume> volumes; // one magnitude volume per cardiac phase
  ReconMode mode = ReconMode::ZeroFilled;
  nlohmann::json meta;
};

// Coil-by-coil reconstruction of every cardiac phase of the selection,
// combined by SoS. Throws EmptyPhase.
VolumeSeries reconstruct(RawDataset const &raw, BinSelection const &bins, ReconMode mode,
                         ReconParams const &params = {});

// RNAVVOL: one line of compact JSON header, '\n', then little-endian float32
// voxels, phase-major, x fastest.
void write_volumes(VolumeSeries const &series, std::filesystem::path const &path);
VolumeSeries read_volumes(std::filesystem::path const &path);

void to_json(nlohmann::json &j, ReconParams const &p);
void from_json(nlohmann::json const &j, ReconParams &p);

} // namespace respnav
