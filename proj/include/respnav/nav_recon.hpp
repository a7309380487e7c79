#pragma once

#include "respnav/phantom.hpp"
#include "respnav/types.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace respnav {

// Low-resolution navigator images N_1..N_I. Each image is width nx (SI,
// readout) by height ny (AP); only the navigation line's ky rows carry data.
struct NavImageSeries
{
  std::vector<Image> images;
  std::vector<double> times_s;

  std::size_t count() const { return images.size(); }
};

// Per-coil (nx x ny) k-space plane of one navigation event with unsampled
// ky rows zero. Throws MissingNavData when the event is absent or incomplete.
std::vector<CxImage> assemble_nav_kspace(RawDataset const &raw, int nav_id);

// Root of summed squared magnitudes across coils.
Image sos_combine(std::span<CxImage const> coil_images);

// Per event: 2-D inverse DFT (1/N) per coil, then SoS. Parallel over events.
NavImageSeries reconstruct_nav_images(RawDataset const &raw);

// Mean foreground (> 10 % of max) intensity of the noiseless rest-state
// navigator divided by the per-coil, per-component image-domain noise std
// sigma * sqrt(spoke_len * nx) / (nx * ny).
double navigator_snr(PhantomConfig const &phantom, PatternConfig const &pattern);

// 16-bit binary PGM, linear scale with `max_value` mapped to 65535.
void write_pgm16(Image const &img, double max_value, std::filesystem::path const &path);

} // namespace respnav
