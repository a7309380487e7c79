#pragma once

#include "respnav/phantom.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>

namespace respnav {

// RNAV1 container: <prefix>.json sidecar (schedule, phantom config, truth,
// trigger times) plus <prefix>.bin holding little-endian complex64 samples
// in (readout, coil, kx) order. Coil maps are regenerated from the phantom
// config on load.
void write_raw(RawDataset const &raw, std::filesystem::path const &prefix);
RawDataset read_raw(std::filesystem::path const &prefix);

std::filesystem::path raw_sidecar_path(std::filesystem::path const &prefix);
std::filesystem::path raw_blob_path(std::filesystem::path const &prefix);

// Little-endian float32 helpers shared by the binary formats.
void write_f32le(std::ostream &os, std::span<float const> values);
void read_f32le(std::istream &is, std::span<float> values);

} // namespace respnav
