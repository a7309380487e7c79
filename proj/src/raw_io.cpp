#include "respnav/raw_io.hpp"

#include "respnav/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace respnav {

namespace {

std::uint32_t to_le(std::uint32_t v)
{
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

std::filesystem::path with_suffix(std::filesystem::path const &prefix, char const *suffix)
{
  auto p = prefix;
  p += suffix;
  return p;
}

} // namespace

std::filesystem::path raw_sidecar_path(std::filesystem::path const &prefix) { return with_suffix(prefix, ".json"); }
std::filesystem::path raw_blob_path(std::filesystem::path const &prefix) { return with_suffix(prefix, ".bin"); }

void write_f32le(std::ostream &os, std::span<float const> values)
{
  std::vector<std::uint32_t> words(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    words[i] = to_le(std::bit_cast<std::uint32_t>(values[i]));
  }
  os.write(reinterpret_cast<char const *>(words.data()), static_cast<std::streamsize>(words.size() * 4));
}

void read_f32le(std::istream &is, std::span<float> values)
{
  std::vector<std::uint32_t> words(values.size());
  is.read(reinterpret_cast<char *>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (static_cast<std::size_t>(is.gcount()) != words.size() * 4) {
    throw FormatError("truncated binary payload");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(to_le(words[i]));
  }
}

void write_raw(RawDataset const &raw, std::filesystem::path const &prefix)
{
  nlohmann::json side = {{"format", "RNAV1"},
                         {"coils", raw.coils},
                         {"nx", raw.nx},
                         {"sample_count", raw.samples.size()},
                         {"blob", raw_blob_path(prefix).filename().string()},
                         {"schedule", raw.schedule},
                         {"phantom", raw.phantom},
                         {"truth", raw.truth},
                         {"trigger_times_s", raw.trigger_times_s}};
  {
    std::ofstream os(raw_sidecar_path(prefix));
    if (!os) {
      throw FormatError("cannot write " + raw_sidecar_path(prefix).string());
    }
    os << side.dump(1) << '\n';
  }
  std::ofstream bin(raw_blob_path(prefix), std::ios::binary);
  if (!bin) {
    throw FormatError("cannot write " + raw_blob_path(prefix).string());
  }
  static_assert(sizeof(Cxf) == 2 * sizeof(float));
  write_f32le(bin, {reinterpret_cast<float const *>(raw.samples.data()), raw.samples.size() * 2});
}

RawDataset read_raw(std::filesystem::path const &prefix)
{
  std::ifstream is(raw_sidecar_path(prefix));
  if (!is) {
    throw FormatError("cannot open " + raw_sidecar_path(prefix).string());
  }
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(is);
  } catch (nlohmann::json::exception const &e) {
    throw FormatError(std::string("RNAV1 sidecar: ") + e.what());
  }
  if (side.value("format", std::string{}) != "RNAV1") {
    throw FormatError("not an RNAV1 sidecar: " + raw_sidecar_path(prefix).string());
  }

  RawDataset raw;
  try {
    raw.coils = side.at("coils").get<int>();
    raw.nx = side.at("nx").get<int>();
    raw.schedule = side.at("schedule").get<SamplingSchedule>();
    raw.phantom = side.at("phantom").get<PhantomConfig>();
    raw.truth = side.at("truth").get<GroundTruth>();
    raw.trigger_times_s = side.at("trigger_times_s").get<std::vector<double>>();
  } catch (nlohmann::json::exception const &e) {
    throw FormatError(std::string("RNAV1 sidecar: ") + e.what());
  }
  auto const expected = raw.schedule.readouts.size() * static_cast<std::size_t>(raw.coils) * raw.nx;
  if (side.at("sample_count").get<std::size_t>() != expected) {
    throw FormatError("RNAV1 sample_count does not match schedule x coils x nx");
  }
  raw.samples.resize(expected);
  auto const blob = prefix.parent_path() / side.at("blob").get<std::string>();
  std::ifstream bin(blob, std::ios::binary);
  if (!bin) {
    throw FormatError("cannot open " + blob.string());
  }
  read_f32le(bin, {reinterpret_cast<float *>(raw.samples.data()), raw.samples.size() * 2});
  raw.coil_maps = coil_maps(raw.phantom);
  return raw;
}

} // namespace respnav
