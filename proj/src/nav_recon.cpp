#include "respnav/nav_recon.hpp"

#include "respnav/error.hpp"
#include "respnav/fft.hpp"
#include "respnav/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace respnav {

std::vector<CxImage> assemble_nav_kspace(RawDataset const &raw, int nav_id)
{
  auto const &s = raw.schedule;
  auto const &c = s.config;
  if (nav_id < 0 || static_cast<std::size_t>(nav_id) >= s.nav_events.size()) {
    throw MissingNavData(fmt::format("navigation event {} does not exist", nav_id));
  }
  auto const &event = s.nav_events[static_cast<std::size_t>(nav_id)];
  std::vector<CxImage> planes(static_cast<std::size_t>(raw.coils), CxImage(c.nx, c.ny));
  std::vector<bool> seen(static_cast<std::size_t>(c.ny), false);
  for (int i = event.start_index; i < event.end_index; ++i) {
    auto const &r = s.readouts[static_cast<std::size_t>(i)];
    if (r.role != Role::Navigation || r.kz != 0) {
      throw MissingNavData(fmt::format("readout {} inside navigation event {} is not a kz=0 navigation readout", i,
                                       nav_id));
    }
    int const row = centered_index(r.ky, c.ny);
    seen[static_cast<std::size_t>(row)] = true;
    for (int coil = 0; coil < raw.coils; ++coil) {
      auto const line = raw.line(static_cast<std::size_t>(i), coil);
      auto &plane = planes[static_cast<std::size_t>(coil)];
      for (int x = 0; x < c.nx; ++x) {
        plane(x, row) = Cx(line[static_cast<std::size_t>(x)]);
      }
    }
  }
  for (int ky = -c.spoke_len / 2; ky < c.spoke_len / 2; ++ky) {
    if (!seen[static_cast<std::size_t>(centered_index(ky, c.ny))]) {
      throw MissingNavData(fmt::format("navigation event {} lacks ky = {}", nav_id, ky));
    }
  }
  return planes;
}

Image sos_combine(std::span<CxImage const> coil_images)
{
  if (coil_images.empty()) {
    return {};
  }
  Image out(coil_images.front().width, coil_images.front().height);
  for (auto const &img : coil_images) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.data[i] += std::norm(img.data[i]);
    }
  }
  for (auto &v : out.data) {
    v = std::sqrt(v);
  }
  return out;
}

NavImageSeries reconstruct_nav_images(RawDataset const &raw)
{
  auto const &events = raw.schedule.nav_events;
  if (events.empty()) {
    throw MissingNavData("dataset has no navigation events");
  }
  NavImageSeries series;
  series.images.resize(events.size());
  series.times_s.resize(events.size());
  parallel_for(events.size(), [&](std::size_t i) {
    auto planes = assemble_nav_kspace(raw, static_cast<int>(i));
    for (auto &p : planes) {
      p = ifft2(std::move(p));
    }
    series.images[i] = sos_combine(planes);
    series.times_s[i] = events[i].time_s;
  });
  return series;
}

double navigator_snr(PhantomConfig const &phantom, PatternConfig const &pattern)
{
  if (!(phantom.noise_sigma > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  Volume const vol = render_state(phantom, {});
  auto const maps = coil_maps(phantom);
  std::vector<CxImage> planes;
  for (auto const &map : maps) {
    CxVolume weighted(vol.nx, vol.ny, vol.nz);
    for (std::size_t v = 0; v < vol.size(); ++v) {
      weighted.data[v] = vol.data[v] * map.data[v];
    }
    CxVolume const k = fft3(std::move(weighted));
    CxImage plane(vol.nx, vol.ny);
    int const z = centered_index(0, vol.nz);
    for (int ky = -pattern.spoke_len / 2; ky < pattern.spoke_len / 2; ++ky) {
      int const y = centered_index(ky, vol.ny);
      for (int x = 0; x < vol.nx; ++x) {
        plane(x, y) = k(x, y, z);
      }
    }
    planes.push_back(ifft2(std::move(plane)));
  }
  Image const img = sos_combine(planes);
  double const peak = *std::max_element(img.data.begin(), img.data.end());
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : img.data) {
    if (v > 0.1 * peak) {
      sum += v;
      ++n;
    }
  }
  double const noise = phantom.noise_sigma * std::sqrt(static_cast<double>(pattern.spoke_len) * pattern.nx) /
                       (static_cast<double>(pattern.nx) * pattern.ny);
  return (sum / static_cast<double>(n)) / noise;
}

void write_pgm16(Image const &img, double max_value, std::filesystem::path const &path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw FormatError("cannot write " + path.string());
  }
  os << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  double const scale = max_value > 0.0 ? 65535.0 / max_value : 0.0;
  for (double v : img.data) {
    auto const q = static_cast<std::uint16_t>(std::clamp(std::lround(v * scale), 0l, 65535l));
    char const bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xFF)};
    os.write(bytes, 2);
  }
}

} // namespace respnav
