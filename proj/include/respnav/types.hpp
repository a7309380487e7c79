#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace respnav {

using Cx = std::complex<double>;
using Cxf = std::complex<float>;

// Dense 3-D array, x fastest: index = (z * ny + y) * nx + x.
// Axis convention throughout: x = readout (SI), y = first phase encode (AP),
// z = second phase encode (partitions / slices).
template <typename T>
struct Array3
{
  int nx = 0;
  int ny = 0;
  int nz = 0;
  std::vector<T> data;

  Array3() = default;
  Array3(int x, int y, int z, T fill = T{})
      : nx(x), ny(y), nz(z), data(static_cast<std::size_t>(x) * y * z, fill)
  {
  }

  std::size_t size() const { return data.size(); }
  std::size_t index(int x, int y, int z) const
  {
    return (static_cast<std::size_t>(z) * ny + y) * nx + x;
  }
  T &operator()(int x, int y, int z) { return data[index(x, y, z)]; }
  T const &operator()(int x, int y, int z) const { return data[index(x, y, z)]; }
  bool same_shape(Array3 const &o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
};

// Dense 2-D image, row-major: index = y * width + x.
template <typename T>
struct Image2
{
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image2() = default;
  Image2(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill)
  {
  }

  std::size_t size() const { return data.size(); }
  T &operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  T const &operator()(int x, int y) const
  {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

using Volume = Array3<double>;
using CxVolume = Array3<Cx>;
using Image = Image2<double>;
using CxImage = Image2<Cx>;

// Map a signed centered k-space / image coordinate onto an array index.
inline int centered_index(int k, int n) { return k + n / 2; }

// Slice z of a volume as a 2-D image (width nx, height ny).
template <typename T>
Image2<T> slice_z(Array3<T> const &v, int z)
{
  Image2<T> out(v.nx, v.ny);
  auto const offset = v.index(0, 0, z);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = v.data[offset + i];
  }
  return out;
}

} // namespace respnav
