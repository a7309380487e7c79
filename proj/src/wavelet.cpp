#include "respnav/wavelet.hpp"

#include "respnav/error.hpp"

#include <array>
#include <stdexcept>

namespace respnav {

namespace {

// Decomposition low-pass filters, db1..db8.
std::array<std::vector<double>, 8> const kDaubechiesLo = {{
    {0.7071067811865476, 0.7071067811865476},
    {-0.12940952255126037, 0.2241438680420134, 0.8365163037378079, 0.48296291314453416},
    {0.03522629188570953, -0.08544127388202666, -0.13501102001025458, 0.45987750211849154, 0.8068915093110925, 0.33267055295008263},
    {-0.010597401785069032, 0.0328830116668852, 0.030841381835560764, -0.18703481171909309, -0.027983769416859854, 0.6308807679298589, 0.7148465705529157, 0.2303778133088965},
    {0.0033357252854737712, -0.012580751999081999, -0.006241490212798274, 0.07757149384004572, -0.032244869584638375, -0.24229488706638203, 0.13842814590132074, 0.7243085284377729, 0.6038292697971896, 0.16010239797419293},
    {-0.0010773010853084796, 0.004777257510945511, 0.0005538422011614961, -0.03158203931748603, 0.027522865530305727, 0.09750160558732304, -0.12976686756726194, -0.22626469396543983, 0.31525035170919763, 0.7511339080210954, 0.49462389039845306, 0.11154074335010947},
    {0.00035371379997452024, -0.0018016407040474908, 0.0004295779729213665, 0.01255099855609984, -0.01657454163066688, -0.03802993693501441, 0.08061260915108308, 0.07130921926683026, -0.22403618499387498, -0.14390600392856498, 0.4697822874051931, 0.7291320908462351, 0.3965393194819173, 0.07785205408500918},
    {-0.00011747678412476953, 0.0006754494064505693, -0.00039174037337694705, -0.004870352993451574, 0.008746094047405777, 0.013981027917398282, -0.044088253930794755, -0.017369301001807547, 0.12874742662047847, 0.0004724845739132828, -0.2840155429615469, -0.015829105256349306, 0.5853546836542067, 0.6756307362972898, 0.31287159091429995, 0.05441584224310401},
}};

std::size_t wrap(long i, std::size_t n)
{
  long const m = static_cast<long>(n);
  while (i < 0) {
    i += m;
  }
  while (i >= m) {
    i -= m;
  }
  return static_cast<std::size_t>(i);
}

template <typename T>
void transform_rows(Image2<T> &img, int w, int h, Wavelet const &wl, bool forward)
{
  std::vector<T> in(static_cast<std::size_t>(w)), out(static_cast<std::size_t>(w));
  std::size_t const half = static_cast<std::size_t>(w / 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      in[static_cast<std::size_t>(x)] = img(x, y);
    }
    std::span<T const> src(in);
    std::span<T> dst(out);
    if (forward) {
      dwt1<T>(src, dst.first(half), dst.subspan(half), wl);
    } else {
      idwt1<T>(src.first(half), src.subspan(half), dst, wl);
    }
    for (int x = 0; x < w; ++x) {
      img(x, y) = out[static_cast<std::size_t>(x)];
    }
  }
}

template <typename T>
void transform_cols(Image2<T> &img, int w, int h, Wavelet const &wl, bool forward)
{
  std::vector<T> in(static_cast<std::size_t>(h)), out(static_cast<std::size_t>(h));
  std::size_t const half = static_cast<std::size_t>(h / 2);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      in[static_cast<std::size_t>(y)] = img(x, y);
    }
    std::span<T const> src(in);
    std::span<T> dst(out);
    if (forward) {
      dwt1<T>(src, dst.first(half), dst.subspan(half), wl);
    } else {
      idwt1<T>(src.first(half), src.subspan(half), dst, wl);
    }
    for (int y = 0; y < h; ++y) {
      img(x, y) = out[static_cast<std::size_t>(y)];
    }
  }
}

} // namespace

Wavelet Wavelet::daubechies(int vanishing_moments)
{
  if (vanishing_moments < 1 || vanishing_moments > 8) {
    throw std::invalid_argument("daubechies: vanishing moments must be in 1..8");
  }
  Wavelet w;
  w.lo = kDaubechiesLo[static_cast<std::size_t>(vanishing_moments - 1)];
  std::size_t const L = w.lo.size();
  w.hi.resize(L);
  for (std::size_t k = 0; k < L; ++k) {
    w.hi[k] = (k % 2 == 0 ? -1.0 : 1.0) * w.lo[L - 1 - k];
  }
  return w;
}

template <typename T>
void dwt1(std::span<T const> x, std::span<T> approx, std::span<T> detail, Wavelet const &w)
{
  std::size_t const n = x.size();
  std::size_t const L = w.lo.size();
  long const off = static_cast<long>(L / 2);
  // ext[j] holds x at periodic index j - L.
  thread_local std::vector<T> ext;
  ext.resize(n + 2 * L);
  for (std::size_t j = 0; j < ext.size(); ++j) {
    ext[j] = x[wrap(static_cast<long>(j) - static_cast<long>(L), n)];
  }
  double const *lo = w.lo.data();
  double const *hi = w.hi.data();
  for (std::size_t i = 0; i < n / 2; ++i) {
    T const *base = ext.data() + (2 * static_cast<long>(i) + off + static_cast<long>(L));
    T a{}, d{};
    for (std::size_t k = 0; k < L; ++k) {
      T const v = *(base - static_cast<long>(k));
      a += lo[k] * v;
      d += hi[k] * v;
    }
    approx[i] = a;
    detail[i] = d;
  }
}

template <typename T>
void idwt1(std::span<T const> approx, std::span<T const> detail, std::span<T> x, Wavelet const &w)
{
  std::size_t const n = x.size();
  std::size_t const L = w.lo.size();
  long const off = static_cast<long>(L / 2);
  thread_local std::vector<T> ext;
  ext.assign(n + 2 * L, T{});
  double const *lo = w.lo.data();
  double const *hi = w.hi.data();
  for (std::size_t i = 0; i < n / 2; ++i) {
    T *base = ext.data() + (2 * static_cast<long>(i) + off + static_cast<long>(L));
    T const a = approx[i];
    T const d = detail[i];
    for (std::size_t k = 0; k < L; ++k) {
      *(base - static_cast<long>(k)) += lo[k] * a + hi[k] * d;
    }
  }
  std::fill(x.begin(), x.end(), T{});
  for (std::size_t j = 0; j < ext.size(); ++j) {
    x[wrap(static_cast<long>(j) - static_cast<long>(L), n)] += ext[j];
  }
}

int usable_levels(int width, int height, int requested)
{
  int levels = 0;
  while (levels < requested && width % 2 == 0 && height % 2 == 0 && width >= 2 && height >= 2) {
    width /= 2;
    height /= 2;
    ++levels;
  }
  return levels;
}

template <typename T>
void dwt2(Image2<T> &img, Wavelet const &w, int levels)
{
  int width = img.width;
  int height = img.height;
  for (int l = 0; l < levels; ++l) {
    if (width % 2 != 0 || height % 2 != 0) {
      throw std::invalid_argument("dwt2: odd extent at requested level");
    }
    transform_rows(img, width, height, w, true);
    transform_cols(img, width, height, w, true);
    width /= 2;
    height /= 2;
  }
}

template <typename T>
void idwt2(Image2<T> &img, Wavelet const &w, int levels)
{
  for (int l = levels - 1; l >= 0; --l) {
    int const width = img.width >> l;
    int const height = img.height >> l;
    transform_cols(img, width, height, w, false);
    transform_rows(img, width, height, w, false);
  }
}

Image diagonal_detail(Image const &img, Wavelet const &w)
{
  Image work = img;
  dwt2(work, w, 1);
  int const hw = img.width / 2;
  int const hh = img.height / 2;
  Image out(hw, hh);
  for (int y = 0; y < hh; ++y) {
    for (int x = 0; x < hw; ++x) {
      out(x, y) = work(x + hw, y + hh);
    }
  }
  return out;
}

template void dwt1<double>(std::span<double const>, std::span<double>, std::span<double>, Wavelet const &);
template void dwt1<Cx>(std::span<Cx const>, std::span<Cx>, std::span<Cx>, Wavelet const &);
template void idwt1<double>(std::span<double const>, std::span<double const>, std::span<double>, Wavelet const &);
template void idwt1<Cx>(std::span<Cx const>, std::span<Cx const>, std::span<Cx>, Wavelet const &);
template void dwt2<double>(Image2<double> &, Wavelet const &, int);
template void dwt2<Cx>(Image2<Cx> &, Wavelet const &, int);
template void idwt2<double>(Image2<double> &, Wavelet const &, int);
template void idwt2<Cx>(Image2<Cx> &, Wavelet const &, int);

} // namespace respnav
