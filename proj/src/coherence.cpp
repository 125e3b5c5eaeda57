#include "wavescat/coherence.hpp"

#include "wavescat/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace wavescat {

namespace {

void check_axes(const Scalogram &cx, const Scalogram &cy) {
  if (!(cx.axes == cy.axes) || cx.coefficients.rows() != cy.coefficients.rows() ||
      cx.coefficients.cols() != cy.coefficients.cols())
    throw DataError("coherence: scalograms do not share axes");
}

// Window [i - back, i + fwd] with back = floor((w-1)/2), fwd = w-1-back.
std::size_t back_extent(std::size_t w) { return (w - 1) / 2; }

template <typename T> void boxcar_circular(std::span<const T> in, std::span<T> out, std::size_t w) {
  const std::size_t n = in.size();
  if (w == 1) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  if (w >= n) {
    T sum{};
    for (const T &v : in)
      sum += v;
    std::fill(out.begin(), out.end(), sum / static_cast<double>(n));
    return;
  }
  const std::size_t back = back_extent(w), fwd = w - 1 - back;
  T sum{};
  for (std::size_t d = 0; d < w; ++d)
    sum += in[(n - back + d) % n];
  const double inv = 1.0 / static_cast<double>(w);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = sum * inv;
    sum += in[(i + fwd + 1) % n];
    sum -= in[(i + n - back) % n];
  }
}

} // namespace

SmoothingKernel SmoothingKernel::from_spec(const SmoothingSpec &spec,
                                           const TimeFrequencyAxes &axes) {
  if (!(spec.timeCycles >= 0.0) || !(spec.scaleOctaves >= 0.0))
    throw ConfigError("smoothing: widths must be non-negative");
  SmoothingKernel k;
  k.timeWidths.resize(axes.scales());
  for (std::size_t j = 0; j < axes.scales(); ++j) {
    const auto w = std::llround(spec.timeCycles * axes.fs / axes.frequencies[j]);
    k.timeWidths[j] = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(w, 1LL)), 1,
                                              axes.n);
  }
  const auto sw = std::llround(spec.scaleOctaves * axes.voicesPerOctave);
  k.scaleWidth = static_cast<std::size_t>(std::max(sw, 1LL));
  return k;
}

SmoothingKernel SmoothingKernel::uniform(std::size_t timeWidth, std::size_t scaleWidth,
                                         const TimeFrequencyAxes &axes) {
  if (timeWidth < 1 || scaleWidth < 1)
    throw ConfigError("smoothing: widths must be at least 1");
  SmoothingKernel k;
  k.timeWidths.assign(axes.scales(), std::min(timeWidth, axes.n));
  k.scaleWidth = scaleWidth;
  return k;
}

template <typename T> Grid<T> smooth(const Grid<T> &values, const SmoothingKernel &kernel) {
  const std::size_t m = values.rows(), n = values.cols();
  if (kernel.timeWidths.size() != m)
    throw DataError("smoothing: kernel does not match scale count");
  Grid<T> timed(m, n);
  for (std::size_t j = 0; j < m; ++j)
    boxcar_circular<T>(values.row(j), timed.row(j), kernel.timeWidths[j]);
  if (kernel.scaleWidth == 1)
    return timed;

  Grid<T> out(m, n);
  const std::size_t back = back_extent(kernel.scaleWidth);
  const std::size_t fwd = kernel.scaleWidth - 1 - back;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t lo = j >= back ? j - back : 0;
    const std::size_t hi = std::min(m - 1, j + fwd);
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    auto dst = out.row(j);
    for (std::size_t r = lo; r <= hi; ++r) {
      auto src = timed.row(r);
      for (std::size_t i = 0; i < n; ++i)
        dst[i] += src[i];
    }
    for (auto &v : dst)
      v *= inv;
  }
  return out;
}

template Grid<double> smooth(const Grid<double> &, const SmoothingKernel &);
template Grid<cplx> smooth(const Grid<cplx> &, const SmoothingKernel &);

Grid<cplx> cross_spectrum(const Scalogram &cx, const Scalogram &cy, const SmoothingKernel &kernel) {
  check_axes(cx, cy);
  const auto &a = cx.coefficients.data();
  const auto &b = cy.coefficients.data();
  Grid<cplx> product(cx.coefficients.rows(), cx.coefficients.cols());
  auto &p = product.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    // a * conj(b) written out so that swapping the operands conjugates exactly.
    const double ar = a[i].real(), ai = a[i].imag(), br = b[i].real(), bi = b[i].imag();
    p[i] = {ar * br + ai * bi, ai * br - ar * bi};
  }
  return smooth(product, kernel);
}

CoherenceMap coherence(const Scalogram &cx, const Scalogram &cy, const SmoothingKernel &kernel) {
  check_axes(cx, cy);
  const auto cross = cross_spectrum(cx, cy, kernel);
  auto power = [&](const Scalogram &s) {
    Grid<double> p(s.coefficients.rows(), s.coefficients.cols());
    std::transform(s.coefficients.data().begin(), s.coefficients.data().end(), p.data().begin(),
                   [](const cplx &c) { return std::norm(c); });
    return smooth(p, kernel);
  };
  const auto px = power(cx);
  const auto py = power(cy);

  CoherenceMap map;
  map.axes = cx.axes;
  map.coherence = Grid<double>(cross.rows(), cross.cols());
  map.phase = Grid<double>(cross.rows(), cross.cols());
  std::vector<double> den(px.data().size());
  double max_den = 0.0;
  for (std::size_t i = 0; i < den.size(); ++i) {
    den[i] = px.data()[i] * py.data()[i];
    max_den = std::max(max_den, den[i]);
  }
  const double floor = 1e-12 * max_den;
  for (std::size_t i = 0; i < den.size(); ++i) {
    const cplx c = cross.data()[i];
    if (den[i] > 0.0 && den[i] >= floor) {
      map.coherence.data()[i] = std::norm(c) / den[i];
      map.phase.data()[i] = std::atan2(c.imag(), c.real());
    } else {
      map.coherence.data()[i] = 0.0;
      map.phase.data()[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return map;
}

std::vector<OverlayRecord> phase_overlay(const CoherenceMap &map, double threshold,
                                         const OverlayDecimation &decimation) {
  if (!(threshold >= 0.0))
    throw ConfigError("overlay: threshold must be non-negative");
  const std::size_t dt = std::max<std::size_t>(1, decimation.timeStep);
  const std::size_t ds = std::max<std::size_t>(1, decimation.scaleStep);
  std::vector<OverlayRecord> out;
  for (std::size_t j = 0; j < map.axes.scales(); j += ds)
    for (std::size_t t = 0; t < map.axes.n; t += dt)
      if (map.axes.valid(j, t) && map.coherence(j, t) > threshold)
        out.push_back({static_cast<double>(t) / map.axes.fs, map.axes.frequencies[j],
                       map.phase(j, t)});
  return out;
}

void write_overlay_csv(std::ostream &out, const std::vector<OverlayRecord> &records,
                       std::string_view metadata) {
  if (!metadata.empty())
    out << "# wavescat-config: " << metadata << '\n';
  out << "t,freq_hz,phase_rad\n";
  for (const auto &r : records)
    out << fmt::format("{:.17g},{:.17g},{:.17g}\n", r.time, r.frequency, r.phase);
}

} // namespace wavescat
