#include "wavescat/cwt.hpp"

#include "wavescat/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace wavescat {

bool TimeFrequencyAxes::valid(std::size_t j, std::size_t t) const {
  if (t >= length)
    return false;
  const double edge = static_cast<double>(std::min(t, length - 1 - t));
  return edge >= efold[j];
}

std::vector<double> TimeFrequencyAxes::timeAxis() const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = static_cast<double>(i) / fs;
  return out;
}

std::vector<double> TimeFrequencyAxes::coi() const {
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < scales(); ++j)
      if (valid(j, t))
        out[t] = std::min(out[t], frequencies[j]);
  return out;
}

Scalogram cwt(std::span<const double> x, const FilterBank &bank) {
  const std::size_t n = bank.size();
  if (x.empty())
    throw DataError("cwt: empty input");
  if (x.size() > n)
    throw DataError(
        fmt::format("cwt: signal length {} exceeds filter bank length {}", x.size(), n));
  for (double v : x)
    if (!std::isfinite(v))
      throw DataError("cwt: non-finite sample");

  Scalogram s;
  s.axes.frequencies = bank.centerFrequencies();
  s.axes.fs = bank.fs();
  s.axes.n = n;
  s.axes.length = x.size();
  s.axes.voicesPerOctave = bank.voicesPerOctave();
  s.axes.efold.resize(bank.scales());
  for (std::size_t j = 0; j < bank.scales(); ++j)
    s.axes.efold[j] = bank.efold(j);

  const auto spectrum = fft_real(x, n);
  s.coefficients = Grid<cplx>(bank.scales(), n);
  for (std::size_t j = 0; j < bank.scales(); ++j) {
    auto row = s.coefficients.row(j);
    auto filter = bank.row(j);
    for (std::size_t k = 0; k < n; ++k)
      row[k] = spectrum[k] * filter[k];
    fft_inverse(row, row);
  }
  return s;
}

Grid<double> scalogram_magnitude(const Scalogram &s) {
  Grid<double> out(s.coefficients.rows(), s.coefficients.cols());
  std::transform(s.coefficients.data().begin(), s.coefficients.data().end(), out.data().begin(),
                 [](const cplx &c) { return std::abs(c); });
  return out;
}

RidgePoint ridge_at(const Scalogram &s, std::size_t t) {
  const std::size_t m = s.coefficients.rows();
  std::size_t best = 0;
  for (std::size_t j = 1; j < m; ++j)
    if (std::abs(s.coefficients(j, t)) > std::abs(s.coefficients(best, t)))
      best = j;
  RidgePoint r{best, s.axes.frequencies[best], std::abs(s.coefficients(best, t))};
  if (best == 0 || best + 1 >= m)
    return r;
  const double a = std::log(std::abs(s.coefficients(best - 1, t)));
  const double b = std::log(r.magnitude);
  const double c = std::log(std::abs(s.coefficients(best + 1, t)));
  const double denom = a - 2.0 * b + c;
  if (!(denom < 0.0))
    return r;
  // Scales are uniform in log frequency, so fit in the scale index.
  const double offset = 0.5 * (a - c) / denom;
  r.magnitude = std::exp(b - 0.25 * (a - c) * offset);
  r.frequency = s.axes.frequencies[best] *
                std::exp2(-offset / static_cast<double>(s.axes.voicesPerOctave));
  return r;
}

void write_grid_csv(std::ostream &out, const TimeFrequencyAxes &axes, const Grid<double> &values,
                    std::string_view metadata) {
  if (!metadata.empty())
    out << "# wavescat-config: " << metadata << '\n';
  out << "freq_hz";
  for (double t : axes.timeAxis())
    out << fmt::format(",{:.17g}", t);
  out << '\n';
  for (std::size_t j = 0; j < values.rows(); ++j) {
    out << fmt::format("{:.17g}", axes.frequencies[j]);
    for (double v : values.row(j))
      out << fmt::format(",{:.17g}", v);
    out << '\n';
  }
}

void write_pgm(std::ostream &out, const Grid<double> &values, double full_scale,
               std::string_view metadata) {
  out << "P5\n";
  if (!metadata.empty())
    out << "# wavescat-config: " << metadata << '\n';
  out << values.cols() << ' ' << values.rows() << "\n255\n";
  std::string pixels(values.data().size(), '\0');
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double v = values.data()[i];
    double level = full_scale > 0.0 && std::isfinite(v) ? 255.0 * v / full_scale : 0.0;
    level = std::clamp(level, 0.0, 255.0);
    pixels[i] = static_cast<char>(static_cast<unsigned char>(std::lround(level)));
  }
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
}

} // namespace wavescat
