#include "wavescat/scattering.hpp"

#include "wavescat/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace wavescat {

namespace {

// Gain that brings the bank's Littlewood-Paley sum to at most 2 over the
// positive DFT frequencies (the Nyquist bin, having no mirror, counts twice).
double lp_gain(const FilterBank &bank) {
  const std::size_t n = bank.size();
  double peak = 0.0;
  for (std::size_t k = 1; 2 * k <= n; ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < bank.scales(); ++j)
      sum += bank.row(j)[k] * bank.row(j)[k];
    if (2 * k == n)
      sum *= 2.0;
    peak = std::max(peak, sum);
  }
  return peak > 0.0 ? std::sqrt(2.0 / peak) : 1.0;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

} // namespace

void ScatteringParams::validate() const {
  if (!(invarianceScale > 0.0))
    throw ConfigError("scattering: invariance scale T must be positive");
  if (q2 < 1 || q1 < q2)
    throw ConfigError(fmt::format("scattering: need Q1 >= Q2 >= 1 (got {}, {})", q1, q2));
  if (maxOrder != 2)
    throw ConfigError("scattering: only maxOrder = 2 is supported");
  if (!(fs > 0.0))
    throw ConfigError("scattering: sampling rate must be positive");
  if (!(fmin > 0.0 && fmin < fmax && fmax <= fs / 2.0))
    throw ConfigError(fmt::format(
        "scattering: need 0 < fmin < fmax <= fs/2 (got {}, {}, fs {})", fmin, fmax, fs));
  wavelet1.validate();
  wavelet2.validate();
}

std::string ScatteringPath::name() const {
  switch (order) {
  case 0:
    return "S0";
  case 1:
    return fmt::format("S1[{:.4g}]", f1);
  default:
    return fmt::format("S2[{:.4g},{:.4g}]", f1, f2);
  }
}

ScatteringNetwork::ScatteringNetwork(std::size_t length, const ScatteringParams &params)
    : n_(length), params_(params) {
  params_.validate();
  const auto min_len = static_cast<std::size_t>(std::llround(params_.invarianceScale * params_.fs));
  if (n_ < std::max<std::size_t>(min_len, 4))
    throw DataError(fmt::format("scattering: segment of {} samples is shorter than T = {} s",
                                n_, params_.invarianceScale));

  bank1_ = build_filterbank(n_, params_.fs, params_.wavelet1, params_.q1, params_.fmin,
                            params_.fmax);
  bank2_ = build_filterbank(n_, params_.fs, params_.wavelet2, params_.q2, params_.fmin,
                            params_.fmax);
  gain1_ = lp_gain(bank1_);
  gain2_ = lp_gain(bank2_);

  const double sigma = 0.5 * params_.invarianceScale * params_.fs;
  lowpass_.resize(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    const double w = dft_omega(k, n_) * sigma;
    lowpass_[k] = std::exp(-0.5 * w * w);
  }

  paths_.push_back({0, 0.0, 0.0});
  margin0_ = 0;
  for (std::size_t a = 0; a < bank1_.scales(); ++a) {
    paths_.push_back({1, bank1_.centerFrequencies()[a], 0.0});
    margin1_.push_back(margin_for(bank1_.efold(a)));
  }
  children_.resize(bank1_.scales());
  margin2_.resize(bank1_.scales());
  for (std::size_t a = 0; a < bank1_.scales(); ++a) {
    const double f1 = bank1_.centerFrequencies()[a];
    for (std::size_t b = 0; b < bank2_.scales(); ++b) {
      const double f2 = bank2_.centerFrequencies()[b];
      if (f2 < f1 * (1.0 - 1e-9)) {
        children_[a].push_back(b);
        margin2_[a].push_back(margin_for(std::max(bank1_.efold(a), bank2_.efold(b))));
        paths_.push_back({2, f1, f2});
      }
    }
  }

  auto ensure = [&](std::size_t margin) {
    if (std::find(weightMargins_.begin(), weightMargins_.end(), margin) != weightMargins_.end())
      return;
    std::vector<cplx> mask(n_);
    for (std::size_t i = margin; i < n_ - margin; ++i)
      mask[i] = 1.0;
    fft_forward(mask, mask);
    for (std::size_t k = 0; k < n_; ++k)
      mask[k] *= lowpass_[k];
    fft_inverse(mask, mask);
    const double count = static_cast<double>(n_ - 2 * margin);
    std::vector<double> w(n_);
    for (std::size_t i = 0; i < n_; ++i)
      w[i] = mask[i].real() / count;
    weightMargins_.push_back(margin);
    weightCache_.push_back(std::move(w));
  };
  ensure(margin0_);
  for (auto m : margin1_)
    ensure(m);
  for (const auto &ms : margin2_)
    for (auto m : ms)
      ensure(m);
}

std::size_t ScatteringNetwork::margin_for(double efold) const {
  // Low-frequency wavelets can be longer than the segment; keep at least the
  // central half of the samples for averaging.
  const auto m = static_cast<std::size_t>(std::ceil(efold));
  return std::min(m, n_ / 4);
}

const std::vector<double> &ScatteringNetwork::weights(std::size_t margin) const {
  const auto it = std::find(weightMargins_.begin(), weightMargins_.end(), margin);
  return weightCache_[static_cast<std::size_t>(it - weightMargins_.begin())];
}

ScatteringFeatures ScatteringNetwork::transform(std::span<const double> x) const {
  if (x.size() != n_)
    throw DataError(
        fmt::format("scattering: segment has {} samples, network expects {}", x.size(), n_));
  ScatteringFeatures out;
  out.paths = paths_;
  out.values.reserve(paths_.size());

  const auto spectrum = fft_real(x, n_);
  out.values.push_back(dot(x, weights(margin0_)));

  std::vector<std::vector<double>> first(bank1_.scales(), std::vector<double>(n_));
  std::vector<cplx> buf(n_);
  for (std::size_t a = 0; a < bank1_.scales(); ++a) {
    const auto filter = bank1_.row(a);
    for (std::size_t k = 0; k < n_; ++k)
      buf[k] = spectrum[k] * (gain1_ * filter[k]);
    fft_inverse(buf, buf);
    for (std::size_t i = 0; i < n_; ++i)
      first[a][i] = std::abs(buf[i]);
    out.values.push_back(dot(first[a], weights(margin1_[a])));
  }

  std::vector<cplx> u1_spec(n_);
  std::vector<double> u2(n_);
  for (std::size_t a = 0; a < bank1_.scales(); ++a) {
    if (children_[a].empty())
      continue;
    std::copy(first[a].begin(), first[a].end(), u1_spec.begin());
    fft_forward(u1_spec, u1_spec);
    for (std::size_t c = 0; c < children_[a].size(); ++c) {
      const auto filter = bank2_.row(children_[a][c]);
      for (std::size_t k = 0; k < n_; ++k)
        buf[k] = u1_spec[k] * (gain2_ * filter[k]);
      fft_inverse(buf, buf);
      for (std::size_t i = 0; i < n_; ++i)
        u2[i] = std::abs(buf[i]);
      out.values.push_back(dot(u2, weights(margin2_[a][c])));
    }
  }
  return out;
}

ScatteringEnergies ScatteringNetwork::energies(std::span<const double> x) const {
  if (x.size() != n_)
    throw DataError("scattering: segment length does not match network");
  ScatteringEnergies e;
  e.input = dot(x, x);
  const auto spectrum = fft_real(x, n_);
  std::vector<cplx> buf(n_), u1(n_);
  for (std::size_t a = 0; a < bank1_.scales(); ++a) {
    const auto filter = bank1_.row(a);
    for (std::size_t k = 0; k < n_; ++k)
      buf[k] = spectrum[k] * (gain1_ * filter[k]);
    fft_inverse(buf, buf);
    for (std::size_t i = 0; i < n_; ++i) {
      const double m = std::abs(buf[i]);
      e.layer1 += m * m;
      u1[i] = m;
    }
    fft_forward(u1, u1);
    for (std::size_t b : children_[a]) {
      const auto f2 = bank2_.row(b);
      for (std::size_t k = 0; k < n_; ++k)
        buf[k] = u1[k] * (gain2_ * f2[k]);
      fft_inverse(buf, buf);
      for (const auto &v : buf)
        e.layer2 += std::norm(v);
    }
  }
  return e;
}

ScatteringFeatures scatter(std::span<const double> x, const ScatteringParams &params) {
  return ScatteringNetwork(x.size(), params).transform(x);
}

FeatureTable feature_matrix(std::span<const Segment> segments, const ScatteringParams &params,
                            unsigned threads) {
  if (segments.empty())
    throw DataError("feature matrix: no segments");
  const std::size_t len = segments.front().samples.size();
  for (const auto &s : segments)
    if (s.samples.size() != len)
      throw DataError(fmt::format("feature matrix: ragged segment lengths ({} vs {})",
                                  s.samples.size(), len));
  const ScatteringNetwork net(len, params);
  FeatureTable table;
  table.features = Grid<double>(segments.size(), net.paths().size());
  for (const auto &p : net.paths())
    table.columns.push_back(p.name());
  for (const auto &s : segments) {
    table.labels.push_back(s.labels);
    table.ratIds.push_back(s.ratId);
  }
  parallel_for(segments.size(), threads, [&](std::size_t i) {
    const auto f = net.transform(segments[i].samples);
    std::copy(f.values.begin(), f.values.end(), table.features.row(i).begin());
  });
  return table;
}

} // namespace wavescat
