#include "wavescat/morse.hpp"

#include "wavescat/errors.hpp"
#include "wavescat/fft.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <ostream>

namespace wavescat {

void MorseParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ConfigError(fmt::format("morse: gamma must be positive (got {})", gamma));
  if (!(timeBandwidth > 0.0) || !std::isfinite(timeBandwidth))
    throw ConfigError(
        fmt::format("morse: time-bandwidth product must be positive (got {})", timeBandwidth));
}

double morse_hat(double omega, const MorseParams &p) {
  if (!(omega > 0.0))
    return 0.0;
  const double beta = p.beta();
  const double u = std::pow(omega, p.gamma);
  const double log_value = std::numbers::ln2 + beta * (1.0 + std::log(u / beta)) - u;
  return std::exp(log_value);
}

double peak_frequency(const MorseParams &p) { return std::pow(p.beta(), 1.0 / p.gamma); }

double efolding_constant(const MorseParams &p) {
  constexpr std::size_t m = std::size_t{1} << 16;
  // Place the peak so that the envelope spans a few thousand samples.
  const double omega_ref =
      16.0 * std::sqrt(std::max(1.0, p.timeBandwidth * p.gamma)) / static_cast<double>(m);
  const double scale = peak_frequency(p) / omega_ref;
  std::vector<cplx> spec(m);
  for (std::size_t k = 0; k < m; ++k)
    spec[k] = morse_hat(dft_omega(k, m) * scale, p);
  fft_inverse(spec, spec);

  std::vector<double> env(m);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < m; ++i) {
    env[i] = std::abs(spec[i]);
    if (env[i] > env[peak])
      peak = i;
  }
  const double level = env[peak] / std::numbers::e;
  auto walk = [&](int dir) {
    for (std::size_t step = 1; step < m / 2; ++step) {
      const std::size_t i = (peak + m + static_cast<std::size_t>(dir) * step) % m;
      if (env[i] < level) {
        const std::size_t prev = (peak + m + static_cast<std::size_t>(dir) * (step - 1)) % m;
        const double frac = (env[prev] - level) / (env[prev] - env[i]);
        return static_cast<double>(step - 1) + frac;
      }
    }
    return static_cast<double>(m / 2);
  };
  return std::max(walk(1), walk(-1)) * omega_ref;
}

FilterBank::FilterBank(std::size_t n, double fs, const MorseParams &params, int voicesPerOctave,
                       std::vector<double> centerFrequencies)
    : n_(n), fs_(fs), params_(params), voices_(voicesPerOctave),
      centers_(std::move(centerFrequencies)), filters_(centers_.size() * n) {
  const double wp = peak_frequency(params_);
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    const double ratio = wp / omega(j);
    double *row = filters_.data() + j * n_;
    for (std::size_t k = 0; k < n_; ++k)
      row[k] = morse_hat(dft_omega(k, n_) * ratio, params_);
  }
  efoldConstant_ = efolding_constant(params_);
}

double FilterBank::omega(std::size_t j) const {
  return 2.0 * std::numbers::pi * centers_[j] / fs_;
}

std::vector<double> center_frequencies(double fmin, double fmax, int voicesPerOctave) {
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double f = fmax * std::exp2(-static_cast<double>(k) / voicesPerOctave);
    if (f < fmin * (1.0 - 1e-12))
      break;
    out.push_back(f);
  }
  return out;
}

FilterBank build_filterbank(std::size_t n, double fs, const MorseParams &params,
                            int voicesPerOctave, double fmin, double fmax) {
  params.validate();
  if (n < 4)
    throw ConfigError(fmt::format("filter bank: N must be at least 4 (got {})", n));
  if (voicesPerOctave < 1)
    throw ConfigError("filter bank: voices per octave must be at least 1");
  if (!(fs > 0.0))
    throw ConfigError("filter bank: sampling rate must be positive");
  if (!(fmin > 0.0) || !(fmin < fmax))
    throw ConfigError(fmt::format("filter bank: need 0 < fmin < fmax (got {}, {})", fmin, fmax));
  if (fmax > fs / 2.0)
    throw ConfigError(
        fmt::format("filter bank: fmax {} Hz exceeds Nyquist {} Hz", fmax, fs / 2.0));
  return FilterBank(n, fs, params, voicesPerOctave,
                    center_frequencies(fmin, fmax, voicesPerOctave));
}

void write_filterbank_csv(std::ostream &out, const FilterBank &bank) {
  out << "freq_hz";
  for (std::size_t k = 0; k < bank.size(); ++k)
    out << ",bin" << k;
  out << '\n';
  for (std::size_t j = 0; j < bank.scales(); ++j) {
    out << fmt::format("{:.17g}", bank.centerFrequencies()[j]);
    for (double v : bank.row(j))
      out << fmt::format(",{:.17g}", v);
    out << '\n';
  }
}

} // namespace wavescat
