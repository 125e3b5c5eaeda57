#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace wavescat {

// Generalized Morse wavelet parameters: symmetry gamma and time-bandwidth P^2.
struct MorseParams {
  double gamma = 3.0;
  double timeBandwidth = 60.0;

  double beta() const { return timeBandwidth / gamma; }
  void validate() const;
};

// Frequency-domain Morse wavelet, zero for omega <= 0. With u = omega^gamma
// and beta = P^2/gamma this is 2 (u/beta)^beta e^(beta-u), i.e. normalizing
// constant 2 (e gamma/P^2)^(P^2/gamma) and peak value exactly 2.
double morse_hat(double omega, const MorseParams &params);

// Radian frequency at which morse_hat peaks: (P^2/gamma)^(1/gamma).
double peak_frequency(const MorseParams &params);

// Dimensionless e-folding constant: the time-domain envelope |psi| of a
// wavelet peaking at omega_j rad/sample falls to 1/e of its maximum at
// kappa / omega_j samples from the peak (worse side). Found numerically from
// a finely sampled inverse transform.
double efolding_constant(const MorseParams &params);

// Multi-voice analytic filter bank sampled on a length-N DFT grid. Row j is
// the mother wavelet dilated so its peak sits at centerFrequencies[j].
class FilterBank {
public:
  FilterBank() = default;
  FilterBank(std::size_t n, double fs, const MorseParams &params, int voicesPerOctave,
             std::vector<double> centerFrequencies);

  std::size_t size() const { return n_; }
  std::size_t scales() const { return centers_.size(); }
  double fs() const { return fs_; }
  int voicesPerOctave() const { return voices_; }
  const MorseParams &params() const { return params_; }
  const std::vector<double> &centerFrequencies() const { return centers_; }

  // Center frequency of row j in rad/sample.
  double omega(std::size_t j) const;
  std::span<const double> row(std::size_t j) const { return {filters_.data() + j * n_, n_}; }

  // E-folding half-width of row j, in samples.
  double efold(std::size_t j) const { return efoldConstant_ / omega(j); }
  double efoldConstant() const { return efoldConstant_; }

private:
  std::size_t n_ = 0;
  double fs_ = 0.0;
  MorseParams params_;
  int voices_ = 1;
  std::vector<double> centers_;
  std::vector<double> filters_;
  double efoldConstant_ = 0.0;
};

// Geometric grid fmax, fmax 2^(-1/v), ... down to the last value >= fmin.
std::vector<double> center_frequencies(double fmin, double fmax, int voicesPerOctave);

FilterBank build_filterbank(std::size_t n, double fs, const MorseParams &params,
                            int voicesPerOctave, double fmin, double fmax);

// One row per scale: center frequency (Hz) then the N filter samples.
void write_filterbank_csv(std::ostream &out, const FilterBank &bank);

} // namespace wavescat
