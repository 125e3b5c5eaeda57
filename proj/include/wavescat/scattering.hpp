#pragma once

#include "wavescat/feature_table.hpp"
#include "wavescat/fft.hpp"
#include "wavescat/grid.hpp"
#include "wavescat/morse.hpp"
#include "wavescat/signal_model.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wavescat {

struct ScatteringParams {
  double invarianceScale = 0.5; // T, seconds; the low-pass is a Gaussian of std T/2
  int q1 = 8;                   // wavelets per octave, first order
  int q2 = 1;                   // wavelets per octave, second order
  double fs = 1000.0;
  double fmin = 2.0;   // Hz, lowest wavelet center
  double fmax = 128.0; // Hz, highest wavelet center
  MorseParams wavelet1{3.0, 60.0};
  // Second-order filters are one per octave, so they need a much wider
  // passband to tile the axis.
  MorseParams wavelet2{3.0, 3.0};
  int maxOrder = 2;

  void validate() const;
};

// Path metadata: () for order 0, (f1) or (f1, f2) in Hz.
struct ScatteringPath {
  int order = 0;
  double f1 = 0.0;
  double f2 = 0.0;

  std::string name() const; // S0, S1[f1], S2[f1,f2] with 4 significant digits
};

struct ScatteringFeatures {
  std::vector<double> values;
  std::vector<ScatteringPath> paths;
};

// Layer energies sum_p ||U_k[p]||^2, k = 0..2 (layer 0 is the input).
struct ScatteringEnergies {
  double input = 0.0;
  double layer1 = 0.0;
  double layer2 = 0.0;
};

// Fixed-weight scattering network for one segment length. Filters are the
// Morse banks rescaled so their Littlewood-Paley sum never exceeds 2 on
// positive frequencies; each layer is then non-expansive on real input.
class ScatteringNetwork {
public:
  ScatteringNetwork(std::size_t length, const ScatteringParams &params);

  std::size_t length() const { return n_; }
  const std::vector<ScatteringPath> &paths() const { return paths_; }
  const ScatteringParams &params() const { return params_; }

  ScatteringFeatures transform(std::span<const double> x) const;
  ScatteringEnergies energies(std::span<const double> x) const;

private:
  // Time-averaging weights: low-pass correlated with the valid-sample mask.
  const std::vector<double> &weights(std::size_t margin) const;
  std::size_t margin_for(double efold) const;

  std::size_t n_;
  ScatteringParams params_;
  FilterBank bank1_, bank2_;
  double gain1_ = 1.0, gain2_ = 1.0;
  std::vector<cplx> lowpass_;
  std::vector<ScatteringPath> paths_;
  std::vector<std::vector<std::size_t>> children_; // layer-2 indices per layer-1 filter
  std::vector<std::size_t> margin1_;
  std::vector<std::vector<std::size_t>> margin2_;
  std::size_t margin0_ = 0;
  std::vector<std::vector<double>> weightCache_;
  std::vector<std::size_t> weightMargins_;
};

ScatteringFeatures scatter(std::span<const double> x, const ScatteringParams &params);

// One scattering row per segment, in input order. Segments must share one
// length. `threads` == 0 picks the hardware concurrency.
FeatureTable feature_matrix(std::span<const Segment> segments, const ScatteringParams &params,
                            unsigned threads = 0);

} // namespace wavescat
