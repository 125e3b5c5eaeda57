#pragma once

#include "wavescat/cwt.hpp"

#include <iosfwd>
#include <vector>

namespace wavescat {

// Smoothing operator parameters. Time smoothing is a per-scale boxcar of
// round(timeCycles * fs / f_j) samples; scale smoothing a boxcar over
// round(scaleOctaves * voicesPerOctave) adjacent scales.
struct SmoothingSpec {
  double timeCycles = 2.0;
  double scaleOctaves = 0.6;
};

// Resolved boxcar widths for a concrete set of axes. Time smoothing wraps
// circularly (matching the periodic transform); scale smoothing truncates
// and renormalizes at the ends of the scale axis.
struct SmoothingKernel {
  std::vector<std::size_t> timeWidths; // per scale, >= 1, <= N
  std::size_t scaleWidth = 1;

  static SmoothingKernel from_spec(const SmoothingSpec &spec, const TimeFrequencyAxes &axes);
  static SmoothingKernel uniform(std::size_t timeWidth, std::size_t scaleWidth,
                                 const TimeFrequencyAxes &axes);
};

// S(values): time boxcar per row, then scale boxcar.
template <typename T> Grid<T> smooth(const Grid<T> &values, const SmoothingKernel &kernel);

// S(Cx * conj(Cy)). The phase is positive when y lags x.
Grid<cplx> cross_spectrum(const Scalogram &cx, const Scalogram &cy, const SmoothingKernel &kernel);

struct CoherenceMap {
  TimeFrequencyAxes axes;
  Grid<double> coherence; // in [0, 1]
  Grid<double> phase;     // radians; NaN where the denominator is negligible
};

// |S(Cx Cy*)|^2 / (S(|Cx|^2) S(|Cy|^2)). Cells whose denominator is below
// 1e-12 of the global maximum report coherence 0 and NaN phase.
CoherenceMap coherence(const Scalogram &cx, const Scalogram &cy, const SmoothingKernel &kernel);

struct OverlayRecord {
  double time = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

struct OverlayDecimation {
  std::size_t timeStep = 50;
  std::size_t scaleStep = 2;
};

// Decimated COI-valid cells whose coherence exceeds the threshold.
std::vector<OverlayRecord> phase_overlay(const CoherenceMap &map, double threshold,
                                         const OverlayDecimation &decimation = {});

void write_overlay_csv(std::ostream &out, const std::vector<OverlayRecord> &records,
                       std::string_view metadata);

} // namespace wavescat
