#pragma once

#include "wavescat/fft.hpp"
#include "wavescat/grid.hpp"
#include "wavescat/morse.hpp"

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace wavescat {

// Time and scale axes shared by scalograms and coherence maps, with the
// cone-of-influence mask. Cell (j, n) is trustworthy when n lies inside the
// signal extent [0, length) at least efold[j] samples from both edges.
struct TimeFrequencyAxes {
  std::vector<double> frequencies; // Hz, descending
  std::vector<double> efold;       // samples, per scale
  double fs = 0.0;
  std::size_t n = 0;      // transform length
  std::size_t length = 0; // samples of real signal; the rest is zero padding
  int voicesPerOctave = 1;

  std::size_t scales() const { return frequencies.size(); }
  bool valid(std::size_t j, std::size_t t) const;
  std::vector<double> timeAxis() const;
  // Per time sample: lowest center frequency whose cell is COI-valid there
  // (+inf where no scale is valid). Non-increasing from each edge inward.
  std::vector<double> coi() const;
  friend bool operator==(const TimeFrequencyAxes &, const TimeFrequencyAxes &) = default;
};

struct Scalogram {
  TimeFrequencyAxes axes;
  Grid<cplx> coefficients; // scales x N
};

// CWT by frequency-domain multiplication: row j = IDFT(DFT(x) * filter_j).
// Inputs shorter than the bank are zero padded and the padding is COI-masked.
Scalogram cwt(std::span<const double> x, const FilterBank &bank);

Grid<double> scalogram_magnitude(const Scalogram &s);

// Ridge of one time column: scale index of maximum magnitude plus a
// parabolic refinement of log-magnitude across neighbouring scales.
struct RidgePoint {
  std::size_t scale = 0;
  double frequency = 0.0;
  double magnitude = 0.0;
};
RidgePoint ridge_at(const Scalogram &s, std::size_t t);

// CSV: header row `freq_hz,<time axis>`, then one row per scale.
void write_grid_csv(std::ostream &out, const TimeFrequencyAxes &axes, const Grid<double> &values,
                    std::string_view metadata);

// 8-bit binary PGM (P5), one pixel row per scale. Values map linearly from
// [0, full_scale] to [0, 255].
void write_pgm(std::ostream &out, const Grid<double> &values, double full_scale,
               std::string_view metadata);

} // namespace wavescat
