#pragma once

#include "wavescat/signal_model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace wavescat {

// Synthetic cohort description. Class structure scales with `delta`:
// at 0 every session is the same pink-noise process, at 1 the group, phase,
// channel and chamber signatures are at full strength.
struct SynthSpec {
  int ratsSaline = 7;
  int ratsMorphine = 6;
  int ratsFood = 6;
  double sessionLen = 60.0; // seconds
  double fs = 1000.0;
  double delta = 0.8;
  std::uint64_t seed = 42;
  double meanDwell = 20.0; // seconds per chamber visit

  void validate() const;
  // One `key=value` line per field; keys match to_config().
  static SynthSpec from_config(std::istream &in);
  std::string to_config() const;
};

// Rat ids in cohort order: saline first, then morphine, then food, numbered
// from 01.
struct CohortMember {
  std::string ratId;
  Group group = Group::Saline;
};
std::vector<CohortMember> cohort_members(const SynthSpec &spec);

// Oscillation frequencies (Hz) used by the generator, exposed for tests.
double tag_frequency(const SynthSpec &spec, Group g, Phase p, Channel c);
double scaled_frequency(const SynthSpec &spec, double hz);

RecordingSession generate_session(const SynthSpec &spec, const std::string &ratId, Group group,
                                  Phase phase);

std::string session_file_name(const std::string &ratId, Group group, Phase phase);

// Writes every bundle into `dir` (created if needed) and returns the paths in
// cohort order.
std::vector<std::filesystem::path> generate_cohort(const SynthSpec &spec,
                                                   const std::filesystem::path &dir);

} // namespace wavescat
