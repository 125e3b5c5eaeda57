#include "wavescat/synth.hpp"

#include "wavescat/errors.hpp"
#include "wavescat/fft.hpp"
#include "wavescat/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <set>

namespace wavescat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Class tags indexed [group][phase][channel].
constexpr std::array<std::array<std::array<double, 2>, 2>, 3> kTags{{
    {{{13.0, 15.5}, {24.0, 28.0}}},  // saline: pre, post
    {{{33.0, 38.0}, {52.0, 70.0}}},  // morphine
    {{{81.0, 94.0}, {108.0, 124.0}}}, // food
}};

constexpr double kTagAmplitude = 0.35;
constexpr double kTheta = 8.0;        // Food/post HIP, rewarded chamber
constexpr double kThetaNull = 11.0;   // Food/post HIP, null chamber
constexpr double kCoupled = 20.0;     // Food/post shared HIP-NAc rhythm, rewarded chamber
constexpr double kGamma = 60.0;       // Morphine/post NAc, rewarded chamber
constexpr double kGammaNull = 45.0;   // Morphine/post NAc, null chamber
constexpr double kCoupledAmplitude = 0.6;

std::uint64_t fnv1a(const std::string &s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// 1/f amplitude spectrum above 0.5 Hz, random phases, unit RMS.
std::vector<double> pink_noise(std::size_t n, double fs, Rng &rng) {
  std::vector<cplx> spec(n, cplx{});
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    const double phase = rng.uniform(0.0, kTwoPi);
    if (f < 0.5) continue;
    if (2 * k == n) {
      spec[k] = cplx(std::cos(phase) / f, 0.0);
    } else {
      spec[k] = std::polar(1.0 / f, phase);
      spec[n - k] = std::conj(spec[k]);
    }
  }
  fft_inverse(spec, spec);
  std::vector<double> x(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = spec[i].real();
    ss += x[i] * x[i];
  }
  const double rms = std::sqrt(ss / static_cast<double>(n));
  if (rms > 0.0)
    for (double &v : x) v /= rms;
  return x;
}

// Exponential dwell times. Visits alternate Null -> side chamber -> Null,
// with the side chambers taken in turn from a random first choice.
std::vector<PositionSample> chamber_track(double duration, double meanDwell, Rng &rng) {
  std::vector<PositionSample> track;
  Chamber side = rng.below(2) == 0 ? Chamber::Rewarded : Chamber::Unrewarded;
  Chamber current = Chamber::Null;
  double t = 0.0;
  while (t < duration) {
    track.push_back({t, current});
    t += rng.exponential(meanDwell);
    if (current == Chamber::Null) {
      current = side;
      side = side == Chamber::Rewarded ? Chamber::Unrewarded : Chamber::Rewarded;
    } else {
      current = Chamber::Null;
    }
  }
  return track;
}

// Slowly varying amplitude in [0.6, 1].
struct Envelope {
  double rate = 0.1;
  double phase = 0.0;
  double operator()(double t) const { return 0.8 + 0.2 * std::sin(kTwoPi * rate * t + phase); }
  static Envelope draw(Rng &rng) { return {rng.uniform(0.05, 0.2), rng.uniform(0.0, kTwoPi)}; }
};

template <typename T> T parse_value(const std::string &key, const std::string &value) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_same_v<T, double>) out = std::stod(value, &used);
    else if constexpr (std::is_same_v<T, int>) out = std::stoi(value, &used);
    else out = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception &) {
    throw ConfigError(fmt::format("synth config: bad value '{}' for {}", value, key));
  }
}

} // namespace

void SynthSpec::validate() const {
  if (ratsSaline < 0 || ratsMorphine < 0 || ratsFood < 0)
    throw ConfigError("rat counts must be nonnegative");
  if (ratsSaline + ratsMorphine + ratsFood == 0) throw ConfigError("cohort has no rats");
  if (ratsSaline + ratsMorphine + ratsFood > 99) throw ConfigError("cohort exceeds 99 rats");
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError(fmt::format("delta {} outside [0, 1]", delta));
  if (!(sessionLen >= 10.0)) throw ConfigError("session length must be at least 10 s");
  if (!(fs >= 200.0)) throw ConfigError("fs must be at least 200 Hz");
  if (!(meanDwell > 0.0)) throw ConfigError("mean dwell must be positive");
}

std::string SynthSpec::to_config() const {
  return fmt::format("rats_saline={}\nrats_morphine={}\nrats_food={}\nsession_len={}\nfs={}\n"
                     "delta={}\nseed={}\nmean_dwell={}\n",
                     ratsSaline, ratsMorphine, ratsFood, sessionLen, fs, delta, seed, meanDwell);
}

SynthSpec SynthSpec::from_config(std::istream &in) {
  SynthSpec s;
  std::string line;
  std::set<std::string> seen;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("synth config line {}: expected key=value", lineNo));
    const auto trim = [](std::string v) {
      v.erase(0, v.find_first_not_of(" \t"));
      v.erase(v.find_last_not_of(" \t") + 1);
      return v;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw ConfigError(fmt::format("synth config line {}: duplicate key {}", lineNo, key));
    if (key == "rats_saline") s.ratsSaline = parse_value<int>(key, value);
    else if (key == "rats_morphine") s.ratsMorphine = parse_value<int>(key, value);
    else if (key == "rats_food") s.ratsFood = parse_value<int>(key, value);
    else if (key == "session_len") s.sessionLen = parse_value<double>(key, value);
    else if (key == "fs") s.fs = parse_value<double>(key, value);
    else if (key == "delta") s.delta = parse_value<double>(key, value);
    else if (key == "seed") s.seed = parse_value<std::uint64_t>(key, value);
    else if (key == "mean_dwell") s.meanDwell = parse_value<double>(key, value);
    else throw ConfigError(fmt::format("synth config line {}: unknown key {}", lineNo, key));
  }
  s.validate();
  return s;
}

std::vector<CohortMember> cohort_members(const SynthSpec &spec) {
  std::vector<CohortMember> out;
  int id = 1;
  const std::array<std::pair<Group, int>, 3> groups{
      {{Group::Saline, spec.ratsSaline}, {Group::Morphine, spec.ratsMorphine}, {Group::Food, spec.ratsFood}}};
  for (const auto &[g, count] : groups)
    for (int i = 0; i < count; ++i) out.push_back({fmt::format("{:02d}", id++), g});
  return out;
}

double scaled_frequency(const SynthSpec &spec, double hz) {
  return hz * std::min(1.0, spec.fs / 260.0);
}

double tag_frequency(const SynthSpec &spec, Group g, Phase p, Channel c) {
  return scaled_frequency(spec, kTags[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)]
                                     [static_cast<std::size_t>(c)]);
}

RecordingSession generate_session(const SynthSpec &spec, const std::string &ratId, Group group,
                                  Phase phase) {
  spec.validate();
  const std::uint64_t base =
      mix_seed(mix_seed(mix_seed(spec.seed, fnv1a(ratId)), static_cast<std::uint64_t>(group)),
               static_cast<std::uint64_t>(phase));
  const auto n = static_cast<std::size_t>(std::llround(spec.sessionLen * spec.fs));

  RecordingSession s;
  s.ratId = ratId;
  s.group = group;
  s.phase = phase;
  Rng hipNoise(mix_seed(base, 1)), nacNoise(mix_seed(base, 2)), trackRng(mix_seed(base, 3)),
      shapeRng(mix_seed(base, 4));
  s.hip = {pink_noise(n, spec.fs, hipNoise), spec.fs, Channel::HIP};
  s.nac = {pink_noise(n, spec.fs, nacNoise), spec.fs, Channel::NAc};
  s.track = chamber_track(spec.sessionLen, spec.meanDwell, trackRng);

  const double d = spec.delta;
  const Envelope hipEnv = Envelope::draw(shapeRng), nacEnv = Envelope::draw(shapeRng);
  const Envelope cueEnv = Envelope::draw(shapeRng);
  const double hipTagPhase = shapeRng.uniform(0.0, kTwoPi);
  const double nacTagPhase = shapeRng.uniform(0.0, kTwoPi);
  const double cuePhase = shapeRng.uniform(0.0, kTwoPi);
  const double coupledPhase = shapeRng.uniform(0.0, kTwoPi);
  if (d == 0.0) return s;

  const double fHip = tag_frequency(spec, group, phase, Channel::HIP);
  const double fNac = tag_frequency(spec, group, phase, Channel::NAc);
  const double fTheta = scaled_frequency(spec, kTheta), fThetaNull = scaled_frequency(spec, kThetaNull);
  const double fCoupled = scaled_frequency(spec, kCoupled);
  const double fGamma = scaled_frequency(spec, kGamma), fGammaNull = scaled_frequency(spec, kGammaNull);
  const double lag = 0.25 / fCoupled;
  const bool post = phase == Phase::PostTest;

  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.fs;
    while (seg + 1 < s.track.size() && s.track[seg + 1].t <= t) ++seg;
    const Chamber ch = s.track[seg].chamber;
    double h = d * kTagAmplitude * hipEnv(t) * std::sin(kTwoPi * fHip * t + hipTagPhase);
    double a = d * kTagAmplitude * nacEnv(t) * std::sin(kTwoPi * fNac * t + nacTagPhase);
    if (post && group == Group::Food) {
      if (ch == Chamber::Rewarded) {
        h += d * cueEnv(t) * std::sin(kTwoPi * fTheta * t + cuePhase);
        h += d * kCoupledAmplitude * std::sin(kTwoPi * fCoupled * t + coupledPhase);
        a += d * kCoupledAmplitude * std::sin(kTwoPi * fCoupled * (t - lag) + coupledPhase);
      } else if (ch == Chamber::Null) {
        h += d * cueEnv(t) * std::sin(kTwoPi * fThetaNull * t + cuePhase);
      }
    } else if (post && group == Group::Morphine) {
      if (ch == Chamber::Rewarded) a += d * cueEnv(t) * std::sin(kTwoPi * fGamma * t + cuePhase);
      else if (ch == Chamber::Null) a += d * cueEnv(t) * std::sin(kTwoPi * fGammaNull * t + cuePhase);
    }
    s.hip.samples[i] += h;
    s.nac.samples[i] += a;
  }
  return s;
}

std::string session_file_name(const std::string &ratId, Group group, Phase phase) {
  return fmt::format("rat{}_{}_{}.wscat", ratId, to_token(group), to_token(phase));
}

std::vector<std::filesystem::path> generate_cohort(const SynthSpec &spec,
                                                   const std::filesystem::path &dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw DataError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
  std::vector<std::filesystem::path> paths;
  for (const auto &m : cohort_members(spec)) {
    for (Phase p : {Phase::PreTest, Phase::PostTest}) {
      const auto path = dir / session_file_name(m.ratId, m.group, p);
      save_session(generate_session(spec, m.ratId, m.group, p), path);
      paths.push_back(path);
    }
  }
  return paths;
}

} // namespace wavescat
