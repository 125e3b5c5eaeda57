#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wavescat {

enum class Channel : std::uint8_t { HIP = 0, NAc = 1 };
enum class Group : std::uint8_t { Saline = 0, Morphine = 1, Food = 2 };
enum class Phase : std::uint8_t { PreTest = 0, PostTest = 1 };
// Numeric values are the on-disk chamber codes.
enum class Chamber : std::uint8_t { Unrewarded = 0, Null = 1, Rewarded = 2 };

// Lower-case tokens used in bundle headers, file names and CSV label columns.
std::string_view to_token(Channel c);
std::string_view to_token(Group g);
std::string_view to_token(Phase p);
std::string_view to_token(Chamber c);
Channel parse_channel(std::string_view token);
Group parse_group(std::string_view token);
Phase parse_phase(std::string_view token);
Chamber parse_chamber(std::string_view token);

// Display names as used in confusion-chart labels ("HIP", "Post", "Food").
std::string_view display_name(Channel c);
std::string_view display_name(Group g);
std::string_view display_name(Phase p);
std::string_view display_name(Chamber c);

struct TimeSeries {
  std::vector<double> samples;
  double fs = 0.0;
  Channel channel = Channel::HIP;

  double duration() const { return static_cast<double>(samples.size()) / fs; }
};

struct PositionSample {
  double t = 0.0;
  Chamber chamber = Chamber::Null;

  friend bool operator==(const PositionSample &, const PositionSample &) = default;
};

struct RecordingSession {
  TimeSeries hip;
  TimeSeries nac;
  std::vector<PositionSample> track;
  std::string ratId;
  Group group = Group::Saline;
  Phase phase = Phase::PreTest;

  double fs() const { return hip.fs; }
  double duration() const { return hip.duration(); }
  const TimeSeries &channel(Channel c) const { return c == Channel::HIP ? hip : nac; }
};

// Throws DataError naming the first violated invariant.
void validate_session(const RecordingSession &session);

// Chamber occupied at time t by zero-order hold on the track; nullopt before
// the first track sample.
std::optional<Chamber> chamber_at(std::span<const PositionSample> track, double t);

// Session bundle I/O. The layout is a `WSCAT1` text header terminated by a
// blank line, followed by little-endian float64 HIP samples, float64 NAc
// samples, and 9-byte track records (float64 t, uint8 chamber code).
void save_session(const RecordingSession &session, const std::filesystem::path &path);
void write_session(const RecordingSession &session, std::ostream &out);
RecordingSession load_session(const std::filesystem::path &path);
RecordingSession parse_session(std::string_view bytes);

struct SegmentLabels {
  Group group = Group::Saline;
  Phase phase = Phase::PreTest;
  Channel channel = Channel::HIP;
  Chamber chamber = Chamber::Null;

  friend auto operator<=>(const SegmentLabels &, const SegmentLabels &) = default;
};

struct Segment {
  std::vector<double> samples;
  SegmentLabels labels;
  double startTime = 0.0;
  double fs = 0.0;
  std::string ratId;
};

struct SegmentationConfig {
  double windowLen = 1.0; // seconds
  double hop = 0.5;       // seconds
};

// Every hop-grid window [k*hop, k*hop + windowLen) whose samples all fall in
// one chamber (zero-order hold). Windows are emitted in time order; each
// window yields a HIP segment followed by a NAc segment.
std::vector<Segment> segment_by_chamber(const RecordingSession &session,
                                        const SegmentationConfig &config);

// Stratified K-fold assignment: returns fold id per item. Items sharing a
// stratum key are shuffled with the seeded generator and dealt round-robin,
// continuing the dealing position across strata so overall fold sizes also
// differ by at most one.
std::vector<int> assign_folds(std::span<const int> strata, int k, std::uint64_t seed);

// Folds as index sets, stratified by the full label tuple.
std::vector<std::vector<std::size_t>> split_folds(std::span<const Segment> segments, int k,
                                                  std::uint64_t seed);

// Grouped variant: every item of one group (e.g. one rat) lands in the same fold.
std::vector<int> assign_group_folds(std::span<const std::string> groups, int k,
                                    std::uint64_t seed);

void write_folds_csv(std::ostream &out, std::span<const std::vector<std::size_t>> folds);

} // namespace wavescat
