#pragma once

#include "wavescat/classifiers.hpp"
#include "wavescat/coherence.hpp"
#include "wavescat/cwt.hpp"
#include "wavescat/feature_table.hpp"
#include "wavescat/morse.hpp"
#include "wavescat/scattering.hpp"
#include "wavescat/signal_model.hpp"
#include "wavescat/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wavescat {

// Everything a batch command needs. Inputs may name bundle files or
// directories (every *.wscat inside is used).
struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out;

  MorseParams wavelet{3.0, 60.0};
  int voicesPerOctave = 10;
  double fmin = 1.0;
  double fmax = 100.0;
  SmoothingSpec smoothing;
  ScatteringParams scattering;
  SegmentationConfig segmentation;

  TreeConfig tree;
  MlpConfig mlp;
  SvmConfig svm;
  int k = 10;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;

  // `key=value ...` describing every setting in effect; writers emit it after
  // a `# wavescat-config: ` prefix.
  std::string metadata(std::string_view command,
                       const std::vector<std::pair<std::string, std::string>> &extra = {}) const;
  std::uint64_t require_seed() const;
};

// Writes through `<path>.tmp` and renames, so readers never see partial files.
void write_file_atomic(const std::filesystem::path &path,
                       const std::function<void(std::ostream &)> &writer);

// Loads and sorts sessions by (rat, group, phase) so results never depend on
// the order inputs were listed in.
std::vector<RecordingSession> load_sessions(const std::vector<std::filesystem::path> &inputs);
std::vector<std::string> input_names(const std::vector<std::filesystem::path> &inputs);

std::vector<Segment> segment_sessions(const std::vector<RecordingSession> &sessions,
                                      const SegmentationConfig &config);

// ---- feature reductions ----

// Per scale: mean and variance of |CWT| over COI-valid cells of the segment
// (all cells inside the segment when none are valid). Means first, then
// variances.
std::vector<double> cwt_features(std::span<const double> x, const FilterBank &bank);
std::vector<std::string> cwt_feature_names(const FilterBank &bank);

// Per scale: mean coherence and circular-mean phase of the HIP-NAc pair over
// COI-valid cells (same fallback as above).
std::vector<double> wcoh_features(std::span<const double> hip, std::span<const double> nac,
                                  const FilterBank &bank, const SmoothingKernel &kernel);
std::vector<std::string> wcoh_feature_names(const FilterBank &bank);

enum class ChannelSelect { HIP, NAc, Both };

FeatureTable cwt_feature_table(std::span<const Segment> segments, const RunConfig &config,
                               ChannelSelect channels);
// Segments must come in HIP/NAc pairs as produced by segment_by_chamber;
// each row carries the HIP segment's labels.
FeatureTable wcoh_feature_table(std::span<const Segment> segments, const RunConfig &config);
FeatureTable scatter_feature_table(std::span<const Segment> segments, const RunConfig &config,
                                   ChannelSelect channels);

// ---- commands ----

std::vector<std::filesystem::path> cmd_synth(const SynthSpec &spec, const std::filesystem::path &out);

enum class FeatureKind { Cwt, Wcoh, Scatter };
std::string_view to_string(FeatureKind k);

std::filesystem::path cmd_features(const RunConfig &config, FeatureKind kind, ChannelSelect channels);

enum class ChamberSource { HIP, NAc, Wcoh };
enum class ChamberModel { Tree, Mlp };
std::string_view to_string(ChamberSource s);
std::string_view to_string(ChamberModel m);

struct ChambersOptions {
  std::vector<ChamberSource> sources{ChamberSource::HIP, ChamberSource::NAc, ChamberSource::Wcoh};
  ChamberModel model = ChamberModel::Tree;
  std::vector<Group> groups{Group::Saline, Group::Morphine, Group::Food};
  std::vector<Phase> phases{Phase::PostTest};
  bool perRat = false;
};

struct ChamberCell {
  ChamberSource source = ChamberSource::HIP;
  Group group = Group::Saline;
  ConfusionMatrix confusion;
  ConfusionStats stats;
  double accuracy = 0.0; // macro TPR; mean over rats with --per-rat
  std::optional<TreeComplexity> complexity;
};

struct ChambersResult {
  std::vector<ChamberCell> cells;
  std::vector<std::filesystem::path> outputs;
};

ChambersResult cmd_chambers(const RunConfig &config, const ChambersOptions &options);

// Twelve channel x phase x group classes in confusion-chart order.
std::vector<std::string> joint_class_names();
int joint_class_index(const SegmentLabels &labels);

struct JointOptions {
  bool shuffleLabels = false;
  std::optional<std::filesystem::path> fromCounts;
};

struct JointResult {
  ConfusionMatrix confusion;
  ConfusionStats stats;
  std::filesystem::path output;
};

JointResult cmd_joint(const RunConfig &config, const JointOptions &options);
// Classification stage on an existing scattering table (no file output).
JointResult joint_from_features(const FeatureTable &table, const RunConfig &config,
                                const JointOptions &options);
Dataset joint_dataset(const FeatureTable &table);

struct ReportOptions {
  double start = 0.0;     // seconds
  double duration = 10.0; // seconds; clipped to the session
  double overlayThreshold = 0.7;
  bool gridCsv = false;
};

std::vector<std::filesystem::path> cmd_report(const RunConfig &config, const ReportOptions &options);

} // namespace wavescat
