#include "wavescat/pipeline.hpp"

#include "wavescat/errors.hpp"
#include "wavescat/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace wavescat {

namespace fs = std::filesystem;

// ------------------------------------------------------------ config

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("--seed is required");
  return *seed;
}

std::string RunConfig::metadata(std::string_view command,
                                const std::vector<std::pair<std::string, std::string>> &extra) const {
  std::string hidden;
  for (std::size_t i = 0; i < mlp.hidden.size(); ++i)
    hidden += fmt::format("{}{}", i ? ":" : "", mlp.hidden[i]);
  std::string names;
  for (const auto &n : input_names(inputs)) names += (names.empty() ? "" : ";") + n;
  std::string out = fmt::format(
      "command={} seed={} k={} window={} hop={} gamma={} p2={} voices={} "
      "fmin={} fmax={} smooth_time_cycles={} smooth_scale_octaves={} scat_T={} scat_q1={} "
      "scat_q2={} scat_fmin={} scat_fmax={} scat_gamma1={} scat_p2_1={} scat_gamma2={} "
      "scat_p2_2={} tree_max_depth={} tree_min_leaf={} mlp_hidden={} mlp_epochs={} mlp_lr={} "
      "svm_c={} svm_tol={} svm_max_iter={} cwt_features=mean+var wcoh_features=mean+circmean",
      command, seed ? fmt::format("{}", *seed) : std::string("none"), k, segmentation.windowLen,
      segmentation.hop, wavelet.gamma, wavelet.timeBandwidth, voicesPerOctave, fmin, fmax,
      smoothing.timeCycles, smoothing.scaleOctaves, scattering.invarianceScale, scattering.q1,
      scattering.q2, scattering.fmin, scattering.fmax, scattering.wavelet1.gamma,
      scattering.wavelet1.timeBandwidth, scattering.wavelet2.gamma,
      scattering.wavelet2.timeBandwidth, tree.maxDepth, tree.minLeaf, hidden, mlp.epochs,
      mlp.learningRate, svm.C, svm.tol, svm.maxIter);
  for (const auto &[key, value] : extra) out += fmt::format(" {}={}", key, value);
  out += fmt::format(" inputs={}", names.empty() ? "none" : names);
  return out;
}

void write_file_atomic(const fs::path &path, const std::function<void(std::ostream &)> &writer) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec)
      throw DataError(fmt::format("cannot create directory {}: {}", path.parent_path().string(),
                                  ec.message()));
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write {}", tmp.string()));
    writer(out);
    out.flush();
    if (!out) throw DataError(fmt::format("write failed for {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError(fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(), ec.message()));
}

namespace {

std::vector<fs::path> expand_inputs(const std::vector<fs::path> &inputs) {
  std::vector<fs::path> files;
  for (const auto &in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto &e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".wscat") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw DataError(fmt::format("input {} does not exist", in.string()));
    }
  }
  return files;
}

void require_out(const RunConfig &config) {
  if (config.out.empty()) throw ConfigError("--out is required");
}

std::size_t bank_length(std::size_t samples) { return next_pow2(samples); }

// Indices of the cells of scale j to average over.
template <typename F> void for_each_feature_cell(const TimeFrequencyAxes &axes, std::size_t j, F &&f) {
  bool any = false;
  for (std::size_t t = 0; t < axes.length; ++t)
    if (axes.valid(j, t)) {
      any = true;
      f(t);
    }
  if (!any)
    for (std::size_t t = 0; t < axes.length; ++t) f(t);
}

std::string freq_name(std::string_view prefix, double f) { return fmt::format("{}[{:.4g}]", prefix, f); }

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string chamber_class_name(Chamber c) { return std::string(display_name(c)); }

Dataset table_dataset(const FeatureTable &table, const std::vector<int> &labels,
                      std::vector<std::string> classNames) {
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(table.features.rows()),
                    static_cast<Eigen::Index>(table.features.cols()));
  for (std::size_t r = 0; r < table.features.rows(); ++r)
    for (std::size_t c = 0; c < table.features.cols(); ++c)
      d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.features(r, c);
  d.labels = labels;
  d.classNames = std::move(classNames);
  d.groups = table.ratIds;
  return d;
}

FeatureTable select_rows(const FeatureTable &table, const std::vector<std::size_t> &rows) {
  FeatureTable out;
  out.columns = table.columns;
  out.features = Grid<double>(rows.size(), table.features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(table.features.row(rows[i]).begin(), table.features.row(rows[i]).end(),
              out.features.row(i).begin());
    out.labels.push_back(table.labels[rows[i]]);
    out.ratIds.push_back(table.ratIds[rows[i]]);
  }
  return out;
}

} // namespace

std::vector<std::string> input_names(const std::vector<fs::path> &inputs) {
  std::vector<std::string> names;
  for (const auto &p : inputs) names.push_back(p.filename().string().empty() ? p.parent_path().filename().string()
                                                                            : p.filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<RecordingSession> load_sessions(const std::vector<fs::path> &inputs) {
  const auto files = expand_inputs(inputs);
  if (files.empty()) throw DataError("no session bundles given");
  std::vector<RecordingSession> sessions;
  for (const auto &f : files) sessions.push_back(load_session(f));
  std::sort(sessions.begin(), sessions.end(), [](const RecordingSession &a, const RecordingSession &b) {
    return std::tie(a.ratId, a.group, a.phase) < std::tie(b.ratId, b.group, b.phase);
  });
  for (std::size_t i = 1; i < sessions.size(); ++i) {
    const auto &a = sessions[i - 1], &b = sessions[i];
    if (a.ratId == b.ratId && a.group == b.group && a.phase == b.phase)
      throw DataError(fmt::format("duplicate session for rat {} ({} {})", a.ratId, to_token(a.group),
                                  to_token(a.phase)));
  }
  return sessions;
}

std::vector<Segment> segment_sessions(const std::vector<RecordingSession> &sessions,
                                      const SegmentationConfig &config) {
  std::vector<Segment> out;
  for (const auto &s : sessions) {
    auto segs = segment_by_chamber(s, config);
    std::move(segs.begin(), segs.end(), std::back_inserter(out));
  }
  return out;
}

// ------------------------------------------------------------ features

std::vector<double> cwt_features(std::span<const double> x, const FilterBank &bank) {
  const Scalogram s = cwt(x, bank);
  const std::size_t m = s.axes.scales();
  std::vector<double> out(2 * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for_each_feature_cell(s.axes, j, [&](std::size_t t) {
      const double a = std::abs(s.coefficients(j, t));
      sum += a;
      sq += a * a;
      ++count;
    });
    const double mean = sum / static_cast<double>(count);
    out[j] = mean;
    out[m + j] = std::max(0.0, sq / static_cast<double>(count) - mean * mean);
  }
  return out;
}

std::vector<std::string> cwt_feature_names(const FilterBank &bank) {
  std::vector<std::string> names;
  for (double f : bank.centerFrequencies()) names.push_back(freq_name("cwt_mean", f));
  for (double f : bank.centerFrequencies()) names.push_back(freq_name("cwt_var", f));
  return names;
}

std::vector<double> wcoh_features(std::span<const double> hip, std::span<const double> nac,
                                  const FilterBank &bank, const SmoothingKernel &kernel) {
  const CoherenceMap map = coherence(cwt(hip, bank), cwt(nac, bank), kernel);
  const std::size_t m = map.axes.scales();
  std::vector<double> out(2 * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0, c = 0.0, s = 0.0;
    std::size_t count = 0;
    for_each_feature_cell(map.axes, j, [&](std::size_t t) {
      sum += map.coherence(j, t);
      ++count;
      const double ph = map.phase(j, t);
      if (std::isfinite(ph)) {
        c += std::cos(ph);
        s += std::sin(ph);
      }
    });
    out[j] = sum / static_cast<double>(count);
    out[m + j] = (c == 0.0 && s == 0.0) ? 0.0 : std::atan2(s, c);
  }
  return out;
}

std::vector<std::string> wcoh_feature_names(const FilterBank &bank) {
  std::vector<std::string> names;
  for (double f : bank.centerFrequencies()) names.push_back(freq_name("wcoh_mean", f));
  for (double f : bank.centerFrequencies()) names.push_back(freq_name("wcoh_phase", f));
  return names;
}

namespace {

std::size_t common_length(std::span<const Segment> segments) {
  if (segments.empty()) throw DataError("no segments to extract features from");
  const std::size_t len = segments.front().samples.size();
  for (const auto &s : segments)
    if (s.samples.size() != len) throw DataError("segments have differing lengths");
  return len;
}

std::vector<std::size_t> channel_rows(std::span<const Segment> segments, ChannelSelect channels) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Channel c = segments[i].labels.channel;
    if (channels == ChannelSelect::Both || (channels == ChannelSelect::HIP && c == Channel::HIP) ||
        (channels == ChannelSelect::NAc && c == Channel::NAc))
      rows.push_back(i);
  }
  return rows;
}

} // namespace

FeatureTable cwt_feature_table(std::span<const Segment> segments, const RunConfig &config,
                               ChannelSelect channels) {
  const std::size_t len = common_length(segments);
  const FilterBank bank = build_filterbank(bank_length(len), segments.front().fs, config.wavelet,
                                           config.voicesPerOctave, config.fmin, config.fmax);
  const auto rows = channel_rows(segments, channels);
  FeatureTable table;
  table.columns = cwt_feature_names(bank);
  table.features = Grid<double>(rows.size(), table.columns.size());
  for (std::size_t r : rows) {
    table.labels.push_back(segments[r].labels);
    table.ratIds.push_back(segments[r].ratId);
  }
  parallel_for(rows.size(), config.threads, [&](std::size_t i) {
    const auto f = cwt_features(segments[rows[i]].samples, bank);
    std::copy(f.begin(), f.end(), table.features.row(i).begin());
  });
  return table;
}

FeatureTable wcoh_feature_table(std::span<const Segment> segments, const RunConfig &config) {
  const std::size_t len = common_length(segments);
  if (segments.size() % 2 != 0) throw DataError("wcoh needs HIP/NAc segment pairs");
  for (std::size_t i = 0; i < segments.size(); i += 2) {
    const auto &h = segments[i], &n = segments[i + 1];
    if (h.labels.channel != Channel::HIP || n.labels.channel != Channel::NAc ||
        h.startTime != n.startTime || h.ratId != n.ratId)
      throw DataError("wcoh needs both channels for every window");
  }
  const FilterBank bank = build_filterbank(bank_length(len), segments.front().fs, config.wavelet,
                                           config.voicesPerOctave, config.fmin, config.fmax);
  const Scalogram probe = cwt(segments.front().samples, bank);
  const SmoothingKernel kernel = SmoothingKernel::from_spec(config.smoothing, probe.axes);
  const std::size_t count = segments.size() / 2;
  FeatureTable table;
  table.columns = wcoh_feature_names(bank);
  table.features = Grid<double>(count, table.columns.size());
  for (std::size_t i = 0; i < count; ++i) {
    table.labels.push_back(segments[2 * i].labels);
    table.ratIds.push_back(segments[2 * i].ratId);
  }
  parallel_for(count, config.threads, [&](std::size_t i) {
    const auto f = wcoh_features(segments[2 * i].samples, segments[2 * i + 1].samples, bank, kernel);
    std::copy(f.begin(), f.end(), table.features.row(i).begin());
  });
  return table;
}

FeatureTable scatter_feature_table(std::span<const Segment> segments, const RunConfig &config,
                                   ChannelSelect channels) {
  common_length(segments);
  const auto rows = channel_rows(segments, channels);
  std::vector<Segment> picked;
  picked.reserve(rows.size());
  for (std::size_t r : rows) picked.push_back(segments[r]);
  ScatteringParams params = config.scattering;
  params.fs = segments.front().fs;
  return feature_matrix(picked, params, config.threads);
}

// ------------------------------------------------------------ commands

std::vector<fs::path> cmd_synth(const SynthSpec &spec, const fs::path &out) {
  if (out.empty()) throw ConfigError("--out is required");
  auto paths = generate_cohort(spec, out);
  return paths;
}

std::string_view to_string(FeatureKind k) {
  switch (k) {
  case FeatureKind::Cwt: return "cwt";
  case FeatureKind::Wcoh: return "wcoh";
  case FeatureKind::Scatter: return "scatter";
  }
  return "?";
}

namespace {

std::string_view channel_select_token(ChannelSelect c) {
  switch (c) {
  case ChannelSelect::HIP: return "hip";
  case ChannelSelect::NAc: return "nac";
  case ChannelSelect::Both: return "both";
  }
  return "?";
}

} // namespace

fs::path cmd_features(const RunConfig &config, FeatureKind kind, ChannelSelect channels) {
  require_out(config);
  const auto sessions = load_sessions(config.inputs);
  const auto segments = segment_sessions(sessions, config.segmentation);
  FeatureTable table;
  switch (kind) {
  case FeatureKind::Cwt: table = cwt_feature_table(segments, config, channels); break;
  case FeatureKind::Wcoh: table = wcoh_feature_table(segments, config); break;
  case FeatureKind::Scatter: table = scatter_feature_table(segments, config, channels); break;
  }
  const std::string stem = kind == FeatureKind::Wcoh
                               ? std::string("features_wcoh")
                               : fmt::format("features_{}_{}", to_string(kind), channel_select_token(channels));
  const fs::path path = config.out / (stem + ".csv");
  const std::string meta =
      config.metadata("features", {{"kind", std::string(to_string(kind))},
                                   {"channel", std::string(kind == FeatureKind::Wcoh ? "hip+nac" : channel_select_token(channels))}});
  write_file_atomic(path, [&](std::ostream &o) { write_feature_csv(o, table, meta); });
  return path;
}

std::string_view to_string(ChamberSource s) {
  switch (s) {
  case ChamberSource::HIP: return "hip";
  case ChamberSource::NAc: return "nac";
  case ChamberSource::Wcoh: return "wcoh";
  }
  return "?";
}

std::string_view to_string(ChamberModel m) { return m == ChamberModel::Tree ? "dt" : "mlp"; }

namespace {

const std::vector<Chamber> kChamberOrder{Chamber::Rewarded, Chamber::Null, Chamber::Unrewarded};

int chamber_class(Chamber c) {
  return static_cast<int>(std::find(kChamberOrder.begin(), kChamberOrder.end(), c) - kChamberOrder.begin());
}

std::vector<std::string> chamber_class_names() {
  std::vector<std::string> names;
  for (Chamber c : kChamberOrder) names.push_back(chamber_class_name(c));
  return names;
}

struct CellRun {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::optional<TreeComplexity> complexity;
};

CellRun run_chamber_dataset(const Dataset &data, const RunConfig &config, ChamberModel model,
                            std::uint64_t seed, const std::string &what) {
  std::vector<std::size_t> present(3, 0);
  for (int y : data.labels) ++present[static_cast<std::size_t>(y)];
  std::vector<std::string> absent;
  for (std::size_t c = 0; c < 3; ++c)
    if (present[c] == 0) absent.push_back(data.classNames[c]);
  if (!absent.empty()) {
    std::string list;
    for (const auto &a : absent) list += (list.empty() ? "" : ", ") + a;
    throw DataError(fmt::format("{}: chamber class absent in data: {}", what, list));
  }
  KFoldOptions ko;
  ko.k = config.k;
  ko.seed = seed;
  ko.threads = config.threads;
  CellRun run;
  if (model == ChamberModel::Tree) {
    run.confusion = run_kfold(data, config.tree, ko);
    run.complexity = tree_complexity(train_tree(data, config.tree));
  } else {
    MlpConfig mc = config.mlp;
    mc.seed = mix_seed(seed, 0x6d6c70);
    run.confusion = run_kfold(data, mc, ko);
  }
  run.accuracy = confusion_stats(run.confusion).macroAccuracy;
  return run;
}

} // namespace

ChambersResult cmd_chambers(const RunConfig &config, const ChambersOptions &options) {
  require_out(config);
  const std::uint64_t seed = config.require_seed();
  if (options.sources.empty() || options.groups.empty() || options.phases.empty())
    throw ConfigError("chambers: sources, groups and phases must be non-empty");
  const auto all = load_sessions(config.inputs);
  ChambersResult result;
  const std::string meta = config.metadata(
      "chambers", {{"model", std::string(to_string(options.model))},
                   {"per_rat", options.perRat ? "1" : "0"},
                   {"phases", [&] {
                      std::string s;
                      for (Phase p : options.phases) s += (s.empty() ? "" : "+") + std::string(to_token(p));
                      return s;
                    }()}});

  for (Group g : options.groups) {
    std::vector<RecordingSession> sessions;
    for (const auto &s : all)
      if (s.group == g && std::find(options.phases.begin(), options.phases.end(), s.phase) != options.phases.end())
        sessions.push_back(s);
    if (sessions.empty())
      throw DataError(fmt::format("chambers: no sessions for group {}", to_token(g)));
    const auto segments = segment_sessions(sessions, config.segmentation);
    for (ChamberSource src : options.sources) {
      FeatureTable table = src == ChamberSource::Wcoh
                               ? wcoh_feature_table(segments, config)
                               : cwt_feature_table(segments, config,
                                                   src == ChamberSource::HIP ? ChannelSelect::HIP : ChannelSelect::NAc);
      const std::uint64_t cellSeed = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(g)),
                                              static_cast<std::uint64_t>(src));
      ChamberCell cell;
      cell.source = src;
      cell.group = g;
      const std::string what = fmt::format("{} {}", to_token(g), to_string(src));
      if (!options.perRat) {
        std::vector<int> labels;
        for (const auto &l : table.labels) labels.push_back(chamber_class(l.chamber));
        const CellRun run = run_chamber_dataset(table_dataset(table, labels, chamber_class_names()),
                                                config, options.model, cellSeed, what);
        cell.confusion = run.confusion;
        cell.accuracy = run.accuracy;
        cell.complexity = run.complexity;
      } else {
        std::vector<std::string> rats(table.ratIds);
        std::sort(rats.begin(), rats.end());
        rats.erase(std::unique(rats.begin(), rats.end()), rats.end());
        cell.confusion = {chamber_class_names(), Grid<std::int64_t>(3, 3)};
        double accSum = 0.0, leafSum = 0.0, nodeSum = 0.0, depthSum = 0.0;
        for (const auto &rat : rats) {
          std::vector<std::size_t> rows;
          for (std::size_t i = 0; i < table.ratIds.size(); ++i)
            if (table.ratIds[i] == rat) rows.push_back(i);
          const FeatureTable sub = select_rows(table, rows);
          std::vector<int> labels;
          for (const auto &l : sub.labels) labels.push_back(chamber_class(l.chamber));
          const CellRun run = run_chamber_dataset(table_dataset(sub, labels, chamber_class_names()), config,
                                                  options.model, mix_seed(cellSeed, stable_hash(rat)),
                                                  fmt::format("{} rat {}", what, rat));
          for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) cell.confusion.counts(i, j) += run.confusion.counts(i, j);
          accSum += run.accuracy;
          if (run.complexity) {
            leafSum += static_cast<double>(run.complexity->leaves);
            nodeSum += static_cast<double>(run.complexity->nodes);
            depthSum += static_cast<double>(run.complexity->depth);
          }
        }
        const double n = static_cast<double>(rats.size());
        cell.accuracy = accSum / n;
        if (options.model == ChamberModel::Tree) {
          TreeComplexity tc;
          tc.leaves = static_cast<std::size_t>(std::llround(leafSum / n));
          tc.nodes = static_cast<std::size_t>(std::llround(nodeSum / n));
          tc.depth = static_cast<std::size_t>(std::llround(depthSum / n));
          const ComplexityThresholds th;
          tc.grade = tc.leaves <= th.lowMaxLeaves   ? ComplexityGrade::Low
                     : tc.leaves <= th.midMaxLeaves ? ComplexityGrade::Mid
                                                    : ComplexityGrade::High;
          cell.complexity = tc;
        }
      }
      cell.stats = confusion_stats(cell.confusion);
      const fs::path path = config.out / fmt::format("chambers_{}_{}_{}_confusion.csv", to_string(options.model),
                                                     to_string(src), to_token(g));
      write_file_atomic(path, [&](std::ostream &o) { write_confusion_csv(o, cell.confusion, cell.stats, meta); });
      result.outputs.push_back(path);
      result.cells.push_back(std::move(cell));
    }
  }

  // Table layout: rows = feature source, columns = groups.
  const auto cell_at = [&](ChamberSource s, Group g) -> const ChamberCell & {
    for (const auto &c : result.cells)
      if (c.source == s && c.group == g) return c;
    throw DataError("missing chamber cell");
  };
  const fs::path table = config.out / fmt::format("chambers_{}_accuracy.csv", to_string(options.model));
  write_file_atomic(table, [&](std::ostream &o) {
    o << "# wavescat-config: " << meta << "\nsource";
    for (Group g : options.groups) o << ',' << display_name(g);
    o << '\n';
    for (ChamberSource s : options.sources) {
      o << to_string(s);
      for (Group g : options.groups) o << fmt::format(",{:.4f}", cell_at(s, g).accuracy);
      o << '\n';
    }
  });
  result.outputs.push_back(table);
  if (options.model == ChamberModel::Tree) {
    const fs::path cx = config.out / "chambers_dt_complexity.csv";
    write_file_atomic(cx, [&](std::ostream &o) {
      o << "# wavescat-config: " << meta << "\nsource,group,nodes,leaves,depth,complexity\n";
      for (ChamberSource s : options.sources)
        for (Group g : options.groups) {
          const auto &c = *cell_at(s, g).complexity;
          o << fmt::format("{},{},{},{},{},{}\n", to_string(s), display_name(g), c.nodes, c.leaves, c.depth,
                           to_string(c.grade));
        }
    });
    result.outputs.push_back(cx);
  }
  return result;
}

// ------------------------------------------------------------ joint

namespace {

constexpr std::array<Group, 3> kJointGroups{Group::Morphine, Group::Food, Group::Saline};
constexpr std::array<Phase, 2> kJointPhases{Phase::PostTest, Phase::PreTest};
constexpr std::array<Channel, 2> kJointChannels{Channel::HIP, Channel::NAc};

} // namespace

std::vector<std::string> joint_class_names() {
  std::vector<std::string> names;
  for (Channel c : kJointChannels)
    for (Phase p : kJointPhases)
      for (Group g : kJointGroups)
        names.push_back(fmt::format("{}-{}-{}", display_name(c), display_name(p), display_name(g)));
  return names;
}

int joint_class_index(const SegmentLabels &l) {
  const auto ci = static_cast<int>(std::find(kJointChannels.begin(), kJointChannels.end(), l.channel) - kJointChannels.begin());
  const auto pi = static_cast<int>(std::find(kJointPhases.begin(), kJointPhases.end(), l.phase) - kJointPhases.begin());
  const auto gi = static_cast<int>(std::find(kJointGroups.begin(), kJointGroups.end(), l.group) - kJointGroups.begin());
  return (ci * 2 + pi) * 3 + gi;
}

Dataset joint_dataset(const FeatureTable &table) {
  std::vector<int> labels;
  for (const auto &l : table.labels) labels.push_back(joint_class_index(l));
  Dataset d = table_dataset(table, labels, joint_class_names());
  std::vector<bool> seen(d.classes(), false);
  for (int y : d.labels) seen[static_cast<std::size_t>(y)] = true;
  std::string missing;
  for (std::size_t c = 0; c < seen.size(); ++c)
    if (!seen[c]) missing += (missing.empty() ? "" : ", ") + d.classNames[c];
  if (!missing.empty()) throw DataError(fmt::format("joint: absent classes: {}", missing));
  return d;
}

JointResult joint_from_features(const FeatureTable &table, const RunConfig &config,
                                const JointOptions &options) {
  const std::uint64_t seed = config.require_seed();
  Dataset data = joint_dataset(table);
  if (options.shuffleLabels) {
    Rng rng(mix_seed(seed, 0x73687566));
    rng.shuffle(std::span<int>(data.labels));
  }
  KFoldOptions ko;
  ko.k = config.k;
  ko.seed = seed;
  ko.threads = config.threads;
  SvmConfig svm = config.svm;
  svm.seed = mix_seed(seed, 0x73766d);
  JointResult r;
  r.confusion = run_kfold(data, svm, ko);
  r.stats = confusion_stats(r.confusion);
  return r;
}

JointResult cmd_joint(const RunConfig &config, const JointOptions &options) {
  require_out(config);
  JointResult r;
  std::vector<std::pair<std::string, std::string>> extra;
  if (options.fromCounts) {
    std::ifstream in(*options.fromCounts);
    if (!in) throw DataError(fmt::format("cannot read {}", options.fromCounts->string()));
    r.confusion = read_confusion_csv(in);
    r.stats = confusion_stats(r.confusion);
    extra.emplace_back("from_counts", options.fromCounts->filename().string());
  } else {
    config.require_seed();
    const auto sessions = load_sessions(config.inputs);
    const auto segments = segment_sessions(sessions, config.segmentation);
    const FeatureTable table = scatter_feature_table(segments, config, ChannelSelect::Both);
    r = joint_from_features(table, config, options);
    extra.emplace_back("shuffle_labels", options.shuffleLabels ? "1" : "0");
  }
  const std::string meta = config.metadata("joint", extra);
  r.output = config.out / (options.shuffleLabels ? "joint_confusion_shuffled.csv" : "joint_confusion.csv");
  write_file_atomic(r.output, [&](std::ostream &o) { write_confusion_csv(o, r.confusion, r.stats, meta); });
  return r;
}

// ------------------------------------------------------------ report

std::vector<fs::path> cmd_report(const RunConfig &config, const ReportOptions &options) {
  require_out(config);
  if (!(options.duration > 0.0) || !(options.start >= 0.0))
    throw ConfigError("report: start must be >= 0 and duration > 0");
  const auto sessions = load_sessions(config.inputs);
  const std::string meta = config.metadata(
      "report", {{"start", fmt::format("{}", options.start)},
                 {"duration", fmt::format("{}", options.duration)},
                 {"overlay_threshold", fmt::format("{}", options.overlayThreshold)}});
  std::vector<fs::path> outputs;
  for (const auto &s : sessions) {
    const std::size_t n = s.hip.samples.size();
    const auto begin = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(options.start * s.fs())));
    const auto end = std::min<std::size_t>(n, begin + static_cast<std::size_t>(std::llround(options.duration * s.fs())));
    if (end - begin < 4) throw DataError(fmt::format("report: window outside session rat {}", s.ratId));
    const std::span<const double> hip(s.hip.samples.data() + begin, end - begin);
    const std::span<const double> nac(s.nac.samples.data() + begin, end - begin);
    const FilterBank bank =
        build_filterbank(end - begin, s.fs(), config.wavelet, config.voicesPerOctave, config.fmin, config.fmax);
    const Scalogram ch = cwt(hip, bank), cn = cwt(nac, bank);
    const CoherenceMap map = coherence(ch, cn, SmoothingKernel::from_spec(config.smoothing, ch.axes));
    const std::string stem = fmt::format("rat{}_{}_{}", s.ratId, to_token(s.group), to_token(s.phase));

    const auto emit = [&](const std::string &name, const std::function<void(std::ostream &)> &w) {
      const fs::path p = config.out / (stem + name);
      write_file_atomic(p, w);
      outputs.push_back(p);
    };
    for (const auto &[tag, sc] : {std::pair<std::string, const Scalogram *>{"hip", &ch}, {"nac", &cn}}) {
      const Grid<double> mag = scalogram_magnitude(*sc);
      const double full = *std::max_element(mag.data().begin(), mag.data().end());
      emit(fmt::format("_{}_scalogram.pgm", tag),
           [&](std::ostream &o) { write_pgm(o, mag, full > 0.0 ? full : 1.0, meta); });
      if (options.gridCsv)
        emit(fmt::format("_{}_scalogram.csv", tag), [&](std::ostream &o) { write_grid_csv(o, sc->axes, mag, meta); });
    }
    emit("_coherence.pgm", [&](std::ostream &o) { write_pgm(o, map.coherence, 1.0, meta); });
    if (options.gridCsv)
      emit("_coherence.csv", [&](std::ostream &o) { write_grid_csv(o, map.axes, map.coherence, meta); });
    emit("_overlay.csv", [&](std::ostream &o) {
      write_overlay_csv(o, phase_overlay(map, options.overlayThreshold), meta);
    });
    emit("_coi.csv", [&](std::ostream &o) {
      o << "# wavescat-config: " << meta << "\nt,coi_freq_hz\n";
      const auto coi = ch.axes.coi();
      const auto t = ch.axes.timeAxis();
      for (std::size_t i = 0; i < ch.axes.length; ++i) o << fmt::format("{},{}\n", t[i] + options.start, coi[i]);
    });
  }
  return outputs;
}

} // namespace wavescat
