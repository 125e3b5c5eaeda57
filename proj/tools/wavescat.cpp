#include "wavescat/errors.hpp"
#include "wavescat/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <iostream>
#include <map>

using namespace wavescat;

namespace {

enum Exit { Ok = 0, Usage = 2, Data = 3, Numerical = 4 };

void add_run_options(CLI::App &cmd, RunConfig &rc, std::vector<std::string> &inputs,
                     std::string &out, std::uint64_t &seed) {
  cmd.add_option("inputs", inputs, "session bundles or directories of *.wscat");
  cmd.add_option("--out", out, "output directory")->required();
  cmd.add_option("--seed", seed, "random seed");
  cmd.add_option("--k", rc.k, "cross-validation folds")->check(CLI::Range(2, 1 << 30));
  cmd.add_option("--threads", rc.threads, "worker threads (results do not depend on this)");
  cmd.add_option("--window", rc.segmentation.windowLen, "segment length, seconds");
  cmd.add_option("--hop", rc.segmentation.hop, "segment hop, seconds");
  cmd.add_option("--gamma", rc.wavelet.gamma, "Morse gamma");
  cmd.add_option("--p2", rc.wavelet.timeBandwidth, "Morse time-bandwidth product P^2");
  cmd.add_option("--voices", rc.voicesPerOctave, "CWT voices per octave");
  cmd.add_option("--fmin", rc.fmin, "CWT lowest center frequency, Hz");
  cmd.add_option("--fmax", rc.fmax, "CWT highest center frequency, Hz");
  cmd.add_option("--smooth-time", rc.smoothing.timeCycles, "coherence time smoothing, cycles");
  cmd.add_option("--smooth-scale", rc.smoothing.scaleOctaves, "coherence scale smoothing, octaves");
  cmd.add_option("--scat-T", rc.scattering.invarianceScale, "scattering invariance scale, seconds");
  cmd.add_option("--scat-q1", rc.scattering.q1, "scattering first-order wavelets per octave");
  cmd.add_option("--scat-q2", rc.scattering.q2, "scattering second-order wavelets per octave");
  cmd.add_option("--scat-fmin", rc.scattering.fmin, "scattering lowest wavelet center, Hz");
  cmd.add_option("--scat-fmax", rc.scattering.fmax, "scattering highest wavelet center, Hz");
  cmd.add_option("--tree-max-depth", rc.tree.maxDepth, "decision tree depth limit");
  cmd.add_option("--tree-min-leaf", rc.tree.minLeaf, "decision tree minimum leaf size");
  cmd.add_option("--mlp-hidden", rc.mlp.hidden, "MLP hidden layer sizes")->delimiter(',');
  cmd.add_option("--mlp-epochs", rc.mlp.epochs, "MLP full-batch epochs");
  cmd.add_option("--mlp-lr", rc.mlp.learningRate, "MLP learning rate");
  cmd.add_option("--svm-c", rc.svm.C, "SVM soft-margin penalty C");
  cmd.add_option("--svm-tol", rc.svm.tol, "SVM relative duality-gap tolerance");
  cmd.add_option("--svm-max-iter", rc.svm.maxIter, "SVM epoch limit");
}

void finish_run(RunConfig &rc, const std::vector<std::string> &inputs, const std::string &out,
                const CLI::App &cmd, std::uint64_t seed) {
  for (const auto &i : inputs) rc.inputs.emplace_back(i);
  rc.out = out;
  if (cmd.count("--seed") > 0) rc.seed = seed;
}

template <typename E>
E parse_enum(const std::string &value, const std::map<std::string, E> &table, const char *what) {
  const auto it = table.find(value);
  if (it == table.end()) throw ConfigError(fmt::format("unknown {} '{}'", what, value));
  return it->second;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"wavescat: wavelet feature extraction and classification of two-channel LFP sessions"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file (flags override)");
  app.option_defaults()->always_capture_default();

  // synth
  SynthSpec spec;
  std::string synthOut, synthConfig;
  auto *synth = app.add_subcommand("synth", "generate a synthetic cohort");
  synth->option_defaults()->always_capture_default();
  synth->add_option("--out", synthOut, "output directory")->required();
  synth->add_option("--seed", spec.seed, "random seed")->required();
  synth->add_option("--delta", spec.delta, "class separability in [0, 1]");
  synth->add_option("--fs", spec.fs, "sampling rate, Hz");
  synth->add_option("--session-len", spec.sessionLen, "session length, seconds");
  synth->add_option("--rats-saline", spec.ratsSaline, "saline rats");
  synth->add_option("--rats-morphine", spec.ratsMorphine, "morphine rats");
  synth->add_option("--rats-food", spec.ratsFood, "food rats");
  synth->add_option("--mean-dwell", spec.meanDwell, "mean chamber dwell, seconds");

  // features
  RunConfig featRc;
  std::vector<std::string> featIn;
  std::string featOut, featKind = "scatter", featChannel = "both";
  std::uint64_t featSeed = 0;
  auto *features = app.add_subcommand("features", "export per-segment feature tables");
  features->option_defaults()->always_capture_default();
  features->add_option("kind", featKind, "cwt | wcoh | scatter")->required()->check(CLI::IsMember({"cwt", "wcoh", "scatter"}));
  add_run_options(*features, featRc, featIn, featOut, featSeed);
  features->add_option("--channel", featChannel, "hip | nac | both (cwt, scatter)")->check(CLI::IsMember({"hip", "nac", "both"}));

  // chambers
  RunConfig chRc;
  std::vector<std::string> chIn;
  std::string chOut, chModel = "dt";
  std::vector<std::string> chSources{"hip", "nac", "wcoh"}, chGroups{"saline", "morphine", "food"}, chPhases{"post"};
  std::uint64_t chSeed = 0;
  bool perRat = false;
  auto *chambers = app.add_subcommand("chambers", "3-way chamber classification per group and feature source");
  chambers->option_defaults()->always_capture_default();
  add_run_options(*chambers, chRc, chIn, chOut, chSeed);
  chambers->add_option("--model", chModel, "dt | mlp")->check(CLI::IsMember({"dt", "mlp"}));
  chambers->add_option("--source", chSources, "hip, nac, wcoh")->delimiter(',');
  chambers->add_option("--group", chGroups, "saline, morphine, food")->delimiter(',');
  chambers->add_option("--phase", chPhases, "pre, post")->delimiter(',');
  chambers->add_flag("--per-rat", perRat, "cross-validate each rat separately");

  // joint
  RunConfig jRc;
  std::vector<std::string> jIn;
  std::string jOut, fromCounts;
  std::uint64_t jSeed = 0;
  bool shuffle = false;
  auto *joint = app.add_subcommand("joint", "12-way channel x phase x group classification");
  joint->option_defaults()->always_capture_default();
  add_run_options(*joint, jRc, jIn, jOut, jSeed);
  joint->add_flag("--shuffle-labels", shuffle, "permute labels (chance-level control)");
  joint->add_option("--from-counts", fromCounts, "recompute statistics from a confusion-count CSV");

  // report
  RunConfig rRc;
  std::vector<std::string> rIn;
  std::string rOut;
  std::uint64_t rSeed = 0;
  ReportOptions ro;
  auto *report = app.add_subcommand("report", "scalogram/coherence images and overlay CSVs");
  report->option_defaults()->always_capture_default();
  add_run_options(*report, rRc, rIn, rOut, rSeed);
  report->add_option("--start", ro.start, "window start, seconds");
  report->add_option("--duration", ro.duration, "window length, seconds");
  report->add_option("--overlay-threshold", ro.overlayThreshold, "minimum coherence for phase arrows");
  report->add_flag("--grid-csv", ro.gridCsv, "also write full scalogram/coherence grids as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    std::cerr << app.help();
    return Usage;
  }

  try {
    if (*synth) {
      const auto paths = cmd_synth(spec, synthOut);
      std::cout << fmt::format("wrote {} session bundles to {}\n", paths.size(), synthOut);
    } else if (*features) {
      finish_run(featRc, featIn, featOut, *features, featSeed);
      const FeatureKind kind = parse_enum<FeatureKind>(
          featKind, {{"cwt", FeatureKind::Cwt}, {"wcoh", FeatureKind::Wcoh}, {"scatter", FeatureKind::Scatter}}, "feature kind");
      const ChannelSelect ch = parse_enum<ChannelSelect>(
          featChannel, {{"hip", ChannelSelect::HIP}, {"nac", ChannelSelect::NAc}, {"both", ChannelSelect::Both}}, "channel");
      std::cout << "wrote " << cmd_features(featRc, kind, ch).string() << '\n';
    } else if (*chambers) {
      finish_run(chRc, chIn, chOut, *chambers, chSeed);
      ChambersOptions co;
      co.model = chModel == "dt" ? ChamberModel::Tree : ChamberModel::Mlp;
      co.perRat = perRat;
      co.sources.clear();
      for (const auto &s : chSources)
        co.sources.push_back(parse_enum<ChamberSource>(
            s, {{"hip", ChamberSource::HIP}, {"nac", ChamberSource::NAc}, {"wcoh", ChamberSource::Wcoh}}, "source"));
      co.groups.clear();
      for (const auto &g : chGroups) co.groups.push_back(parse_group(g));
      co.phases.clear();
      for (const auto &p : chPhases) co.phases.push_back(parse_phase(p));
      const auto result = cmd_chambers(chRc, co);
      for (const auto &c : result.cells) {
        std::cout << fmt::format("{:<5} {:<9} accuracy {:8.4f}%", to_string(c.source), display_name(c.group), c.accuracy);
        if (c.complexity)
          std::cout << fmt::format("  leaves {:4}  complexity {}", c.complexity->leaves, to_string(c.complexity->grade));
        std::cout << '\n';
      }
    } else if (*joint) {
      finish_run(jRc, jIn, jOut, *joint, jSeed);
      JointOptions jo;
      jo.shuffleLabels = shuffle;
      if (!fromCounts.empty()) jo.fromCounts = fromCounts;
      const auto r = cmd_joint(jRc, jo);
      std::cout << fmt::format("macro accuracy {:.8f}%  micro accuracy {:.8f}%\nwrote {}\n", r.stats.macroAccuracy,
                               r.stats.microAccuracy, r.output.string());
      for (const auto &w : r.stats.warnings) std::cerr << "warning: " << w << '\n';
    } else if (*report) {
      finish_run(rRc, rIn, rOut, *report, rSeed);
      const auto outs = cmd_report(rRc, ro);
      std::cout << fmt::format("wrote {} report files to {}\n", outs.size(), rOut);
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return Usage;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return Data;
  } catch (const NumericalError &e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return Numerical;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return Data;
  }
  return Ok;
}
