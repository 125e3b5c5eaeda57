#include "wavescat/classifiers.hpp"

#include "wavescat/errors.hpp"
#include "wavescat/feature_table.hpp"
#include "wavescat/random.hpp"
#include "wavescat/signal_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

namespace wavescat {

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw DataError(fmt::format("dataset has {} feature rows but {} labels", features.rows(),
                                labels.size()));
  if (!groups.empty() && groups.size() != labels.size())
    throw DataError("dataset group keys do not match sample count");
  if (!features.allFinite()) throw DataError("dataset contains non-finite features");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classNames.size())
      throw DataError(fmt::format("label {} outside class table of size {}", y, classNames.size()));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.classNames = classNames;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
    if (!groups.empty()) out.groups.push_back(groups[rows[i]]);
  }
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd &x) {
  Standardizer s;
  s.inputWidth = x.cols();
  const double n = static_cast<double>(x.rows());
  std::vector<double> means, scales;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double m = x.col(c).sum() / n;
    const double var = (x.col(c).array() - m).square().sum() / n;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) continue;
    s.kept.push_back(c);
    means.push_back(m);
    scales.push_back(sd);
  }
  s.mean = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  s.scale = Eigen::Map<Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd &x) const {
  if (x.cols() != inputWidth)
    throw DataError(fmt::format("feature width {} does not match model width {}", x.cols(),
                                inputWidth));
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(kept.size()));
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    out.col(j) = (x.col(kept[static_cast<std::size_t>(j)]).array() - mean(j)) / scale(j);
  return out;
}

Eigen::VectorXd Standardizer::apply(std::span<const double> row) const {
  if (static_cast<Eigen::Index>(row.size()) != inputWidth)
    throw DataError(fmt::format("feature width {} does not match model width {}", row.size(),
                                inputWidth));
  Eigen::VectorXd out(static_cast<Eigen::Index>(kept.size()));
  for (Eigen::Index j = 0; j < out.size(); ++j)
    out(j) = (row[static_cast<std::size_t>(kept[static_cast<std::size_t>(j)])] - mean(j)) / scale(j);
  return out;
}

int argmax_lowest(const Eigen::VectorXd &values) {
  int best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values(i) > values(best)) best = static_cast<int>(i);
  return best;
}

// ---------------------------------------------------------------- tree

namespace {

double gini(std::span<const std::size_t> counts, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    s += p * p;
  }
  return 1.0 - s;
}

int majority(std::span<const std::size_t> counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

struct TreeBuilder {
  const Dataset &data;
  const TreeConfig &config;
  DecisionTreeModel &model;

  int build(std::vector<std::size_t> &idx, int depth) {
    const std::size_t k = data.classes();
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i : idx) ++counts[static_cast<std::size_t>(data.labels[i])];
    const int node = static_cast<int>(model.nodes.size());
    model.nodes.push_back(TreeNode{});
    model.nodes[static_cast<std::size_t>(node)].label = majority(counts);

    const std::size_t n = idx.size();
    const bool pure = std::count(counts.begin(), counts.end(), 0u) >= static_cast<long>(k) - 1;
    const auto minLeaf = static_cast<std::size_t>(config.minLeaf);
    if (pure || depth >= config.maxDepth || n < 2 * minLeaf) return node;

    double bestScore = std::numeric_limits<double>::infinity();
    int bestFeature = -1;
    double bestThreshold = 0.0;
    std::vector<std::size_t> order(idx);
    std::vector<std::size_t> left(k), right(k);
    for (Eigen::Index f = 0; f < data.features.cols(); ++f) {
      const auto value = [&](std::size_t i) { return data.features(static_cast<Eigen::Index>(i), f); };
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
      std::fill(left.begin(), left.end(), 0);
      right = counts;
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        const auto c = static_cast<std::size_t>(data.labels[order[pos]]);
        ++left[c];
        --right[c];
        const double lo = value(order[pos]);
        const double hi = value(order[pos + 1]);
        if (!(lo < hi)) continue;
        const std::size_t nl = pos + 1, nr = n - nl;
        if (nl < minLeaf || nr < minLeaf) continue;
        const double score = (static_cast<double>(nl) * gini(left, nl) +
                              static_cast<double>(nr) * gini(right, nr)) /
                             static_cast<double>(n);
        if (score < bestScore - 1e-12) {
          double thr = lo + 0.5 * (hi - lo);
          if (!(lo < thr)) thr = hi;
          bestScore = score;
          bestFeature = static_cast<int>(f);
          bestThreshold = thr;
        }
      }
    }
    if (bestFeature < 0) return node;

    std::vector<std::size_t> li, ri;
    for (std::size_t i : idx)
      (data.features(static_cast<Eigen::Index>(i), bestFeature) < bestThreshold ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(li, depth + 1);
    const int r = build(ri, depth + 1);
    TreeNode &nd = model.nodes[static_cast<std::size_t>(node)];
    nd.feature = bestFeature;
    nd.threshold = bestThreshold;
    nd.left = l;
    nd.right = r;
    return node;
  }
};

} // namespace

DecisionTreeModel train_tree(const Dataset &data, const TreeConfig &config) {
  data.validate();
  if (config.maxDepth < 1) throw ConfigError("tree maxDepth must be at least 1");
  if (config.minLeaf < 1) throw ConfigError("tree minLeaf must be at least 1");
  if (data.size() == 0) throw DataError("cannot train a tree on an empty dataset");
  DecisionTreeModel model;
  model.width = data.features.cols();
  model.classes = static_cast<int>(data.classes());
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  TreeBuilder{data, config, model}.build(idx, 0);
  return model;
}

std::string_view to_string(ComplexityGrade g) {
  switch (g) {
  case ComplexityGrade::Low: return "Low";
  case ComplexityGrade::Mid: return "Mid";
  case ComplexityGrade::High: return "High";
  }
  return "?";
}

TreeComplexity tree_complexity(const DecisionTreeModel &model,
                               const ComplexityThresholds &thresholds) {
  if (model.nodes.empty()) throw DataError("empty tree model");
  TreeComplexity out;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [node, depth] = stack.back();
    stack.pop_back();
    const TreeNode &nd = model.nodes.at(static_cast<std::size_t>(node));
    ++out.nodes;
    out.depth = std::max(out.depth, depth);
    if (nd.leaf()) {
      ++out.leaves;
    } else {
      stack.emplace_back(nd.left, depth + 1);
      stack.emplace_back(nd.right, depth + 1);
    }
  }
  out.grade = out.leaves <= thresholds.lowMaxLeaves   ? ComplexityGrade::Low
              : out.leaves <= thresholds.midMaxLeaves ? ComplexityGrade::Mid
                                                      : ComplexityGrade::High;
  return out;
}

int predict(const DecisionTreeModel &model, std::span<const double> row) {
  if (static_cast<Eigen::Index>(row.size()) != model.width)
    throw DataError(fmt::format("feature width {} does not match tree width {}", row.size(),
                                model.width));
  std::size_t node = 0;
  while (!model.nodes[node].leaf()) {
    const TreeNode &nd = model.nodes[node];
    node = static_cast<std::size_t>(row[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left
                                                                                              : nd.right);
  }
  return model.nodes[node].label;
}

// ---------------------------------------------------------------- MLP

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd &z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd &z) {
  Eigen::MatrixXd p = z.colwise() - z.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

// Activations per layer; acts[0] = x, acts.back() = softmax output.
std::vector<Eigen::MatrixXd> forward(const MlpModel &model, const Eigen::MatrixXd &x) {
  std::vector<Eigen::MatrixXd> acts{x};
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    acts.push_back(l + 1 == model.weights.size() ? softmax_rows(z) : sigmoid(z));
  }
  return acts;
}

} // namespace

MlpModel init_mlp(Eigen::Index inputWidth, int classes, const MlpConfig &config) {
  MlpModel model;
  Rng rng(config.seed);
  std::vector<Eigen::Index> sizes{inputWidth};
  for (int h : config.hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
    sizes.push_back(h);
  }
  sizes.push_back(classes);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, sizes[l])));
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  return model;
}

Eigen::MatrixXd mlp_probabilities(const MlpModel &model, const Eigen::MatrixXd &x) {
  return forward(model, x).back();
}

MlpGradient mlp_loss_gradient(const MlpModel &model, const Eigen::MatrixXd &x,
                              std::span<const int> labels) {
  const auto acts = forward(model, x);
  const Eigen::MatrixXd &p = acts.back();
  const auto n = static_cast<double>(x.rows());
  MlpGradient g;
  Eigen::MatrixXd delta = p;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto y = labels[static_cast<std::size_t>(i)];
    g.loss -= std::log(std::max(p(i, y), std::numeric_limits<double>::min()));
    delta(i, y) -= 1.0;
  }
  g.loss /= n;
  delta /= n;
  const std::size_t layers = model.weights.size();
  g.weights.resize(layers);
  g.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = delta.transpose() * acts[l];
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * model.weights[l];
      delta = (back.array() * acts[l].array() * (1.0 - acts[l].array())).matrix();
    }
  }
  return g;
}

MlpModel train_mlp(const Dataset &data, const MlpConfig &config) {
  data.validate();
  if (config.epochs < 1) throw ConfigError("mlp epochs must be at least 1");
  if (!(config.learningRate > 0.0)) throw ConfigError("mlp learning rate must be positive");
  if (data.classes() < 2) throw DataError("mlp training needs at least two classes");
  Standardizer st = Standardizer::fit(data.features);
  const Eigen::MatrixXd x = st.apply(data.features);
  MlpModel model = init_mlp(x.cols(), static_cast<int>(data.classes()), config);
  model.standardizer = std::move(st);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const MlpGradient g = mlp_loss_gradient(model, x, data.labels);
    if (!std::isfinite(g.loss))
      throw NumericalError(fmt::format(
          "mlp loss became non-finite at epoch {} (learning rate {} too high?)", epoch,
          config.learningRate));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      model.weights[l] -= config.learningRate * g.weights[l];
      model.biases[l] -= config.learningRate * g.biases[l];
    }
  }
  return model;
}

int predict(const MlpModel &model, std::span<const double> row) {
  const Eigen::VectorXd x = model.standardizer.apply(row);
  const Eigen::MatrixXd p = mlp_probabilities(model, x.transpose());
  return argmax_lowest(p.row(0).transpose());
}

// ---------------------------------------------------------------- SVM

LinearMachine solve_binary_svm(const Eigen::MatrixXd &x, std::span<const int> targets,
                               const SvmConfig &config) {
  if (!(config.C > 0.0)) throw ConfigError("svm C must be positive");
  if (!(config.tol > 0.0)) throw ConfigError("svm tol must be positive");
  if (config.maxIter < 1) throw ConfigError("svm maxIter must be at least 1");
  const Eigen::Index n = x.rows(), d = x.cols();
  // Augmented rows [x, 1]; w_aug = (w, b).
  Eigen::MatrixXd xa(n, d + 1);
  xa.leftCols(d) = x;
  xa.col(d).setOnes();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = targets[static_cast<std::size_t>(i)] > 0 ? 1.0 : -1.0;
  const Eigen::VectorXd qdiag = xa.rowwise().squaredNorm();

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::vector<Eigen::Index> active = all;
  Rng rng(config.seed);

  // Coordinate step on sample i; returns the gradient seen before the step.
  const auto step = [&](Eigen::Index i) {
    const double g = y(i) * xa.row(i).dot(w) - 1.0;
    if (qdiag(i) <= 0.0) return g;
    const double a = alpha(i);
    const double na = std::clamp(a - g / qdiag(i), 0.0, config.C);
    if (na != a) {
      w += ((na - a) * y(i)) * xa.row(i).transpose();
      alpha(i) = na;
    }
    return g;
  };

  LinearMachine best;
  double bestPrimal = std::numeric_limits<double>::infinity();
  Eigen::VectorXd bestW = w;
  for (int epoch = 1; epoch <= config.maxIter; ++epoch) {
    // Every kFullEvery-th epoch sweeps all samples, rebuilds the active set
    // (samples not pinned at a bound) and checks the duality gap. Other
    // epochs sweep the active set only.
    constexpr int kFullEvery = 5;
    const bool full = epoch % kFullEvery == 1 || epoch == config.maxIter || kFullEvery == 1;
    if (full) {
      rng.shuffle(std::span<Eigen::Index>(all));
      active.clear();
      for (Eigen::Index i : all) {
        const double g = step(i);
        const bool pinned = (alpha(i) == 0.0 && g > 0.0) || (alpha(i) == config.C && g < 0.0);
        if (!pinned) active.push_back(i);
      }
    } else {
      rng.shuffle(std::span<Eigen::Index>(active));
      for (Eigen::Index i : active) step(i);
      continue;
    }
    const double wn = w.squaredNorm();
    const Eigen::VectorXd margins = (xa * w).cwiseProduct(y);
    const double primal = 0.5 * wn + config.C * (1.0 - margins.array()).max(0.0).sum();
    const double dual = alpha.sum() - 0.5 * wn;
    const double gap = primal - dual;
    if (primal < bestPrimal) {
      bestPrimal = primal;
      bestW = w;
      best.gap = gap;
      best.epochs = epoch;
    }
    if (gap <= config.tol * std::abs(primal)) {
      bestW = w;
      best.gap = gap;
      best.epochs = epoch;
      best.converged = true;
      break;
    }
  }
  best.weights = bestW.head(d);
  best.bias = bestW(d);
  return best;
}

OvaSvmModel train_svm_ova(const Dataset &data, const SvmConfig &config) {
  data.validate();
  if (data.classes() < 2) throw DataError("svm training needs at least two classes");
  OvaSvmModel model;
  model.standardizer = Standardizer::fit(data.features);
  const Eigen::MatrixXd x = model.standardizer.apply(data.features);
  std::vector<int> targets(data.size());
  for (std::size_t c = 0; c < data.classes(); ++c) {
    for (std::size_t i = 0; i < data.size(); ++i)
      targets[i] = data.labels[i] == static_cast<int>(c) ? 1 : -1;
    SvmConfig mc = config;
    mc.seed = mix_seed(config.seed, c);
    model.machines.push_back(solve_binary_svm(x, targets, mc));
  }
  return model;
}

Eigen::VectorXd decision_values(const OvaSvmModel &model, std::span<const double> row) {
  const Eigen::VectorXd x = model.standardizer.apply(row);
  Eigen::VectorXd out(static_cast<Eigen::Index>(model.machines.size()));
  for (std::size_t c = 0; c < model.machines.size(); ++c)
    out(static_cast<Eigen::Index>(c)) = model.machines[c].weights.dot(x) + model.machines[c].bias;
  return out;
}

int predict(const OvaSvmModel &model, std::span<const double> row) {
  return argmax_lowest(decision_values(model, row));
}

// ---------------------------------------------------------------- k-fold

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (std::int64_t v : counts.data()) s += v;
  return s;
}

std::vector<int> kfold_assignment(const Dataset &data, const KFoldOptions &options) {
  if (options.k < 2) throw ConfigError("k-fold needs K >= 2");
  if (static_cast<std::size_t>(options.k) > data.size())
    throw ConfigError(fmt::format("K = {} exceeds the {} available samples", options.k, data.size()));
  if (options.groupFolds) {
    if (data.groups.size() != data.size()) throw DataError("grouped folds need a group key per sample");
    std::vector<int> folds = assign_group_folds(data.groups, options.k, options.seed);
    return folds;
  }
  return assign_folds(data.labels, options.k, options.seed);
}

ConfusionMatrix run_kfold(const Dataset &data, const TrainerConfig &trainer,
                          const KFoldOptions &options) {
  data.validate();
  std::vector<std::size_t> present(data.classes(), 0);
  for (int y : data.labels) ++present[static_cast<std::size_t>(y)];
  for (std::size_t c = 0; c < present.size(); ++c)
    if (present[c] == 0) throw DataError(fmt::format("class '{}' has no samples", data.classNames[c]));
  const std::vector<int> folds = kfold_assignment(data, options);

  ConfusionMatrix cm{data.classNames, Grid<std::int64_t>(data.classes(), data.classes())};
  std::mutex mu;
  parallel_for(static_cast<std::size_t>(options.k), options.threads, [&](std::size_t f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.size(); ++i)
      (folds[i] == static_cast<int>(f) ? test : train).push_back(i);
    if (test.empty() || train.empty()) return;
    const Dataset tr = data.subset(train);
    std::vector<int> predicted(test.size());
    const auto run = [&](const auto &model) {
      for (std::size_t t = 0; t < test.size(); ++t) {
        const Eigen::VectorXd row = data.features.row(static_cast<Eigen::Index>(test[t])).transpose();
        predicted[t] = predict(model, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
      }
    };
    std::visit(
        [&](const auto &cfg) {
          using C = std::decay_t<decltype(cfg)>;
          if constexpr (std::is_same_v<C, TreeConfig>) run(train_tree(tr, cfg));
          else if constexpr (std::is_same_v<C, MlpConfig>) run(train_mlp(tr, cfg));
          else run(train_svm_ova(tr, cfg));
        },
        trainer);
    std::lock_guard lock(mu);
    for (std::size_t t = 0; t < test.size(); ++t)
      ++cm.counts(static_cast<std::size_t>(data.labels[test[t]]), static_cast<std::size_t>(predicted[t]));
  });
  return cm;
}

// ---------------------------------------------------------------- stats

ConfusionStats confusion_stats(const ConfusionMatrix &m) {
  const std::size_t k = m.counts.rows();
  if (m.counts.cols() != k) throw DataError("confusion matrix must be square");
  if (m.classNames.size() != k) throw DataError("confusion matrix class table size mismatch");
  ConfusionStats s;
  std::int64_t trace = 0, total = 0;
  double tprSum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::int64_t row = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (m.counts(i, j) < 0) throw DataError("confusion counts must be nonnegative");
      row += m.counts(i, j);
    }
    trace += m.counts(i, i);
    total += row;
    if (row == 0) {
      s.tpr.emplace_back();
      s.fnr.emplace_back();
      s.warnings.push_back(fmt::format("class '{}' has no test samples; excluded from macro accuracy",
                                       m.classNames[i]));
      continue;
    }
    const double tpr = 100.0 * static_cast<double>(m.counts(i, i)) / static_cast<double>(row);
    s.tpr.emplace_back(tpr);
    s.fnr.emplace_back(100.0 - tpr);
    tprSum += tpr;
    ++used;
  }
  if (used == 0) throw DataError("confusion matrix has no nonzero rows");
  s.microAccuracy = 100.0 * static_cast<double>(trace) / static_cast<double>(total);
  s.macroAccuracy = tprSum / static_cast<double>(used);
  return s;
}

void write_confusion_csv(std::ostream &out, const ConfusionMatrix &m, const ConfusionStats &stats,
                         std::string_view metadata) {
  if (!metadata.empty()) out << "# wavescat-config: " << metadata << '\n';
  out << "true\\predicted";
  for (const auto &n : m.classNames) out << ',' << n;
  out << ",TPR,FNR\n";
  const auto opt = [](const std::optional<double> &v) {
    return v ? fmt::format("{:.10f}", *v) : std::string("NaN");
  };
  for (std::size_t i = 0; i < m.counts.rows(); ++i) {
    out << m.classNames[i];
    for (std::size_t j = 0; j < m.counts.cols(); ++j) out << ',' << m.counts(i, j);
    out << ',' << opt(stats.tpr[i]) << ',' << opt(stats.fnr[i]) << '\n';
  }
  out << "micro_accuracy,macro_accuracy\n";
  out << fmt::format("{:.10f},{:.10f}\n", stats.microAccuracy, stats.macroAccuracy);
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

} // namespace

ConfusionMatrix read_confusion_csv(std::istream &in) {
  std::string line;
  std::vector<std::string> header;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line.front() == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.size() < 2) throw DataError("confusion CSV: missing header row");
  std::vector<std::string> names(header.begin() + 1, header.end());
  while (!names.empty() && (names.back() == "TPR" || names.back() == "FNR")) names.pop_back();
  const std::size_t k = names.size();
  ConfusionMatrix m{names, Grid<std::int64_t>(k, k)};
  std::size_t row = 0;
  while (row < k && std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < k + 1)
      throw DataError(fmt::format("confusion CSV line {}: expected {} counts", lineNo, k));
    if (cells[0] != names[row])
      throw DataError(fmt::format("confusion CSV line {}: row '{}' does not match column '{}'", lineNo,
                                  cells[0], names[row]));
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(cells[j + 1], &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != cells[j + 1].size() || cells[j + 1].empty() || v < 0)
        throw DataError(fmt::format("confusion CSV line {}: bad count '{}'", lineNo, cells[j + 1]));
      m.counts(row, j) = v;
    }
    ++row;
  }
  if (row != k) throw DataError(fmt::format("confusion CSV: expected {} rows, found {}", k, row));
  return m;
}

} // namespace wavescat
