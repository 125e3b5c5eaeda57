#pragma once

#include "wavescat/grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wavescat {

struct Dataset {
  Eigen::MatrixXd features; // rows = samples
  std::vector<int> labels;
  std::vector<std::string> classNames;
  // Optional per-sample group key (rat id) for grouped folds.
  std::vector<std::string> groups;

  std::size_t size() const { return labels.size(); }
  std::size_t classes() const { return classNames.size(); }
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

// Column standardization fitted on training data. Constant columns are
// dropped; `kept` lists the surviving raw column indices.
struct Standardizer {
  std::vector<Eigen::Index> kept;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  Eigen::Index inputWidth = 0;

  static Standardizer fit(const Eigen::MatrixXd &x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd &x) const;
  Eigen::VectorXd apply(std::span<const double> row) const;
};

// ---- decision tree (CART, Gini) ----

struct TreeConfig {
  int maxDepth = 20;
  int minLeaf = 1;
};

struct TreeNode {
  int feature = -1; // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;

  bool leaf() const { return feature < 0; }
};

struct DecisionTreeModel {
  std::vector<TreeNode> nodes; // nodes[0] is the root
  Eigen::Index width = 0;
  int classes = 0;
};

DecisionTreeModel train_tree(const Dataset &data, const TreeConfig &config);

enum class ComplexityGrade { Low, Mid, High };
std::string_view to_string(ComplexityGrade g);

struct TreeComplexity {
  std::size_t nodes = 0;
  std::size_t leaves = 0;
  std::size_t depth = 0;
  ComplexityGrade grade = ComplexityGrade::Low;
};

struct ComplexityThresholds {
  std::size_t lowMaxLeaves = 8;
  std::size_t midMaxLeaves = 32;
};

TreeComplexity tree_complexity(const DecisionTreeModel &model,
                               const ComplexityThresholds &thresholds = {});

// ---- multilayer perceptron ----

struct MlpConfig {
  std::vector<int> hidden{64};
  int epochs = 300;
  double learningRate = 0.1;
  std::uint64_t seed = 0;
};

// Logistic hidden layers, softmax output. weights[l] maps layer l to l+1 and
// has shape (out x in).
struct MlpModel {
  Standardizer standardizer;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

struct MlpGradient {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Mean cross-entropy and its gradient on already-standardized inputs.
MlpGradient mlp_loss_gradient(const MlpModel &model, const Eigen::MatrixXd &x,
                              std::span<const int> labels);

// Class probabilities for standardized inputs (one row per sample).
Eigen::MatrixXd mlp_probabilities(const MlpModel &model, const Eigen::MatrixXd &x);

// Randomly initialized network for the given standardized input width.
MlpModel init_mlp(Eigen::Index inputWidth, int classes, const MlpConfig &config);

MlpModel train_mlp(const Dataset &data, const MlpConfig &config);

// ---- one-vs-all linear SVM ----

struct SvmConfig {
  double C = 0.01;
  double tol = 1e-3; // relative duality gap
  int maxIter = 500; // epochs of dual coordinate descent
  std::uint64_t seed = 1;
};

// Soft-margin linear machine sign(w.x + b). The bias is learned as the
// weight of a constant unit feature, so it is regularized like the others.
struct LinearMachine {
  Eigen::VectorXd weights;
  double bias = 0.0;
  bool converged = false;
  int epochs = 0;
  double gap = 0.0;
};

// Hinge-loss SVM on raw rows by dual coordinate descent; targets are +1/-1.
LinearMachine solve_binary_svm(const Eigen::MatrixXd &x, std::span<const int> targets,
                               const SvmConfig &config);

struct OvaSvmModel {
  Standardizer standardizer;
  std::vector<LinearMachine> machines; // one per class
};

OvaSvmModel train_svm_ova(const Dataset &data, const SvmConfig &config);
Eigen::VectorXd decision_values(const OvaSvmModel &model, std::span<const double> row);

// ---- prediction ----

int predict(const DecisionTreeModel &model, std::span<const double> row);
int predict(const MlpModel &model, std::span<const double> row);
int predict(const OvaSvmModel &model, std::span<const double> row);

// Index of the largest entry; ties go to the lowest index.
int argmax_lowest(const Eigen::VectorXd &values);

// ---- evaluation ----

struct ConfusionMatrix {
  std::vector<std::string> classNames;
  Grid<std::int64_t> counts; // true x predicted

  std::int64_t total() const;
};

using TrainerConfig = std::variant<TreeConfig, MlpConfig, SvmConfig>;

struct KFoldOptions {
  int k = 10;
  std::uint64_t seed = 0;
  bool groupFolds = false; // keep each Dataset::groups key within one fold
  unsigned threads = 1;
};

// Stratified k-fold: each sample is predicted exactly once by a model trained
// on the other folds.
ConfusionMatrix run_kfold(const Dataset &data, const TrainerConfig &trainer,
                          const KFoldOptions &options);

// Per-sample fold ids used by run_kfold.
std::vector<int> kfold_assignment(const Dataset &data, const KFoldOptions &options);

struct ConfusionStats {
  std::vector<std::optional<double>> tpr; // percent; nullopt for empty rows
  std::vector<std::optional<double>> fnr;
  double microAccuracy = 0.0; // 100 * trace / total
  double macroAccuracy = 0.0; // mean TPR over non-empty rows
  std::vector<std::string> warnings;
};

ConfusionStats confusion_stats(const ConfusionMatrix &m);

// Layout: header `true\predicted,<classes>,TPR,FNR`, one row per true class,
// then `micro_accuracy,macro_accuracy` and their values.
void write_confusion_csv(std::ostream &out, const ConfusionMatrix &m, const ConfusionStats &stats,
                         std::string_view metadata);

// Reads the counts of a confusion CSV (as written above, or a bare
// header-plus-rows count table); trailing TPR/FNR columns and footer ignored.
ConfusionMatrix read_confusion_csv(std::istream &in);

} // namespace wavescat
