#pragma once

// Binary classifiers on dense designs: kernel SVM (SMO + Platt scaling),
// random forest, histogram gradient boosting, the 2:1:1 soft-voting
// ensemble, and stratified k-fold grid search.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcohort/json_io.hpp"

namespace xcohort::learn {

// ---------------------------------------------------------------- SVM

enum class KernelType { LINEAR, RBF };

struct Kernel {
    KernelType type = KernelType::LINEAR;
    double gamma = 0.0;  // RBF only

    double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) const;
};

struct SvmOptions {
    double kkt_tolerance = 1e-3;
    long max_iterations = 10'000'000;
    bool platt = true;
    std::uint64_t platt_seed = 0;
};

struct SvmModel {
    Kernel kernel;
    double C = 1.0;
    Eigen::MatrixXd support_vectors;
    Eigen::VectorXd dual_coefficients;  // alpha_i * y_i, y in {-1, +1}
    double bias = 0.0;
    double platt_a = -1.0;  // P(1 | f) = 1 / (1 + exp(a f + b))
    double platt_b = 0.0;
    int n_features = 0;
    long iterations = 0;

    Eigen::VectorXd decision_values(const Eigen::MatrixXd& X) const;
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
    /// Class 1 iff the decision value is >= 0.
    std::vector<int> predict(const Eigen::MatrixXd& X) const;
};

/// Balanced soft-margin SVM: C_i = C * n / (2 * n_class(y_i)). When
/// `objective_trace` is given, the dual objective is appended after every
/// working-set update.
SvmModel train_svm(const Eigen::MatrixXd& X, std::span<const int> y, double C, Kernel kernel, const SvmOptions& options = {},
                   std::vector<double>* objective_trace = nullptr);

/// Largest KKT violation (m(alpha) - M(alpha)) of a trained model on its
/// training data; also used as the stopping criterion.
double svm_kkt_violation(const SvmModel& model, const Eigen::MatrixXd& X, std::span<const int> y);

/// Platt sigmoid fit (Newton with backtracking, smoothed targets).
std::pair<double, double> fit_platt(std::span<const double> decision, std::span<const int> y);

// ---------------------------------------------------------------- trees

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // forest: x <= threshold goes left; GB: bin <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;  // forest: class-1 fraction; GB: raw leaf output
};

using Tree = std::vector<TreeNode>;

struct ForestModel {
    std::vector<Tree> trees;
    int n_trees = 100;
    int max_depth = 0;  // 0 = unlimited
    std::uint64_t seed = 0;
    int n_features = 0;

    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
};

ForestModel train_forest(const Eigen::MatrixXd& X, std::span<const int> y, int n_trees, int max_depth, std::uint64_t seed);

struct HistGbOptions {
    int n_rounds = 100;
    double learning_rate = 0.1;
    int max_leaf_nodes = 31;
    int min_samples_leaf = 20;
    double min_hessian = 1e-3;
    int max_bins = 255;
};

struct HistGbModel {
    std::vector<std::vector<double>> bin_edges;  // per feature, ascending
    std::vector<Tree> trees;
    double learning_rate = 0.1;
    int n_rounds = 100;
    double base_score = 0.0;
    std::uint64_t seed = 0;
    int n_features = 0;

    Eigen::VectorXd raw_scores(const Eigen::MatrixXd& X) const;
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
};

/// Bin edges: midpoints between distinct values when there are at most
/// max_bins of them, else interior quantiles.
std::vector<double> histogram_edges(std::vector<double> values, int max_bins);

HistGbModel train_histgb(const Eigen::MatrixXd& X, std::span<const int> y, std::uint64_t seed, const HistGbOptions& options = {});

// ---------------------------------------------------------------- ensemble

struct EnsembleModel {
    SvmModel svm;
    ForestModel rf;
    HistGbModel gb;

    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
};

/// (2 p_svm + p_rf + p_gb) / 4, correctly rounded.
double ensemble_probability(double p_svm, double p_rf, double p_gb);
inline int class_of(double probability) { return probability >= 0.5 ? 1 : 0; }

// ---------------------------------------------------------------- search

enum class LearnerKind { SVM, RF, GB };
enum class ModelKind { SVM, ENSEMBLE };

const char* to_string(LearnerKind k);
const char* to_string(ModelKind k);
LearnerKind learner_kind_from_string(const std::string& s);
ModelKind model_kind_from_string(const std::string& s);

enum class GammaRule { NONE, INV_P, SCALE };  // RBF(1/p), RBF(1/(p var(X)))

struct GridPoint {
    LearnerKind kind = LearnerKind::SVM;
    double C = 1.0;
    KernelType kernel = KernelType::LINEAR;
    GammaRule gamma_rule = GammaRule::NONE;
    int n_trees = 100;
    int max_depth = 0;
    int n_rounds = 100;
    double learning_rate = 0.1;

    std::string id() const;
    bool operator==(const GridPoint&) const = default;
};

/// Declared grid order: SVM C in {0.1, 1, 10, 100} outer, kernel
/// {LINEAR, RBF(1/p), RBF(scale)} inner; RF max_depth {unlimited, 8};
/// GB a single point.
std::vector<GridPoint> default_grid(LearnerKind kind);
GridPoint grid_point_from_id(const std::string& id);

Kernel resolve_kernel(const GridPoint& point, const Eigen::MatrixXd& X);

struct SearchReport {
    LearnerKind kind = LearnerKind::SVM;
    std::vector<GridPoint> grid;
    std::vector<double> mean_ba;
    std::vector<double> sd_ba;
    int chosen = 0;
    int k = 5;
    std::uint64_t fold_seed = 0;

    const GridPoint& chosen_point() const { return grid.at(static_cast<std::size_t>(chosen)); }
};

SearchReport grid_search_cv(const Eigen::MatrixXd& X, std::span<const int> y, LearnerKind kind, int k, std::uint64_t seed);

/// A fitted learner of one kind.
struct FittedLearner {
    LearnerKind kind = LearnerKind::SVM;
    std::optional<SvmModel> svm;
    std::optional<ForestModel> rf;
    std::optional<HistGbModel> gb;

    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
    std::vector<int> predict(const Eigen::MatrixXd& X) const;
};

/// Retrains the chosen point on all rows. Points outside the declared grid
/// raise UnknownGridPoint.
FittedLearner fit_final(const Eigen::MatrixXd& X, std::span<const int> y, const GridPoint& point, std::uint64_t seed);

double balanced_accuracy_simple(std::span<const int> truth, std::span<const int> pred);

// ---------------------------------------------------------------- JSON

Json to_json(const SvmModel& m);
SvmModel svm_from_json(const Json& j);
Json to_json(const ForestModel& m);
ForestModel forest_from_json(const Json& j);
Json to_json(const HistGbModel& m);
HistGbModel histgb_from_json(const Json& j);
Json to_json(const EnsembleModel& m);
EnsembleModel ensemble_from_json(const Json& j);
Json to_json(const SearchReport& r);
SearchReport search_from_json(const Json& j);
Json to_json(const FittedLearner& f);
FittedLearner fitted_from_json(const Json& j);

}  // namespace xcohort::learn
