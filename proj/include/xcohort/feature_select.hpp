#pragma once

// LASSO regression path with k-fold cross-validated penalty choice, and
// provenance summaries of the selected feature sets.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcohort/core_data.hpp"
#include "xcohort/json_io.hpp"

namespace xcohort::select {

struct LassoOptions {
    double tolerance = 1e-7;  // max coefficient change per sweep
    int max_sweeps = 10000;
    int path_length = 100;
    double path_ratio = 1e-3;  // lambda_min / lambda_max
};

/// Minimizes (1/2n)||y - X b||^2 + lambda ||b||_1 by cyclic coordinate descent
/// (ascending column order). X must be standardized (column mean 0, population
/// std 1, within 1e-6); y is centered internally.
Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          const LassoOptions& options = {});

/// Same solver without the design check and with an explicit warm start.
/// X and y must already be centered.
Eigen::VectorXd lasso_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, Eigen::VectorXd warm,
                            const LassoOptions& options = {});

/// max_j |X^T (y - mean(y))|_j / n
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Descending, log-spaced from lambda_max to lambda_max * ratio.
Eigen::VectorXd lambda_path(double lambda_max, int length, double ratio);

struct LassoPath {
    Eigen::VectorXd lambdas;
    Eigen::MatrixXd cv_mse;  // path_length x k
    double lambda_star = 0.0;
    int star_index = 0;
    Eigen::VectorXd coefficients_at_star;

    Eigen::VectorXd mean_cv_mse() const { return cv_mse.rowwise().mean(); }
};

struct SelectionResult {
    std::string category;
    std::vector<std::size_t> selected;
    std::vector<std::string> selected_names;  // empty unless names were supplied
    LassoPath path;
    std::uint64_t fold_seed = 0;
};

/// k-fold LASSO-CV on {0,1} responses treated as numeric targets. Folds are
/// stratified by label; each fold refits the path with warm starts on its
/// own centered training part. lambda* minimizes mean CV MSE, ties going to
/// the larger lambda. The final fit at lambda* uses all rows.
SelectionResult lasso_cv_select(const Eigen::MatrixXd& X, std::span<const int> y, int k, std::uint64_t seed,
                                const LassoOptions& options = {});

/// Path of full-data fits (warm-started), one coefficient vector per lambda.
std::vector<Eigen::VectorXd> lasso_path_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& lambdas, const LassoOptions& options = {});

struct CountWithShare {
    std::size_t count = 0;
    double percent = 0.0;  // of the distinct union
};

struct SelectionSummary {
    std::map<std::string, std::size_t> per_category;
    std::size_t distinct_union = 0;
    std::map<std::string, CountWithShare> by_region;
    std::map<std::string, CountWithShare> by_sequence;
    std::map<std::string, CountWithShare> by_class;
};

SelectionSummary summarize_selection(const std::vector<SelectionResult>& results,
                                     const std::vector<data::FeatureDescriptor>& descriptors);

/// "701 (33.9%)"
std::string format_count(const CountWithShare& c);
std::string summary_table(const SelectionSummary& s);

Json to_json(const SelectionResult& r);
Json to_json(const SelectionSummary& s);

}  // namespace xcohort::select
