#include <algorithm>
#include <cmath>

#include "xcohort/error.hpp"
#include "xcohort/feature_select.hpp"
#include "xcohort/folds.hpp"

namespace xcohort::select {

namespace {

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

// One cyclic pass over `cols`; returns the largest coefficient change.
double sweep(const Eigen::MatrixXd& X, const Eigen::VectorXd& col_sq, double lambda, const std::vector<Eigen::Index>& cols,
             Eigen::VectorXd& beta, Eigen::VectorXd& resid) {
    const double n = static_cast<double>(X.rows());
    double max_change = 0.0;
    for (Eigen::Index j : cols) {
        if (col_sq[j] <= 0.0) continue;
        const double old = beta[j];
        const double rho = X.col(j).dot(resid) / n + col_sq[j] * old;
        const double next = soft_threshold(rho, lambda) / col_sq[j];
        if (next != old) {
            resid.noalias() -= (next - old) * X.col(j);
            beta[j] = next;
            max_change = std::max(max_change, std::fabs(next - old));
        }
    }
    return max_change;
}

Eigen::VectorXd centered(const Eigen::VectorXd& y) { return (y.array() - y.mean()).matrix(); }

Eigen::MatrixXd centered_columns(const Eigen::MatrixXd& X) { return X.rowwise() - X.colwise().mean(); }

// Expects centered inputs.
std::vector<Eigen::VectorXd> path_on_centered(const Eigen::MatrixXd& xc, const Eigen::VectorXd& yc,
                                              const Eigen::VectorXd& lambdas, const LassoOptions& options) {
    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(xc.cols());
    for (Eigen::Index l = 0; l < lambdas.size(); ++l) {
        warm = lasso_solve(xc, yc, lambdas[l], warm, options);
        out.push_back(warm);
    }
    return out;
}

// Same per-column dot products as the first coordinate-descent sweep, so a
// fit at exactly lambda_max stays at zero.
double lambda_max_centered(const Eigen::MatrixXd& X, const Eigen::VectorXd& yc) {
    const double n = static_cast<double>(X.rows());
    double best = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) best = std::max(best, std::fabs(X.col(j).dot(yc) / n));
    return best;
}

}  // namespace

Eigen::VectorXd lasso_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, Eigen::VectorXd beta,
                            const LassoOptions& options) {
    const auto p = X.cols();
    const double n = static_cast<double>(X.rows());
    if (beta.size() != p) beta = Eigen::VectorXd::Zero(p);
    const Eigen::VectorXd col_sq = X.colwise().squaredNorm().transpose() / n;
    Eigen::VectorXd resid = y - X * beta;

    std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;

    // Full sweeps establish the active set; inner sweeps iterate on it until
    // stable, then a full sweep confirms nothing outside it moved.
    int sweeps = 0;
    while (sweeps < options.max_sweeps) {
        const double full_change = sweep(X, col_sq, lambda, all, beta, resid);
        ++sweeps;
        if (full_change < options.tolerance) break;
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (beta[j] != 0.0) active.push_back(j);
        }
        while (sweeps < options.max_sweeps) {
            const double change = sweep(X, col_sq, lambda, active, beta, resid);
            ++sweeps;
            if (change < options.tolerance) break;
        }
    }
    return beta;
}

Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const LassoOptions& options) {
    if (X.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "design rows and response length differ");
    if (X.rows() < 2) fail(ErrorCode::TooFewSamples, "LASSO needs at least 2 rows");
    if (!(lambda >= 0.0)) fail(ErrorCode::InvalidValue, "lambda must be >= 0");
    const double n = static_cast<double>(X.rows());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double mean = X.col(j).mean();
        const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / n);
        if (std::fabs(mean) > 1e-6 || std::fabs(sd - 1.0) > 1e-6) {
            fail(ErrorCode::NonStandardizedDesign, "column " + std::to_string(j) + " is not standardized");
        }
    }
    return lasso_solve(X, centered(y), lambda, Eigen::VectorXd::Zero(X.cols()), options);
}

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) { return lambda_max_centered(X, centered(y)); }

Eigen::VectorXd lambda_path(double lmax, int length, double ratio) {
    Eigen::VectorXd out(length);
    if (length == 1) {
        out[0] = lmax;
        return out;
    }
    const double log_hi = std::log(lmax);
    const double log_lo = std::log(lmax * ratio);
    for (int i = 0; i < length; ++i) out[i] = std::exp(log_hi + (log_lo - log_hi) * i / (length - 1));
    out[0] = lmax;
    return out;
}

std::vector<Eigen::VectorXd> lasso_path_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& lambdas,
                                            const LassoOptions& options) {
    return path_on_centered(centered_columns(X), centered(y), lambdas, options);
}

SelectionResult lasso_cv_select(const Eigen::MatrixXd& X, std::span<const int> y, int k, std::uint64_t seed,
                                const LassoOptions& options) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) fail(ErrorCode::DimensionMismatch, "design rows and label count differ");
    int positives = 0;
    for (int v : y) {
        if (v != 0 && v != 1) fail(ErrorCode::InvalidValue, "labels must be 0 or 1");
        positives += v;
    }
    if (positives == 0 || positives == static_cast<int>(y.size())) fail(ErrorCode::SingleClassLabels, "LASSO-CV needs both classes");
    if (y.size() < static_cast<std::size_t>(2 * k)) fail(ErrorCode::TooFewSamples, "LASSO-CV needs n >= 2k");

    Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) yv[static_cast<Eigen::Index>(i)] = y[i];

    SelectionResult result;
    result.fold_seed = seed;
    LassoPath& path = result.path;
    const Eigen::MatrixXd xc = centered_columns(X);
    const Eigen::VectorXd yc = centered(yv);
    path.lambdas = lambda_path(lambda_max_centered(xc, yc), options.path_length, options.path_ratio);
    path.cv_mse = Eigen::MatrixXd::Zero(options.path_length, k);

    const std::vector<int> fold_of = stratified_folds(y, k, seed);
    for (int f = 0; f < k; ++f) {
        const FoldSplit split = fold_split(fold_of, f);
        Eigen::MatrixXd xtr(static_cast<Eigen::Index>(split.train.size()), X.cols());
        Eigen::VectorXd ytr(xtr.rows());
        for (std::size_t r = 0; r < split.train.size(); ++r) {
            xtr.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(split.train[r]));
            ytr[static_cast<Eigen::Index>(r)] = yv[static_cast<Eigen::Index>(split.train[r])];
        }
        const Eigen::RowVectorXd x_mean = xtr.colwise().mean();
        const double y_mean = ytr.mean();
        const auto betas = lasso_path_fit(xtr, ytr, path.lambdas, options);
        for (int l = 0; l < options.path_length; ++l) {
            double sse = 0.0;
            for (std::size_t v : split.validation) {
                const auto i = static_cast<Eigen::Index>(v);
                const double pred = y_mean + (X.row(i) - x_mean).dot(betas[static_cast<std::size_t>(l)]);
                sse += (yv[i] - pred) * (yv[i] - pred);
            }
            path.cv_mse(l, f) = sse / static_cast<double>(split.validation.size());
        }
    }

    const Eigen::VectorXd mean_mse = path.mean_cv_mse();
    int best = 0;
    for (int l = 1; l < options.path_length; ++l) {
        if (mean_mse[l] < mean_mse[best]) best = l;
    }
    path.star_index = best;
    path.lambda_star = path.lambdas[best];
    // Warm-started full path up to lambda*, so the final fit follows the same
    // continuation as the fold fits.
    const auto full = path_on_centered(xc, yc, path.lambdas.head(best + 1), options);
    path.coefficients_at_star = full.back();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (std::fabs(path.coefficients_at_star[j]) > 0.0) result.selected.push_back(static_cast<std::size_t>(j));
    }
    return result;
}

}  // namespace xcohort::select
