#include <algorithm>
#include <cmath>
#include <limits>

#include "xcohort/error.hpp"
#include "xcohort/folds.hpp"
#include "xcohort/learners.hpp"

namespace xcohort::learn {

namespace {

constexpr double kTau = 1e-12;

struct ClassCounts {
    int pos = 0;
    int neg = 0;
};

ClassCounts count_classes(std::span<const int> y) {
    ClassCounts c;
    for (int v : y) {
        if (v == 1) {
            ++c.pos;
        } else if (v == 0) {
            ++c.neg;
        } else {
            fail(ErrorCode::InvalidValue, "labels must be 0 or 1");
        }
    }
    if (c.pos == 0 || c.neg == 0) fail(ErrorCode::SingleClassLabels, "training labels contain a single class");
    return c;
}

std::vector<double> box_bounds(std::span<const int> y, double C) {
    const ClassCounts c = count_classes(y);
    const double n = static_cast<double>(y.size());
    const double c_pos = C * n / (2.0 * c.pos);
    const double c_neg = C * n / (2.0 * c.neg);
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] == 1 ? c_pos : c_neg;
    return out;
}

// m(alpha) - M(alpha) from the gradient G = Q alpha - e.
double kkt_gap(const std::vector<double>& alpha, const std::vector<double>& G, const std::vector<double>& ys,
               const std::vector<double>& cbox) {
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < alpha.size(); ++t) {
        const double v = -ys[t] * G[t];
        const bool in_up = (ys[t] > 0 && alpha[t] < cbox[t]) || (ys[t] < 0 && alpha[t] > 0);
        const bool in_low = (ys[t] > 0 && alpha[t] > 0) || (ys[t] < 0 && alpha[t] < cbox[t]);
        if (in_up) up = std::max(up, v);
        if (in_low) low = std::min(low, v);
    }
    if (!std::isfinite(up) || !std::isfinite(low)) return 0.0;
    return up - low;
}

double dual_objective(const std::vector<double>& alpha, const std::vector<double>& G) {
    // D = e'a - a'Qa/2 with G = Qa - e, so a'Qa = a'G + e'a.
    double sum_a = 0.0;
    double a_g = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        sum_a += alpha[i];
        a_g += alpha[i] * G[i];
    }
    return sum_a - 0.5 * (a_g + sum_a);
}

struct SmoResult {
    std::vector<double> alpha;
    double rho = 0.0;
    long iterations = 0;
};

SmoResult smo(const Eigen::MatrixXd& K, const std::vector<double>& ys, const std::vector<double>& cbox, const SvmOptions& opt,
              std::vector<double>* trace) {
    const std::size_t n = ys.size();
    std::vector<double> alpha(n, 0.0);
    std::vector<double> G(n, -1.0);
    const auto Q = [&](std::size_t i, std::size_t j) {
        return ys[i] * ys[j] * K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };
    long iter = 0;
    if (trace) trace->push_back(0.0);
    while (iter < opt.max_iterations) {
        // Working set: maximal violator i, then j by second-order gain.
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (ys[t] > 0) {
                if (alpha[t] < cbox[t] && -G[t] >= gmax) {
                    gmax = -G[t];
                    i = t;
                }
            } else if (alpha[t] > 0 && G[t] >= gmax) {
                gmax = G[t];
                i = t;
            }
        }
        if (i == n) break;
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_obj = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        const double kii = K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        for (std::size_t t = 0; t < n; ++t) {
            const double ktt = K(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
            const double kit = K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
            double grad_diff = 0.0;
            if (ys[t] > 0) {
                if (!(alpha[t] > 0)) continue;
                grad_diff = gmax + G[t];
                gmax2 = std::max(gmax2, G[t]);
            } else {
                if (!(alpha[t] < cbox[t])) continue;
                grad_diff = gmax - G[t];
                gmax2 = std::max(gmax2, -G[t]);
            }
            if (grad_diff > 0) {
                double quad = kii + ktt - 2.0 * kit;
                if (quad <= 0) quad = kTau;
                const double obj = -(grad_diff * grad_diff) / quad;
                if (obj <= best_obj) {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if (gmax + gmax2 < opt.kkt_tolerance || j == n) break;

        const double old_ai = alpha[i];
        const double old_aj = alpha[j];
        const double ci = cbox[i];
        const double cj = cbox[j];
        if (ys[i] != ys[j]) {
            double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > ci - cj) {
                if (alpha[i] > ci) {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if (alpha[j] > cj) {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > ci) {
                if (alpha[i] > ci) {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > cj) {
                if (alpha[j] > cj) {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }
        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * dai + Q(t, j) * daj;
        ++iter;
        if (trace) trace->push_back(dual_objective(alpha, G));
    }

    // Bias as in the standard SMO reference: average over free vectors,
    // midpoint of the feasible interval otherwise.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = ys[t] * G[t];
        if (alpha[t] >= cbox[t]) {
            if (ys[t] < 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else if (alpha[t] <= 0) {
            if (ys[t] > 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    SmoResult r;
    r.rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;
    r.alpha = std::move(alpha);
    r.iterations = iter;
    return r;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Kernel& k) {
    const auto n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            K(i, j) = k(X.row(i), X.row(j));
            K(j, i) = K(i, j);
        }
    }
    return K;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
    return out;
}

double sigmoid_platt(double f, double a, double b) {
    const double fab = f * a + b;
    if (fab >= 0) return std::exp(-fab) / (1.0 + std::exp(-fab));
    return 1.0 / (1.0 + std::exp(fab));
}

}  // namespace

double Kernel::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
    if (type == KernelType::LINEAR) return a.dot(b);
    return std::exp(-gamma * (a - b).squaredNorm());
}

Eigen::VectorXd SvmModel::decision_values(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_features) fail(ErrorCode::FeatureMismatch, "SVM expects " + std::to_string(n_features) + " features");
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index v = 0; v < support_vectors.rows(); ++v) s += dual_coefficients[v] * kernel(support_vectors.row(v), X.row(i));
        out[i] = s + bias;
    }
    return out;
}

Eigen::VectorXd SvmModel::predict_proba(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd f = decision_values(X);
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = sigmoid_platt(f[i], platt_a, platt_b);
    return f;
}

std::vector<int> SvmModel::predict(const Eigen::MatrixXd& X) const {
    const Eigen::VectorXd f = decision_values(X);
    std::vector<int> out(static_cast<std::size_t>(f.size()));
    for (Eigen::Index i = 0; i < f.size(); ++i) out[static_cast<std::size_t>(i)] = f[i] >= 0.0 ? 1 : 0;
    return out;
}

std::pair<double, double> fit_platt(std::span<const double> dec, std::span<const int> y) {
    const std::size_t n = dec.size();
    double prior1 = 0.0;
    double prior0 = 0.0;
    for (int v : y) (v == 1 ? prior1 : prior0) += 1.0;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == 1 ? hi : lo;

    const auto objective = [&](double a, double b) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fab = dec[i] * a + b;
            f += fab >= 0 ? t[i] * fab + std::log1p(std::exp(-fab)) : (t[i] - 1.0) * fab + std::log1p(std::exp(fab));
        }
        return f;
    };

    double a = 0.0;
    double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    double fval = objective(a, b);
    constexpr double kSigma = 1e-12;
    constexpr double kMinStep = 1e-10;
    for (int it = 0; it < 100; ++it) {
        double h11 = kSigma;
        double h22 = kSigma;
        double h21 = 0.0;
        double g1 = 0.0;
        double g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fab = dec[i] * a + b;
            double p = 0.0;
            double q = 0.0;
            if (fab >= 0) {
                p = std::exp(-fab) / (1.0 + std::exp(-fab));
                q = 1.0 / (1.0 + std::exp(-fab));
            } else {
                p = 1.0 / (1.0 + std::exp(fab));
                q = std::exp(fab) / (1.0 + std::exp(fab));
            }
            const double d2 = p * q;
            h11 += dec[i] * dec[i] * d2;
            h22 += d2;
            h21 += dec[i] * d2;
            const double d1 = t[i] - p;
            g1 += dec[i] * d1;
            g2 += d1;
        }
        if (std::fabs(g1) < 1e-5 && std::fabs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= kMinStep) {
            const double na = a + step * da;
            const double nb = b + step * db;
            const double nf = objective(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < kMinStep) break;
    }
    return {a, b};
}

SvmModel train_svm(const Eigen::MatrixXd& X, std::span<const int> y, double C, Kernel kernel, const SvmOptions& options,
                   std::vector<double>* objective_trace) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) fail(ErrorCode::DimensionMismatch, "design rows and label count differ");
    if (!(C > 0.0)) fail(ErrorCode::InvalidValue, "C must be > 0");
    if (!X.allFinite()) fail(ErrorCode::InvalidValue, "design contains non-finite values");
    const std::vector<double> cbox = box_bounds(y, C);
    std::vector<double> ys(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) ys[i] = y[i] == 1 ? 1.0 : -1.0;

    const SmoResult r = smo(gram(X, kernel), ys, cbox, options, objective_trace);
    SvmModel m;
    m.kernel = kernel;
    m.C = C;
    m.n_features = static_cast<int>(X.cols());
    m.iterations = r.iterations;
    m.bias = -r.rho;
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < r.alpha.size(); ++i) {
        if (r.alpha[i] > 0.0) sv.push_back(i);
    }
    m.support_vectors = take_rows(X, sv);
    m.dual_coefficients.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t v = 0; v < sv.size(); ++v) m.dual_coefficients[static_cast<Eigen::Index>(v)] = r.alpha[sv[v]] * ys[sv[v]];

    if (!options.platt) return m;

    // Platt targets come from 3-fold cross-validated decision values; with
    // fewer than 3 members in a class the in-sample values are used.
    const ClassCounts cc = count_classes(y);
    std::vector<double> dec(y.size());
    if (cc.pos < 3 || cc.neg < 3) {
        const Eigen::VectorXd f = m.decision_values(X);
        for (std::size_t i = 0; i < dec.size(); ++i) dec[i] = f[static_cast<Eigen::Index>(i)];
    } else {
        const std::vector<int> fold_of = stratified_folds(y, 3, options.platt_seed);
        SvmOptions inner = options;
        inner.platt = false;
        for (int f = 0; f < 3; ++f) {
            const FoldSplit split = fold_split(fold_of, f);
            std::vector<int> ytr;
            for (auto i : split.train) ytr.push_back(y[i]);
            const SvmModel fold_model = train_svm(take_rows(X, split.train), ytr, C, kernel, inner);
            const Eigen::VectorXd fv = fold_model.decision_values(take_rows(X, split.validation));
            for (std::size_t v = 0; v < split.validation.size(); ++v) dec[split.validation[v]] = fv[static_cast<Eigen::Index>(v)];
        }
    }
    std::tie(m.platt_a, m.platt_b) = fit_platt(dec, y);
    return m;
}

double svm_kkt_violation(const SvmModel& model, const Eigen::MatrixXd& X, std::span<const int> y) {
    const std::vector<double> cbox = box_bounds(y, model.C);
    const std::size_t n = y.size();
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[i] == 1 ? 1.0 : -1.0;
    // Support vectors are stored in training-row order.
    std::vector<double> alpha(n, 0.0);
    Eigen::Index v = 0;
    for (std::size_t i = 0; i < n && v < model.support_vectors.rows(); ++i) {
        if (X.row(static_cast<Eigen::Index>(i)) == model.support_vectors.row(v)) {
            alpha[i] = model.dual_coefficients[v] * ys[i];
            ++v;
        }
    }
    std::vector<double> G(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (alpha[j] != 0.0) s += alpha[j] * ys[j] * model.kernel(X.row(static_cast<Eigen::Index>(j)), X.row(static_cast<Eigen::Index>(i)));
        }
        G[i] = ys[i] * s - 1.0;
    }
    return kkt_gap(alpha, G, ys, cbox);
}

Json to_json(const SvmModel& m) {
    return Json{{"kernel", Json{{"type", m.kernel.type == KernelType::LINEAR ? "LINEAR" : "RBF"}, {"gamma", m.kernel.gamma}}},
                {"C", m.C},
                {"support_vectors", xcohort::to_json(m.support_vectors)},
                {"dual_coefficients", xcohort::to_json(m.dual_coefficients)},
                {"bias", m.bias},
                {"platt", Json{{"a", m.platt_a}, {"b", m.platt_b}}},
                {"n_features", m.n_features},
                {"iterations", m.iterations}};
}

SvmModel svm_from_json(const Json& j) {
    SvmModel m;
    const Json& k = require(j, "kernel");
    const auto type = require(k, "type").get<std::string>();
    if (type == "LINEAR") {
        m.kernel.type = KernelType::LINEAR;
    } else if (type == "RBF") {
        m.kernel.type = KernelType::RBF;
    } else {
        fail(ErrorCode::SchemaError, "unknown kernel '" + type + "'");
    }
    m.kernel.gamma = require(k, "gamma").get<double>();
    m.C = require(j, "C").get<double>();
    m.n_features = require(j, "n_features").get<int>();
    m.support_vectors = matrix_from_json(require(j, "support_vectors"));
    if (m.support_vectors.size() == 0) m.support_vectors.resize(0, m.n_features);
    m.dual_coefficients = vector_from_json(require(j, "dual_coefficients"));
    m.bias = require(j, "bias").get<double>();
    m.platt_a = require(require(j, "platt"), "a").get<double>();
    m.platt_b = require(require(j, "platt"), "b").get<double>();
    m.iterations = require(j, "iterations").get<long>();
    if (m.support_vectors.rows() != m.dual_coefficients.size()) fail(ErrorCode::SchemaError, "support vector count mismatch");
    return m;
}

}  // namespace xcohort::learn
