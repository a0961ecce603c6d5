#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "edhorizon/models.hpp"

namespace edhorizon {

namespace {

constexpr double kKktTol = 1e-3;

// Minimize over t in [lo, hi]:
//   g(t) = 0.5*eta*t^2 + grad_diff*t + eps*(|bi + t| - |bi|) + eps*(|bj - t| - |bj|)
// Convex piecewise quadratic with breakpoints at -bi and bj; the minimum is
// found exactly by checking each segment's stationary point and endpoints.
double solve_pair_step(double eta, double grad_diff, double eps, double bi, double bj, double lo,
                       double hi) {
    if (lo > hi) return 0.0;
    auto g = [&](double t) {
        return 0.5 * eta * t * t + grad_diff * t + eps * (std::abs(bi + t) - std::abs(bi)) +
               eps * (std::abs(bj - t) - std::abs(bj));
    };

    std::vector<double> pts{lo, hi};
    if (-bi > lo && -bi < hi) pts.push_back(-bi);
    if (bj > lo && bj < hi) pts.push_back(bj);
    std::sort(pts.begin(), pts.end());

    double best_t = lo;
    double best_g = g(lo);
    auto consider = [&](double t) {
        const double v = g(t);
        if (v < best_g) {
            best_g = v;
            best_t = t;
        }
    };
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
        const double a = pts[s], b = pts[s + 1];
        consider(b);
        if (eta <= 0.0) continue;
        const double mid = 0.5 * (a + b);
        const double s1 = bi + mid >= 0.0 ? 1.0 : -1.0;
        const double s2 = bj - mid >= 0.0 ? -1.0 : 1.0;
        const double t_star = -(grad_diff + eps * (s1 + s2)) / eta;
        if (t_star > a && t_star < b) consider(t_star);
    }
    return best_t;
}

} // namespace

TrainedPredictor fit_svr(const Matrix& X, const std::vector<double>& y, const ModelSpec& spec,
                         SvrDiagnostics* diagnostics) {
    const std::size_t n = X.rows;
    if (n < 1 || n != y.size()) throw PipelineError("SVR needs matching rows and targets");
    if (!(spec.C > 0.0) || !(spec.epsilon > 0.0))
        throw PipelineError("SVR needs positive C and epsilon");

    TrainedPredictor out;
    out.family = ModelFamily::svr;
    out.spec = spec;
    out.standardization = fit_standardization(X);
    const Matrix Z = apply_standardization(X, out.standardization);
    const std::size_t p = Z.cols;

    double gamma = spec.gamma;
    if (spec.gamma_auto || !(gamma > 0.0)) {
        // 1/(p * var) with var the total variance of the standardized matrix.
        double var = 0.0;
        if (n > 0 && p > 0) {
            double sum = 0.0, sumsq = 0.0;
            for (double v : Z.data) {
                sum += v;
                sumsq += v * v;
            }
            const double m = sum / static_cast<double>(Z.data.size());
            var = sumsq / static_cast<double>(Z.data.size()) - m * m;
        }
        gamma = var > 0.0 && p > 0 ? 1.0 / (static_cast<double>(p) * var) : 1.0;
    }

    // Dense kernel cache; cohort-scale inputs keep this small.
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        K[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t c = 0; c < p; ++c) {
                const double d = Z(i, c) - Z(j, c);
                sq += d * d;
            }
            const double v = std::exp(-gamma * sq);
            K[i * n + j] = v;
            K[j * n + i] = v;
        }
    }

    const double C = spec.C;
    const double eps = spec.epsilon;
    std::vector<double> beta(n, 0.0);
    std::vector<double> F(n, 0.0); // F_i = (K beta)_i

    double b_lo = 0.0, b_hi = 0.0;
    std::size_t i_up = 0, j_down = 0;
    auto compute_bounds = [&]() {
        b_lo = -std::numeric_limits<double>::infinity();
        b_hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double e = y[i] - F[i];
            if (beta[i] < C - 1e-12) {
                const double bound = e - eps * (beta[i] >= 0.0 ? 1.0 : -1.0);
                if (bound > b_lo) {
                    b_lo = bound;
                    i_up = i;
                }
            }
            if (beta[i] > -C + 1e-12) {
                const double bound = e - eps * (beta[i] > 0.0 ? 1.0 : -1.0);
                if (bound < b_hi) {
                    b_hi = bound;
                    j_down = i;
                }
            }
        }
    };

    const std::size_t max_updates = 10 * n * n; // 10*n passes of n pair updates
    std::size_t updates = 0;
    bool converged = false;
    while (updates < max_updates) {
        compute_bounds();
        if (b_lo - b_hi <= 2.0 * kKktTol) {
            converged = true;
            break;
        }
        const std::size_t i = i_up, j = j_down;
        const double eta = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
        const double grad_diff = (F[i] - y[i]) - (F[j] - y[j]);
        const double lo = std::max(-C - beta[i], beta[j] - C);
        const double hi = std::min(C - beta[i], beta[j] + C);
        const double t = solve_pair_step(std::max(eta, 1e-12), grad_diff, eps, beta[i], beta[j], lo, hi);
        if (std::abs(t) < 1e-15) break; // numerically stalled
        beta[i] = std::clamp(beta[i] + t, -C, C);
        beta[j] = std::clamp(beta[j] - t, -C, C);
        for (std::size_t r = 0; r < n; ++r) F[r] += t * (K[r * n + i] - K[r * n + j]);
        ++updates;
    }
    if (!converged) compute_bounds();

    const double bias = std::isfinite(b_lo) && std::isfinite(b_hi) ? 0.5 * (b_lo + b_hi)
                        : std::isfinite(b_lo)                      ? b_lo
                        : std::isfinite(b_hi)                      ? b_hi
                                                                   : 0.0;

    SvrModel model;
    model.gamma = gamma;
    model.bias = bias;
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(beta[i]) > 1e-12) support.push_back(i);
    }
    model.support_points = subset_rows(Z, support);
    for (std::size_t i : support) model.beta.push_back(beta[i]);

    out.convergence_warning = !converged && b_lo - b_hi > 2.0 * kKktTol;
    if (diagnostics) {
        diagnostics->beta = beta;
        diagnostics->bias = bias;
        diagnostics->kkt_gap = b_lo - b_hi;
        diagnostics->pair_updates = updates;
    }
    out.params = std::move(model);
    return out;
}

} // namespace edhorizon
