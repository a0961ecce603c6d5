#include <Eigen/Dense>

#include "edhorizon/models.hpp"

namespace edhorizon {

TrainedPredictor fit_ols(const Matrix& X, const std::vector<double>& y) {
    if (X.rows < 2 || X.rows != y.size())
        throw PipelineError("OLS needs at least 2 rows and matching targets");

    TrainedPredictor p;
    p.family = ModelFamily::linear;
    p.spec.family = ModelFamily::linear;
    p.standardization = fit_standardization(X);
    const Matrix Z = apply_standardization(X, p.standardization);

    const auto n = static_cast<Eigen::Index>(Z.rows);
    const auto cols = static_cast<Eigen::Index>(Z.cols);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Zm(
        Z.data.data(), n, cols);

    const double y_mean = mean_of(y);
    Eigen::VectorXd yc(n);
    for (Eigen::Index i = 0; i < n; ++i) yc(i) = y[static_cast<std::size_t>(i)] - y_mean;

    LinearModel model;
    model.intercept = y_mean;
    model.weights.assign(Z.cols, 0.0);

    // Constant features standardize to all-zero columns; they stay out of
    // the solve and keep weight exactly 0.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (p.standardization.stddev[static_cast<std::size_t>(j)] > 0.0) active.push_back(j);
    }

    if (!active.empty()) {
        const auto m = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd Za(n, m);
        for (Eigen::Index j = 0; j < m; ++j) Za.col(j) = Zm.col(active[static_cast<std::size_t>(j)]);

        // Standardized columns are zero-mean, so the intercept decouples and
        // the weights solve the centered normal equations.
        Eigen::MatrixXd A = Za.transpose() * Za;
        Eigen::VectorXd g = Za.transpose() * yc;

        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (lu.rank() < m) {
            A.diagonal().array() += 1e-8; // ridge jitter for rank deficiency
        }
        Eigen::VectorXd w = A.ldlt().solve(g);
        for (Eigen::Index j = 0; j < m; ++j) {
            model.weights[static_cast<std::size_t>(active[static_cast<std::size_t>(j)])] = w(j);
        }
    }

    p.params = std::move(model);
    return p;
}

} // namespace edhorizon
