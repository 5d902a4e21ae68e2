#include <algorithm>
#include <cmath>
#include <limits>

#include "spinread/numeric.hpp"
#include "spinread/physics.hpp"

namespace spinread::physics {

std::string to_string(FitStatus status) {
    switch (status) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iterations: return "max_iterations";
        case FitStatus::singular_jacobian: return "singular_jacobian";
    }
    return "unknown";
}

void PhysicsModel::validate() const {
    if (!evaluate) throw DomainError("model '" + id + "' has no evaluator");
    for (const auto& p : parameters) {
        if (!(std::isfinite(p.lower) && std::isfinite(p.upper) && p.lower < p.upper)) {
            throw DomainError("model '" + id + "': parameter '" + p.name + "' has invalid bounds");
        }
    }
}

std::vector<double> poisson_weights(std::span<const double> counts) {
    std::vector<double> w(counts.size());
    std::transform(counts.begin(), counts.end(), w.begin(),
                   [](double c) { return 1.0 / std::max(c, 1.0); });
    return w;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Evaluator {
    const LeastSquaresProblem& problem;

    VectorXd residuals(const VectorXd& x) const {
        VectorXd r(problem.n_residuals);
        problem.residuals({x.data(), static_cast<std::size_t>(x.size())},
                          {r.data(), static_cast<std::size_t>(r.size())});
        return r;
    }

    // Central differences, falling back to one-sided steps at the box edge.
    MatrixXd jacobian(const VectorXd& x, const VectorXd& r0) const {
        const auto n = static_cast<Eigen::Index>(problem.n_params);
        MatrixXd jac(r0.size(), n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double range = problem.upper[j] - problem.lower[j];
            const double h = std::max(1e-6 * std::abs(x[j]), 1e-9 * range);
            const bool room_up = x[j] + h <= problem.upper[j];
            const bool room_down = x[j] - h >= problem.lower[j];
            VectorXd xp = x;
            VectorXd xm = x;
            if (room_up && room_down) {
                xp[j] += h;
                xm[j] -= h;
                jac.col(j) = (residuals(xp) - residuals(xm)) / (2.0 * h);
            } else if (room_up) {
                xp[j] += h;
                jac.col(j) = (residuals(xp) - r0) / h;
            } else {
                xm[j] -= h;
                jac.col(j) = (r0 - residuals(xm)) / h;
            }
        }
        return jac;
    }

    VectorXd clamp(VectorXd x) const {
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            x[j] = std::clamp(x[j], problem.lower[j], problem.upper[j]);
        }
        return x;
    }
};

bool is_singular(const MatrixXd& normal) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(normal);
    const auto& ev = eig.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    return largest == 0.0 || ev.minCoeff() <= 1e-14 * largest;
}

}  // namespace

FitResult least_squares(const LeastSquaresProblem& problem, std::vector<double> init,
                        const FitOptions& options) {
    const std::size_t n = problem.n_params;
    if (init.size() != n || problem.lower.size() != n || problem.upper.size() != n) {
        throw DomainError("least_squares: parameter vector size mismatch");
    }
    if (problem.n_residuals < n) {
        throw DomainError("least_squares: fewer residuals than parameters");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!(init[j] >= problem.lower[j] && init[j] <= problem.upper[j])) {
            throw DomainError("least_squares: initial value outside bounds for parameter " +
                              std::to_string(j));
        }
    }

    Evaluator eval{problem};
    VectorXd x = Eigen::Map<VectorXd>(init.data(), static_cast<Eigen::Index>(n));
    VectorXd r = eval.residuals(x);
    double cost = 0.5 * r.squaredNorm();
    if (!std::isfinite(cost)) throw NumericalError("least_squares: non-finite initial cost");

    FitResult result;
    double lambda = 1e-3;
    MatrixXd jac = eval.jacobian(x, r);
    bool refresh = false;

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        result.n_iterations = iter;
        if (refresh) {
            jac = eval.jacobian(x, r);
            refresh = false;
        }
        if (cost == 0.0) {
            result.status = FitStatus::converged;
            break;
        }
        const MatrixXd normal = jac.transpose() * jac;
        const VectorXd grad = jac.transpose() * r;
        if (iter == 1 && is_singular(normal)) {
            result.status = FitStatus::singular_jacobian;
            break;
        }

        bool accepted = false;
        bool done = false;
        while (!accepted) {
            MatrixXd damped = normal;
            for (Eigen::Index j = 0; j < damped.rows(); ++j) {
                damped(j, j) += lambda * std::max(normal(j, j), 1e-300);
            }
            const VectorXd step = damped.ldlt().solve(-grad);
            const VectorXd x_new = eval.clamp(x + step);
            const VectorXd actual_step = x_new - x;
            const VectorXd r_new = eval.residuals(x_new);
            const double cost_new = 0.5 * r_new.squaredNorm();

            const double step_rel = actual_step.norm() / (x.norm() + 1e-300);
            if (std::isfinite(cost_new) && cost_new <= cost) {
                const double cost_rel = (cost - cost_new) / std::max(cost, 1e-300);
                x = x_new;
                r = r_new;
                cost = cost_new;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                refresh = true;
                if (step_rel < options.step_tol || cost_rel < options.cost_tol) done = true;
            } else {
                lambda *= 4.0;
                if (step_rel < options.step_tol || lambda > 1e16) {
                    done = true;
                    break;
                }
            }
        }
        if (done) {
            result.status = FitStatus::converged;
            break;
        }
    }

    if (refresh) jac = eval.jacobian(x, r);
    const MatrixXd normal = jac.transpose() * jac;
    const auto n_res = static_cast<double>(problem.n_residuals);
    const double dof = n_res - static_cast<double>(n);
    const double chi2_red = dof > 0.0 ? 2.0 * cost / dof : 1.0;

    result.params.assign(x.data(), x.data() + x.size());
    result.residual_norm = std::sqrt(2.0 * cost);
    if (is_singular(normal)) {
        result.status = FitStatus::singular_jacobian;
        result.covariance = MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
        result.sigmas.assign(n, std::numeric_limits<double>::quiet_NaN());
    } else {
        result.covariance = normal.inverse() * chi2_red;
        result.sigmas.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            result.sigmas[j] = std::sqrt(std::max(0.0, result.covariance(j, j)));
        }
    }
    result.converged = result.status == FitStatus::converged;
    return result;
}

FitResult fit_model(const PhysicsModel& model, std::span<const double> x,
                    std::span<const double> y, std::optional<std::span<const double>> weights,
                    std::vector<double> init, const FitOptions& options) {
    model.validate();
    if (x.size() != y.size()) throw DomainError("fit_model: x and y differ in length");
    if (weights && weights->size() != x.size()) {
        throw DomainError("fit_model: weights differ in length from data");
    }
    if (x.size() < model.size()) throw DomainError("fit_model: fewer points than parameters");
    if (init.size() != model.size()) throw DomainError("fit_model: wrong number of initial values");

    std::vector<double> sqrt_w(x.size(), 1.0);
    if (weights) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!((*weights)[i] >= 0.0)) throw DomainError("fit_model: negative weight");
            sqrt_w[i] = std::sqrt((*weights)[i]);
        }
    }

    LeastSquaresProblem problem;
    problem.n_params = model.size();
    problem.n_residuals = x.size();
    for (const auto& p : model.parameters) {
        problem.lower.push_back(p.lower);
        problem.upper.push_back(p.upper);
    }
    problem.residuals = [&](std::span<const double> params, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = sqrt_w[i] * (y[i] - model.evaluate(x[i], params));
        }
    };
    return least_squares(problem, std::move(init), options);
}

}  // namespace spinread::physics
