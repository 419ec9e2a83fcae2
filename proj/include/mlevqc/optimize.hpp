#pragma once

/**
 * @file
 * Central finite-difference gradients, BFGS with a strong-Wolfe line search,
 * multi-restart training and gradient-variance statistics.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlevqc/parallel.hpp"
#include "mlevqc/rng.hpp"

namespace mlevqc {

using Vector = Eigen::VectorXd;
using CostFunction = std::function<double(const Vector &)>;
using GradientFunction = std::function<Vector(const Vector &)>;

struct OptimizerConfig {
    double fd_step = 1e-6;
    int max_iterations = 500;
    double gradient_tolerance = 1e-8; ///< on the max-norm of the gradient
    double cost_tolerance = 1e-12;    ///< on |f_k - f_{k+1}| between accepted iterates
    int restarts = 40;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search_evals = 40;

    void validate() const {
        if (!(fd_step > 0) || !std::isfinite(fd_step)) {
            throw std::invalid_argument("fd_step must be positive");
        }
        if (max_iterations < 0) {
            throw std::invalid_argument("max_iterations must be >= 0");
        }
        if (!(gradient_tolerance >= 0) || !(cost_tolerance >= 0)) {
            throw std::invalid_argument("tolerances must be >= 0");
        }
        if (restarts < 1) {
            throw std::invalid_argument("restarts must be >= 1");
        }
        if (!(0 < c1 && c1 < c2 && c2 < 1)) {
            throw std::invalid_argument("Wolfe constants need 0 < c1 < c2 < 1");
        }
        if (max_line_search_evals < 2) {
            throw std::invalid_argument("max_line_search_evals must be >= 2");
        }
    }
};

enum class Termination {
    GradientTolerance,
    CostTolerance,
    MaxIterations,
    LineSearchFailed,
    Failed, ///< the cost threw; only recorded by multi_restart_train
};

constexpr std::string_view name(Termination t) {
    switch (t) {
    case Termination::GradientTolerance: return "gradient-tolerance";
    case Termination::CostTolerance: return "cost-tolerance";
    case Termination::MaxIterations: return "max-iterations";
    case Termination::LineSearchFailed: return "line-search-failed";
    case Termination::Failed: return "failed";
    }
    return "?";
}

/// g_i = (f(x + h e_i) - f(x - h e_i)) / (2h). A failing evaluation is
/// rethrown with the offending coordinate in the message.
inline Vector finite_diff_gradient(const CostFunction &cost, const Vector &x, double step) {
    if (!(step > 0)) {
        throw std::invalid_argument("finite-difference step must be positive");
    }
    Vector g(x.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        double fp = 0.0;
        double fm = 0.0;
        try {
            xp[i] = xi + step;
            fp = cost(xp);
            xp[i] = xi - step;
            fm = cost(xp);
        } catch (const std::exception &e) {
            throw std::runtime_error("cost evaluation failed at coordinate " + std::to_string(i) +
                                     ": " + e.what());
        }
        xp[i] = xi;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("non-finite cost at coordinate " + std::to_string(i));
        }
        g[i] = (fp - fm) / (2 * step);
    }
    return g;
}

struct BfgsResult {
    Vector x;
    double cost = 0.0;
    int iterations = 0;
    int cost_evaluations = 0;
    int gradient_evaluations = 0;
    Termination reason = Termination::MaxIterations;
    std::vector<double> cost_history;      ///< accepted iterates, starting at the initial point
    std::vector<double> grad_norm_history; ///< max-norm, aligned with cost_history
};

namespace detail {

struct LinePoint {
    double alpha = 0.0;
    double f = 0.0;
    double dphi = 0.0;
    Vector g;
    bool has_grad = false;
};

class LineSearch {
  public:
    LineSearch(const CostFunction &f, const GradientFunction &grad, const Vector &x, const Vector &p,
               const OptimizerConfig &cfg, BfgsResult &stats)
        : f_{f}, grad_{grad}, x_{x}, p_{p}, cfg_{cfg}, stats_{stats} {}

    // Nocedal & Wright, Algorithm 3.5 with the zoom of Algorithm 3.6.
    std::optional<LinePoint> run(const LinePoint &start, double alpha1) {
        LinePoint prev = start;
        double alpha = alpha1;
        for (int i = 0; budget_ok(); ++i) {
            LinePoint cur = eval(alpha);
            if (!std::isfinite(cur.f)) {
                // Step left the region where the cost is defined; shrink.
                alpha *= 0.5;
                continue;
            }
            if (cur.f > start.f + cfg_.c1 * alpha * start.dphi || (i > 0 && cur.f >= prev.f)) {
                return zoom(start, prev, cur);
            }
            with_grad(cur);
            if (std::abs(cur.dphi) <= -cfg_.c2 * start.dphi) {
                return cur;
            }
            if (cur.dphi >= 0) {
                return zoom(start, cur, prev);
            }
            prev = cur;
            alpha = std::min(2 * alpha, 1e8);
        }
        return std::nullopt;
    }

  private:
    bool budget_ok() const { return evals_ < cfg_.max_line_search_evals; }

    LinePoint eval(double alpha) {
        ++evals_;
        ++stats_.cost_evaluations;
        LinePoint pt;
        pt.alpha = alpha;
        pt.f = f_(x_ + alpha * p_);
        return pt;
    }

    void with_grad(LinePoint &pt) {
        if (!pt.has_grad) {
            ++stats_.gradient_evaluations;
            pt.g = grad_(x_ + pt.alpha * p_);
            pt.dphi = pt.g.dot(p_);
            pt.has_grad = true;
        }
    }

    static double interpolate(const LinePoint &lo, const LinePoint &hi) {
        // Cubic through (lo.f, lo.dphi) and (hi.f, hi.dphi) when both slopes
        // are known, quadratic through (lo.f, lo.dphi, hi.f) otherwise.
        const double a = lo.alpha;
        const double b = hi.alpha;
        if (hi.has_grad) {
            const double d1 = lo.dphi + hi.dphi - 3 * (lo.f - hi.f) / (a - b);
            const double disc = d1 * d1 - lo.dphi * hi.dphi;
            if (disc >= 0) {
                const double d2 = std::copysign(std::sqrt(disc), b - a);
                return b - (b - a) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2 * d2);
            }
        }
        const double denom = 2 * (hi.f - lo.f - lo.dphi * (b - a));
        if (denom != 0) {
            return a - lo.dphi * (b - a) * (b - a) / denom;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    std::optional<LinePoint> zoom(const LinePoint &start, LinePoint lo, LinePoint hi) {
        with_grad(lo);
        while (budget_ok()) {
            const double width = std::abs(hi.alpha - lo.alpha);
            if (width < 1e-14 * std::max(1.0, std::abs(lo.alpha))) {
                break;
            }
            double alpha = interpolate(lo, hi);
            const double left = std::min(lo.alpha, hi.alpha) + 0.1 * width;
            const double right = std::max(lo.alpha, hi.alpha) - 0.1 * width;
            if (!std::isfinite(alpha) || alpha < left || alpha > right) {
                alpha = 0.5 * (lo.alpha + hi.alpha);
            }
            LinePoint cur = eval(alpha);
            if (!std::isfinite(cur.f) || cur.f > start.f + cfg_.c1 * alpha * start.dphi ||
                cur.f >= lo.f) {
                hi = cur;
                continue;
            }
            with_grad(cur);
            if (std::abs(cur.dphi) <= -cfg_.c2 * start.dphi) {
                return cur;
            }
            if (cur.dphi * (hi.alpha - lo.alpha) >= 0) {
                hi = lo;
            }
            lo = cur;
        }
        // Out of budget: settle for sufficient decrease if the best bracket
        // end has it. The cost may be non-smooth, where curvature can fail.
        if (lo.alpha > 0 && lo.f < start.f + cfg_.c1 * lo.alpha * start.dphi) {
            with_grad(lo);
            return lo;
        }
        return std::nullopt;
    }

    const CostFunction &f_;
    const GradientFunction &grad_;
    const Vector &x_;
    const Vector &p_;
    const OptimizerConfig &cfg_;
    BfgsResult &stats_;
    int evals_ = 0;
};

} // namespace detail

/**
 * BFGS on the inverse Hessian with a strong-Wolfe line search.
 *
 * Stops on max|g| <= gradient_tolerance, on |f_k - f_{k+1}| <= cost_tolerance,
 * or after max_iterations. A failed line search resets the inverse Hessian
 * to the identity once per run; a second failure ends the run with
 * LineSearchFailed and the best accepted iterate.
 */
inline BfgsResult bfgs_minimize(const CostFunction &cost, const Vector &init,
                                const OptimizerConfig &config,
                                GradientFunction gradient = nullptr) {
    config.validate();
    if (!gradient) {
        gradient = [&cost, h = config.fd_step](const Vector &x) {
            return finite_diff_gradient(cost, x, h);
        };
    }
    const Eigen::Index n = init.size();
    BfgsResult res;
    res.x = init;
    res.cost = cost(init);
    ++res.cost_evaluations;
    if (!std::isfinite(res.cost)) {
        throw std::runtime_error("cost is not finite at the initial point");
    }
    Vector g = gradient(init);
    ++res.gradient_evaluations;
    res.cost_history.push_back(res.cost);
    res.grad_norm_history.push_back(n > 0 ? g.cwiseAbs().maxCoeff() : 0.0);

    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
    bool reset_used = false;
    bool fresh = true; // hinv is the identity; scale it after the first step
    double f_prev = res.cost + 0.5 * g.norm();

    while (true) {
        if (n == 0 || res.grad_norm_history.back() <= config.gradient_tolerance) {
            res.reason = Termination::GradientTolerance;
            break;
        }
        if (res.iterations >= config.max_iterations) {
            res.reason = Termination::MaxIterations;
            break;
        }
        Vector p = -hinv * g;
        double dphi0 = g.dot(p);
        if (!(dphi0 < 0)) {
            hinv.setIdentity();
            fresh = true;
            p = -g;
            dphi0 = -g.squaredNorm();
        }
        double alpha1 = 1.0;
        if (dphi0 != 0 && f_prev > res.cost) {
            alpha1 = std::min(1.0, 1.01 * 2 * (res.cost - f_prev) / dphi0);
        }
        if (!(alpha1 > 0)) {
            alpha1 = 1.0;
        }

        detail::LinePoint start;
        start.f = res.cost;
        start.dphi = dphi0;
        start.g = g;
        start.has_grad = true;
        detail::LineSearch ls(cost, gradient, res.x, p, config, res);
        const auto step = ls.run(start, alpha1);
        if (!step) {
            if (!reset_used && !fresh) {
                reset_used = true;
                hinv.setIdentity();
                fresh = true;
                continue;
            }
            res.reason = Termination::LineSearchFailed;
            break;
        }

        const Vector s = step->alpha * p;
        const Vector y = step->g - g;
        res.x += s;
        f_prev = res.cost;
        res.cost = step->f;
        g = step->g;
        ++res.iterations;
        res.cost_history.push_back(res.cost);
        res.grad_norm_history.push_back(g.cwiseAbs().maxCoeff());

        if (std::abs(f_prev - res.cost) <= config.cost_tolerance) {
            res.reason = Termination::CostTolerance;
            break;
        }

        const double ys = y.dot(s);
        if (ys > 1e-12 * s.norm() * y.norm()) {
            if (fresh) {
                hinv *= ys / y.squaredNorm();
                fresh = false;
            }
            const double rho = 1.0 / ys;
            const Vector hy = hinv * y;
            const double yhy = y.dot(hy);
            hinv.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
            hinv.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Multi-restart training
// ---------------------------------------------------------------------------

/// A minimization target. `gradient` may be empty, in which case central
/// differences with the configured step are used.
struct Objective {
    Eigen::Index dim = 0;
    CostFunction cost;
    GradientFunction gradient;
};

struct RestartRecord {
    std::uint64_t seed = 0;
    bool warm_start = false;
    double final_cost = std::numeric_limits<double>::infinity();
    int iterations = 0;
    Termination reason = Termination::Failed;
    std::string error; ///< set when reason == Failed
    Vector params;     ///< final iterate
    std::vector<double> cost_history;
    std::vector<double> grad_norm_history;
};

struct TrainResult {
    Vector best_params;
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best_restart = 0;
    std::uint64_t seed = 0;
    std::vector<RestartRecord> per_restart;

    [[nodiscard]] const std::vector<double> &cost_history() const {
        return per_restart.at(best_restart).cost_history;
    }
};

/// Seed of restart r under a master seed.
inline std::uint64_t restart_seed(std::uint64_t seed, std::size_t r) { return derive_seed(seed, r); }

inline Vector uniform_angles(Eigen::Index dim, std::uint64_t seed) {
    CounterRng rng(seed);
    Vector x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        x[i] = 2 * std::numbers::pi * rng.uniform();
    }
    return x;
}

/**
 * Runs config.restarts independent BFGS runs and keeps the lowest final cost
 * (ties to the lower restart index). Restart r starts from uniform [0, 2pi)
 * angles drawn with restart_seed(seed, r); when `warm_start` is given it
 * replaces the initial point of restart 0. A restart whose cost throws is
 * recorded as Failed; if every restart fails the first error is rethrown.
 */
inline TrainResult multi_restart_train(const Objective &obj, const OptimizerConfig &config,
                                       std::uint64_t seed,
                                       const std::optional<Vector> &warm_start = std::nullopt,
                                       std::size_t workers = 1) {
    config.validate();
    if (warm_start && warm_start->size() != obj.dim) {
        throw std::invalid_argument("warm start has the wrong length");
    }
    TrainResult out;
    out.seed = seed;
    out.per_restart.resize(static_cast<std::size_t>(config.restarts));
    parallel_for(
        out.per_restart.size(),
        [&](std::size_t r) {
            auto &rec = out.per_restart[r];
            rec.seed = restart_seed(seed, r);
            rec.warm_start = warm_start && r == 0;
            const Vector init = rec.warm_start ? *warm_start : uniform_angles(obj.dim, rec.seed);
            try {
                auto res = bfgs_minimize(obj.cost, init, config, obj.gradient);
                rec.params = std::move(res.x);
                rec.final_cost = res.cost;
                rec.iterations = res.iterations;
                rec.reason = res.reason;
                rec.cost_history = std::move(res.cost_history);
                rec.grad_norm_history = std::move(res.grad_norm_history);
            } catch (const std::exception &e) {
                rec.reason = Termination::Failed;
                rec.error = e.what();
            }
        },
        workers);
    bool any = false;
    for (std::size_t r = 0; r < out.per_restart.size(); ++r) {
        const auto &rec = out.per_restart[r];
        if (rec.reason != Termination::Failed && (!any || rec.final_cost < out.best_cost)) {
            any = true;
            out.best_cost = rec.final_cost;
            out.best_restart = r;
        }
    }
    if (!any) {
        throw std::runtime_error("all restarts failed; first error: " + out.per_restart[0].error);
    }
    out.best_params = out.per_restart[out.best_restart].params;
    return out;
}

// ---------------------------------------------------------------------------
// Gradient statistics
// ---------------------------------------------------------------------------

struct GradientVariance {
    double mean_variance = 0.0; ///< <Var(g_i)>_i
    double std_err = 0.0;       ///< bootstrap standard error of mean_variance
    Vector per_coordinate;      ///< Var(g_i)
    std::size_t samples = 0;    ///< gradients in the pool (tasks x parameter points)
};

inline constexpr int kBootstrapResamples = 200;

/// Mean over coordinates of the unbiased per-coordinate variance of the rows.
inline double mean_coordinate_variance(const Eigen::MatrixXd &rows) {
    const auto m = static_cast<double>(rows.rows());
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    const Eigen::RowVectorXd var = (rows.rowwise() - mean).colwise().squaredNorm() / (m - 1);
    return var.mean();
}

/**
 * Gradient variance over a pool of n_tasks x n_param_samples gradients.
 *
 * Task t supplies its objective through `make_objective(t)`; each of its
 * parameter points is drawn uniformly from [0, 2pi) with seed
 * derive_seed(derive_seed(seed, t), s). Var(g_i) is the unbiased variance
 * of coordinate i over the whole pool; the standard error comes from 200
 * bootstrap resamples of pool rows.
 */
inline GradientVariance gradient_variance(const std::function<Objective(std::size_t)> &make_objective,
                                          std::size_t n_tasks, std::size_t n_param_samples,
                                          double fd_step, std::uint64_t seed,
                                          std::size_t workers = default_workers()) {
    if (n_tasks < 1 || n_param_samples < 1 || n_tasks * n_param_samples < 2) {
        throw std::invalid_argument("gradient variance needs at least two gradient samples");
    }
    std::vector<Objective> objectives(n_tasks);
    parallel_for(n_tasks, [&](std::size_t t) { objectives[t] = make_objective(t); }, workers);
    const Eigen::Index dim = objectives[0].dim;
    for (const auto &o : objectives) {
        if (o.dim != dim) {
            throw std::invalid_argument("objectives disagree on the parameter count");
        }
    }
    const std::size_t total = n_tasks * n_param_samples;
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(total), dim);
    parallel_for(
        total,
        [&](std::size_t k) {
            const std::size_t t = k / n_param_samples;
            const std::size_t s = k % n_param_samples;
            const auto &obj = objectives[t];
            const Vector x = uniform_angles(dim, derive_seed(derive_seed(seed, t), s));
            const Vector g = obj.gradient ? obj.gradient(x) : finite_diff_gradient(obj.cost, x, fd_step);
            rows.row(static_cast<Eigen::Index>(k)) = g.transpose();
        },
        workers);

    GradientVariance out;
    out.samples = total;
    if (dim == 0) {
        return out;
    }
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    out.per_coordinate = ((rows.rowwise() - mean).colwise().squaredNorm() /
                          static_cast<double>(total - 1))
                             .transpose();
    out.mean_variance = out.per_coordinate.mean();

    CounterRng rng(derive_seed(seed, 0xB0075742ULL));
    std::vector<double> boot(kBootstrapResamples);
    Eigen::MatrixXd resampled(rows.rows(), rows.cols());
    for (auto &b : boot) {
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            const auto pick = static_cast<Eigen::Index>(rng() % total);
            resampled.row(r) = rows.row(pick);
        }
        b = mean_coordinate_variance(resampled);
    }
    double bm = 0.0;
    for (double b : boot) {
        bm += b;
    }
    bm /= static_cast<double>(boot.size());
    double ss = 0.0;
    for (double b : boot) {
        ss += (b - bm) * (b - bm);
    }
    out.std_err = std::sqrt(ss / static_cast<double>(boot.size() - 1));
    return out;
}

/// Training traces as CSV: restart,iteration,cost,grad_norm.
inline void write_trace_csv(std::ostream &os, const TrainResult &result) {
    os << "restart,iteration,cost,grad_norm\n";
    os.precision(17);
    for (std::size_t r = 0; r < result.per_restart.size(); ++r) {
        const auto &rec = result.per_restart[r];
        for (std::size_t k = 0; k < rec.cost_history.size(); ++k) {
            os << r << ',' << k << ',' << rec.cost_history[k] << ','
               << rec.grad_norm_history[k] << '\n';
        }
    }
}

} // namespace mlevqc
