#pragma once

/**
 * @file
 * Depth sweeps of trained discrimination circuits and the critical depth
 * D_c, the smallest depth whose ensemble-mean error reaches
 * multiplier * <P_H>.
 */

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mlevqc/ansatz.hpp"
#include "mlevqc/circuit_objective.hpp"
#include "mlevqc/discriminate.hpp"
#include "mlevqc/ensembles.hpp"
#include "mlevqc/optimize.hpp"
#include "mlevqc/parallel.hpp"

namespace mlevqc {

struct TaskTraining {
    double cost = 0.0;  ///< trained C_dis (or C_gen)
    double error = 0.0; ///< trained P_E (discrimination only)
    Vector params;
    int best_restart = -1; ///< -1 when nothing was trained
    std::uint64_t seed = 0;
    std::vector<RestartRecord> restarts;
};

/// Seed of (task, depth) training under a master seed.
inline std::uint64_t training_seed(std::uint64_t seed, std::size_t task, int depth) {
    return derive_seed(derive_seed(seed, task), static_cast<std::uint64_t>(depth));
}

/// Trains one objective. A parameter-free layout is evaluated, not trained.
inline TaskTraining train_objective(const CircuitObjective &obj, const OptimizerConfig &config,
                                    std::uint64_t seed,
                                    const std::optional<Vector> &warm_start = std::nullopt) {
    TaskTraining out;
    out.seed = seed;
    if (obj.dim() == 0) {
        out.params = Vector(0);
        out.cost = obj(out.params);
    } else {
        auto res = multi_restart_train(obj.as_objective(config.fd_step), config, seed, warm_start);
        out.params = res.best_params;
        out.cost = res.best_cost;
        out.best_restart = static_cast<int>(res.best_restart);
        out.restarts = std::move(res.per_restart);
    }
    out.error = obj.kind() == CircuitObjective::Kind::Discrimination ? out.cost + obj.helstrom() : 0.0;
    return out;
}

struct DepthPoint {
    int depth = 0;
    int entangler_layers = 0;
    int param_count = 0;
    MeanEstimate error;    ///< <P_E>
    MeanEstimate cost;     ///< <C_dis>
    MeanEstimate helstrom; ///< <P_H>
    std::vector<TaskTraining> tasks;
};

/// Trains each objective (in parallel) with seed training_seed(seed, t,
/// depth). When `prev_params` is given, restart 0 of objective t is
/// warm-started from embed_parameters(*prev_layout, prev_params[t], layout)
/// if that embedding exists.
inline std::vector<TaskTraining> train_all(const std::vector<CircuitObjective> &objectives,
                                           const OptimizerConfig &config, std::uint64_t seed,
                                           const CircuitLayout *prev_layout = nullptr,
                                           const std::vector<Vector> *prev_params = nullptr,
                                           std::size_t workers = default_workers()) {
    std::vector<TaskTraining> out(objectives.size());
    parallel_for(
        objectives.size(),
        [&](std::size_t t) {
            const auto &obj = objectives[t];
            std::optional<Vector> warm;
            if (prev_layout != nullptr && prev_params != nullptr) {
                warm = embed_parameters(*prev_layout, prev_params->at(t), obj.layout());
            }
            out[t] = train_objective(obj, config, training_seed(seed, t, obj.layout().depth()), warm);
        },
        workers);
    return out;
}

/// Trains every task on `layout`, warm-starting from `prev` as in train_all.
inline DepthPoint train_depth(const std::vector<DiscriminationTask> &tasks,
                              const CircuitLayout &layout, const OptimizerConfig &config,
                              std::uint64_t seed, const CircuitLayout *prev_layout = nullptr,
                              const DepthPoint *prev = nullptr,
                              std::size_t workers = default_workers()) {
    DepthPoint pt;
    pt.depth = layout.depth();
    pt.entangler_layers = layout.entangler_layers();
    pt.param_count = layout.param_count();
    std::vector<CircuitObjective> objectives;
    for (const auto &t : tasks) {
        objectives.push_back(CircuitObjective::discrimination(layout, t));
    }
    std::vector<Vector> prev_params;
    if (prev != nullptr) {
        for (const auto &tr : prev->tasks) {
            prev_params.push_back(tr.params);
        }
    }
    pt.tasks = train_all(objectives, config, seed, prev_layout, prev ? &prev_params : nullptr,
                         workers);
    std::vector<double> errs;
    std::vector<double> costs;
    std::vector<double> phs;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        errs.push_back(pt.tasks[t].error);
        costs.push_back(pt.tasks[t].cost);
        phs.push_back(objectives[t].helstrom());
    }
    pt.error = estimate_mean(errs);
    pt.cost = estimate_mean(costs);
    pt.helstrom = estimate_mean(phs);
    return pt;
}

/**
 * Trains every task at each depth in increasing order, warm-starting from
 * the previous depth (see train_depth), so trained costs do not increase
 * with depth for prefix-nested layouts. Results do not depend on the worker
 * count. `on_point` is called after each completed depth.
 */
inline std::vector<DepthPoint>
depth_sweep(const std::vector<DiscriminationTask> &tasks, Architecture arch, std::vector<int> depths,
            const OptimizerConfig &config, std::uint64_t seed,
            std::size_t workers = default_workers(),
            const std::function<void(const DepthPoint &)> &on_point = nullptr) {
    if (tasks.empty()) {
        throw std::invalid_argument("depth sweep needs at least one task");
    }
    std::sort(depths.begin(), depths.end());
    const int n = tasks[0].n_qubits();
    std::vector<DepthPoint> curve;
    std::optional<CircuitLayout> prev_layout;
    for (int depth : depths) {
        const CircuitLayout layout = layout_for_depth(arch, n, depth);
        curve.push_back(train_depth(tasks, layout, config, seed,
                                    prev_layout ? &*prev_layout : nullptr,
                                    curve.empty() ? nullptr : &curve.back(), workers));
        prev_layout = layout;
        if (on_point) {
            on_point(curve.back());
        }
    }
    return curve;
}

/// Degenerate-threshold rule: below this <P_H> the target is absolute.
inline constexpr double kDegenerateHelstrom = 1e-12;
inline constexpr double kAbsoluteErrorTarget = 1e-6;

inline double critical_threshold(double mean_helstrom, double multiplier = 2.0) {
    return mean_helstrom < kDegenerateHelstrom ? kAbsoluteErrorTarget : multiplier * mean_helstrom;
}

struct CriticalDepthResult {
    std::optional<int> critical_depth; ///< nullopt when censored
    double threshold = 0.0;
    std::vector<DepthPoint> curve;

    [[nodiscard]] bool censored() const { return !critical_depth.has_value(); }
};

/**
 * Scans D = 0, 1, ..., max_depth and stops at the first depth with
 * <P_E> <= threshold. Extensive architectures only.
 */
inline CriticalDepthResult critical_depth(const std::vector<DiscriminationTask> &tasks,
                                          Architecture arch, int max_depth,
                                          const OptimizerConfig &config, std::uint64_t seed,
                                          double multiplier = 2.0,
                                          std::size_t workers = default_workers()) {
    if (!is_extensive(arch)) {
        throw std::invalid_argument("critical depth scans need an extensive architecture");
    }
    if (tasks.empty() || max_depth < 0) {
        throw std::invalid_argument("critical depth needs tasks and max_depth >= 0");
    }
    std::vector<double> phs;
    for (const auto &t : tasks) {
        phs.push_back(helstrom_pure(t));
    }
    CriticalDepthResult out;
    out.threshold = critical_threshold(estimate_mean(phs).mean, multiplier);
    std::optional<CircuitLayout> prev_layout;
    for (int d = 0; d <= max_depth; ++d) {
        const CircuitLayout layout = layout_for_depth(arch, tasks[0].n_qubits(), d);
        auto pt = train_depth(tasks, layout, config, seed, prev_layout ? &*prev_layout : nullptr,
                              out.curve.empty() ? nullptr : &out.curve.back(), workers);
        prev_layout = layout;
        const bool reached = pt.error.mean <= out.threshold;
        out.curve.push_back(std::move(pt));
        if (reached) {
            out.critical_depth = d;
            break;
        }
    }
    return out;
}

} // namespace mlevqc
