#pragma once

// Experiment drivers. Each experiment is a sequence of units (one depth,
// one architecture/depth pair, ...) processed in a fixed order; work inside
// a unit runs in parallel and is reduced in index order, so the CSV does not
// depend on the worker count.
//
// Seed streams under the master seed s:
//   derive_seed(s, 0)  ensemble samples (pair p uses samples 2p and 2p+1)
//   derive_seed(s, 1)  training restarts
//   derive_seed(s, 2)  gradient-variance parameter points
//   derive_seed(s, 3)  random circuits for operator size

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mlevqc/ansatz.hpp"
#include "mlevqc/circuit_objective.hpp"
#include "mlevqc/discriminate.hpp"
#include "mlevqc/ensembles.hpp"
#include "mlevqc/harness/config.hpp"
#include "mlevqc/harness/output.hpp"
#include "mlevqc/optimize.hpp"
#include "mlevqc/scramble.hpp"
#include "mlevqc/state_io.hpp"
#include "mlevqc/training.hpp"

namespace mlevqc::harness {

enum SeedStream : std::uint64_t { kEnsembleStream = 0, kTrainingStream = 1, kGradientStream = 2, kCircuitStream = 3 };

/// Ensemble member, read from / written to `cache_dir` when one is set.
inline StateVector cached_sample(const EnsembleSpec &spec, std::uint64_t index,
                                 const std::string &cache_dir) {
    if (cache_dir.empty()) {
        return sample_state(spec, index);
    }
    const auto path = std::filesystem::path(cache_dir) / state_cache_name(spec, index);
    if (std::filesystem::exists(path)) {
        auto rec = load_state(path.string());
        if (rec.spec.kind == spec.kind && rec.spec.n_qubits == spec.n_qubits &&
            rec.spec.depth == spec.depth && rec.spec.field == spec.field &&
            rec.spec.seed == spec.seed && rec.sample_index == index) {
            return std::move(rec.state);
        }
    }
    std::filesystem::create_directories(cache_dir);
    StateRecord rec{spec, index, sample_state(spec, index)};
    // Write-then-rename so concurrent workers never read a partial file.
    const auto tmp = path.string() + ".tmp" + std::to_string(derive_seed(spec.seed, index));
    save_state(tmp, rec);
    std::filesystem::rename(tmp, path);
    return std::move(rec.state);
}

struct RunContext {
    const ExperimentConfig &cfg;
    ResultSink &sink;
    std::size_t workers;
    std::ofstream *trace = nullptr;
    std::ostream *log = nullptr;

    void note(const std::string &msg) const {
        if (log != nullptr) {
            *log << msg << '\n';
        }
    }
};

inline std::vector<DiscriminationTask> make_tasks(const RunContext &ctx, int n,
                                                  const TaskSource &src) {
    const auto mode = ctx.cfg.measurement;
    std::vector<DiscriminationTask> tasks;
    if (src.tfim_pair) {
        tasks.emplace_back(tfim_ground(n, src.tfim_pair->first).ground,
                           tfim_ground(n, src.tfim_pair->second).ground, mode);
        return tasks;
    }
    EnsembleSpec spec = src.spec;
    spec.n_qubits = n;
    spec.seed = derive_seed(ctx.cfg.seed, kEnsembleStream);
    const auto pairs = static_cast<std::size_t>(ctx.cfg.pairs);
    std::vector<std::optional<StateVector>> states(2 * pairs);
    parallel_for(
        states.size(), [&](std::size_t i) { states[i] = cached_sample(spec, i, ctx.cfg.cache_dir); },
        ctx.workers);
    for (std::size_t p = 0; p < pairs; ++p) {
        tasks.emplace_back(std::move(*states[2 * p]), std::move(*states[2 * p + 1]), mode);
    }
    return tasks;
}

inline std::vector<CircuitObjective> make_objectives(const ExperimentConfig &cfg,
                                                     const CircuitLayout &layout,
                                                     const std::vector<DiscriminationTask> &tasks) {
    std::vector<CircuitObjective> out;
    for (const auto &t : tasks) {
        out.push_back(cfg.cost == CostKind::Dis ? CircuitObjective::discrimination(layout, t)
                                                : CircuitObjective::generation(layout, t.psi0));
    }
    return out;
}

inline std::string unit_key(std::initializer_list<std::string> parts) {
    std::string key;
    for (const auto &p : parts) {
        key += key.empty() ? "" : "/";
        key += p;
    }
    return key;
}

inline nlohmann::json params_payload(const std::vector<TaskTraining> &trained) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto &t : trained) {
        out.push_back(std::vector<double>(t.params.data(), t.params.data() + t.params.size()));
    }
    return out;
}

inline std::vector<Vector> params_from_payload(const nlohmann::json &payload) {
    std::vector<Vector> out;
    for (const auto &p : payload) {
        const auto v = p.get<std::vector<double>>();
        out.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return out;
}

inline void write_trace(const RunContext &ctx, const std::string &unit,
                        const std::vector<TaskTraining> &trained) {
    if (ctx.trace == nullptr) {
        return;
    }
    auto &os = *ctx.trace;
    for (std::size_t t = 0; t < trained.size(); ++t) {
        for (std::size_t r = 0; r < trained[t].restarts.size(); ++r) {
            const auto &rec = trained[t].restarts[r];
            for (std::size_t k = 0; k < rec.cost_history.size(); ++k) {
                os << csv_field(unit) << ',' << t << ',' << r << ',' << k << ','
                   << format_number(rec.cost_history[k]) << ','
                   << format_number(rec.grad_norm_history[k]) << '\n';
            }
        }
    }
    os.flush();
}

/**
 * One architecture, one n, a list of depths: trains every task at every
 * depth with warm starts from the previous depth. Shared by discriminate,
 * generate and arch-bench.
 */
inline void run_training_sweep(const RunContext &ctx, Architecture arch, int n,
                               const std::vector<DiscriminationTask> &tasks,
                               const std::string &label) {
    const auto &cfg = ctx.cfg;
    const std::string exp(name(cfg.kind));
    const std::uint64_t seed = derive_seed(derive_seed(derive_seed(cfg.seed, kTrainingStream), n),
                                           static_cast<std::uint64_t>(arch));
    std::vector<int> depths = cfg.depths;
    std::sort(depths.begin(), depths.end());
    depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
    std::optional<CircuitLayout> prev_layout;
    std::vector<Vector> prev_params;
    for (int d : depths) {
        if (!is_extensive(arch) && d > *max_depth(arch, n)) {
            ctx.note("skipping " + std::string(name(arch)) + " at D=" + std::to_string(d) +
                     " (maximum depth " + std::to_string(*max_depth(arch, n)) + ")");
            continue;
        }
        const auto layout = layout_for_depth(arch, n, d);
        const std::string unit = unit_key({exp, std::string(name(arch)), "n" + std::to_string(n),
                                           "D" + std::to_string(d)});
        if (const auto *done = ctx.sink.completed(unit)) {
            ctx.sink.replay(unit);
            prev_params = params_from_payload(done->at("payload"));
            prev_layout = layout;
            continue;
        }
        std::vector<TaskTraining> trained;
        try {
            const auto objectives = make_objectives(cfg, layout, tasks);
            trained = train_all(objectives, cfg.optimizer, seed, prev_layout ? &*prev_layout : nullptr,
                                prev_layout ? &prev_params : nullptr, ctx.workers);
        } catch (const std::exception &e) {
            throw std::runtime_error("unit " + unit + ": " + e.what());
        }
        ResultRow base;
        base.experiment = exp;
        base.arch = std::string(name(arch));
        base.n = n;
        base.depth = d;
        base.d_star = layout.entangler_layers();
        base.d0_or_g = label;
        base.seed = cfg.seed;
        base.samples = tasks.size();
        std::vector<ResultRow> rows;
        auto add = [&](const std::string &metric, const MeanEstimate &e) {
            ResultRow r = base;
            r.metric = metric;
            r.value = e.mean;
            r.std_err = e.std_err;
            rows.push_back(r);
        };
        std::vector<double> costs;
        std::vector<double> errors;
        std::vector<double> phs;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            costs.push_back(trained[t].cost);
            errors.push_back(trained[t].error);
            phs.push_back(helstrom_pure(tasks[t]));
        }
        if (cfg.cost == CostKind::Dis) {
            add("P_E", estimate_mean(errors));
            add("C_dis", estimate_mean(costs));
            add("P_H", estimate_mean(phs));
        } else {
            add("C_gen", estimate_mean(costs));
        }
        ResultRow pc = base;
        pc.metric = "param_count";
        pc.value = layout.param_count();
        rows.push_back(pc);
        ctx.sink.complete(unit, rows, params_payload(trained));
        write_trace(ctx, unit, trained);
        prev_layout = layout;
        prev_params.clear();
        for (const auto &t : trained) {
            prev_params.push_back(t.params);
        }
    }
}

inline void run_training(const RunContext &ctx) {
    const auto src = ctx.cfg.source();
    for (int n : ctx.cfg.ns) {
        std::vector<DiscriminationTask> tasks;
        try {
            tasks = make_tasks(ctx, n, src);
        } catch (const std::exception &e) {
            throw std::runtime_error("unit " + std::string(name(ctx.cfg.kind)) + "/n" + std::to_string(n) +
                                     "/inputs: " + e.what());
        }
        const auto &archs = ctx.cfg.kind == ExperimentKind::ArchBench
                                ? ctx.cfg.archs
                                : std::vector<Architecture>{ctx.cfg.archs.front()};
        for (auto arch : archs) {
            run_training_sweep(ctx, arch, n, tasks, src.label());
        }
    }
}

inline void run_dc_scan(const RunContext &ctx) {
    const auto &cfg = ctx.cfg;
    const auto src = cfg.source();
    const auto arch = cfg.archs.front();
    for (int n : cfg.ns) {
        for (int d0 : cfg.d0s) {
            TaskSource s = src;
            s.spec.depth = d0;
            const std::string label = s.spec.label();
            const std::string unit = unit_key({"dc-scan", std::string(name(arch)), "n" + std::to_string(n), label});
            if (ctx.sink.completed(unit)) {
                ctx.sink.replay(unit);
                continue;
            }
            CriticalDepthResult res;
            std::vector<DiscriminationTask> tasks;
            try {
                tasks = make_tasks(ctx, n, s);
                const auto seed = derive_seed(derive_seed(derive_seed(cfg.seed, kTrainingStream), n),
                                              static_cast<std::uint64_t>(d0));
                res = critical_depth(tasks, arch, cfg.max_depth, cfg.optimizer, seed, 2.0, ctx.workers);
            } catch (const std::exception &e) {
                throw std::runtime_error("unit " + unit + ": " + e.what());
            }
            std::vector<ResultRow> rows;
            ResultRow base;
            base.experiment = "dc-scan";
            base.arch = std::string(name(arch));
            base.n = n;
            base.d0_or_g = label;
            base.seed = cfg.seed;
            base.samples = tasks.size();
            for (const auto &pt : res.curve) {
                ResultRow r = base;
                r.depth = pt.depth;
                r.d_star = pt.entangler_layers;
                r.metric = "P_E";
                r.value = pt.error.mean;
                r.std_err = pt.error.std_err;
                rows.push_back(r);
                r.metric = "P_H";
                r.value = pt.helstrom.mean;
                r.std_err = pt.helstrom.std_err;
                rows.push_back(r);
            }
            ResultRow th = base;
            th.metric = "threshold";
            th.value = res.threshold;
            rows.push_back(th);
            ResultRow dc = base;
            dc.metric = "D_c";
            dc.value = res.critical_depth ? *res.critical_depth : std::numeric_limits<double>::infinity();
            if (res.critical_depth) {
                dc.depth = *res.critical_depth;
            }
            rows.push_back(dc);
            ctx.sink.complete(unit, rows);
        }
    }
}

inline void run_gradvar(const RunContext &ctx) {
    const auto &cfg = ctx.cfg;
    const auto src = cfg.source();
    const std::string exp = "gradvar";
    for (int n : cfg.ns) {
        std::optional<std::vector<DiscriminationTask>> tasks;
        for (auto arch : cfg.archs) {
            for (int d : cfg.depths) {
                const std::string unit = unit_key({exp, std::string(name(arch)), "n" + std::to_string(n),
                                                   "D" + std::to_string(d),
                                                   cfg.cost == CostKind::Dis ? "dis" : "gen"});
                if (ctx.sink.completed(unit)) {
                    ctx.sink.replay(unit);
                    continue;
                }
                const auto layout = layout_for_depth(arch, n, d);
                GradientVariance gv;
                try {
                    if (!tasks) {
                        tasks = make_tasks(ctx, n, src);
                    }
                    const auto objectives = make_objectives(cfg, layout, *tasks);
                    const auto seed = derive_seed(derive_seed(derive_seed(cfg.seed, kGradientStream), n),
                                                  static_cast<std::uint64_t>(d));
                    gv = gradient_variance(
                        [&](std::size_t t) { return objectives.at(t).as_objective(cfg.optimizer.fd_step); },
                        objectives.size(), static_cast<std::size_t>(cfg.param_samples),
                        cfg.optimizer.fd_step, seed, ctx.workers);
                } catch (const std::exception &e) {
                    throw std::runtime_error("unit " + unit + ": " + e.what());
                }
                ResultRow r;
                r.experiment = exp;
                r.arch = std::string(name(arch));
                r.n = n;
                r.depth = d;
                r.d_star = layout.entangler_layers();
                r.d0_or_g = src.label();
                r.seed = cfg.seed;
                r.samples = gv.samples;
                r.metric = cfg.cost == CostKind::Dis ? "var_grad_dis" : "var_grad_gen";
                r.value = gv.mean_variance;
                r.std_err = gv.std_err;
                ctx.sink.complete(unit, {r});
            }
        }
    }
}

inline void run_opsize(const RunContext &ctx, std::ostream *size_csv) {
    const auto &cfg = ctx.cfg;
    if (size_csv != nullptr) {
        write_size_csv_header(*size_csv);
    }
    for (int n : cfg.ns) {
        for (auto arch : cfg.archs) {
            for (int d : cfg.depths) {
                const std::string unit = unit_key({"opsize", std::string(name(arch)), "n" + std::to_string(n),
                                                   "D" + std::to_string(d)});
                SizeEstimate est;
                if (const auto *done = ctx.sink.completed(unit)) {
                    ctx.sink.replay(unit);
                    const auto &p = done->at("payload");
                    est.size.mean = p.at("mean").get<double>();
                    est.size.std_err = p.at("std_err").get<double>();
                    est.size.count = p.at("count").get<std::size_t>();
                } else {
                    try {
                        const auto seed = derive_seed(derive_seed(derive_seed(cfg.seed, kCircuitStream), n),
                                                      static_cast<std::uint64_t>(d));
                        est = avg_operator_size(arch, n, d, static_cast<std::size_t>(cfg.samples), seed,
                                                ctx.workers);
                    } catch (const std::exception &e) {
                        throw std::runtime_error("unit " + unit + ": " + e.what());
                    }
                    const auto layout = layout_for_depth(arch, n, d);
                    ResultRow r;
                    r.experiment = "opsize";
                    r.arch = std::string(name(arch));
                    r.n = n;
                    r.depth = d;
                    r.d_star = layout.entangler_layers();
                    r.seed = cfg.seed;
                    r.samples = est.size.count;
                    std::vector<ResultRow> rows;
                    r.metric = "operator_size";
                    r.value = est.size.mean;
                    r.std_err = est.size.std_err;
                    rows.push_back(r);
                    r.std_err.reset();
                    r.metric = "max_norm_error";
                    r.value = est.max_norm_error;
                    rows.push_back(r);
                    r.metric = "max_identity_coeff";
                    r.value = est.max_identity_coeff;
                    rows.push_back(r);
                    ctx.sink.complete(unit, rows,
                                      {{"mean", est.size.mean},
                                       {"std_err", est.size.std_err},
                                       {"count", est.size.count}});
                }
                if (size_csv != nullptr) {
                    write_size_csv_row(*size_csv, arch, n, d, est);
                }
            }
        }
    }
}

/// Kolmogorov distance between the sample and F(x) = 1 - (1 - x)^(d - 1).
inline double overlap_cdf_distance(std::vector<double> xs, double dim) {
    std::sort(xs.begin(), xs.end());
    const auto m = static_cast<double>(xs.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = 1.0 - std::pow(1.0 - std::clamp(xs[i], 0.0, 1.0), dim - 1.0);
        dist = std::max({dist, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return dist;
}

inline void run_helstrom_stats(const RunContext &ctx) {
    const auto &cfg = ctx.cfg;
    const auto src = cfg.source();
    for (int n : cfg.ns) {
        const std::string unit = unit_key({"helstrom-stats", "n" + std::to_string(n), src.label()});
        if (ctx.sink.completed(unit)) {
            ctx.sink.replay(unit);
            continue;
        }
        EnsembleSpec spec = src.spec;
        spec.n_qubits = n;
        spec.seed = derive_seed(cfg.seed, kEnsembleStream);
        std::vector<double> overlaps;
        try {
            overlaps = pair_overlaps(spec, static_cast<std::size_t>(cfg.pairs), ctx.workers);
        } catch (const std::exception &e) {
            throw std::runtime_error("unit " + unit + ": " + e.what());
        }
        std::vector<double> phs;
        for (double f : overlaps) {
            phs.push_back(0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - f))));
        }
        const double dim = std::pow(2.0, n);
        ResultRow r;
        r.experiment = "helstrom-stats";
        r.n = n;
        r.d0_or_g = src.label();
        r.seed = cfg.seed;
        r.samples = overlaps.size();
        std::vector<ResultRow> rows;
        auto add = [&](const std::string &metric, double value, std::optional<double> se) {
            r.metric = metric;
            r.value = value;
            r.std_err = se;
            rows.push_back(r);
        };
        const auto ph = estimate_mean(phs);
        const auto ov = estimate_mean(overlaps);
        add("P_H", ph.mean, ph.std_err);
        add("P_H_haar_exact", 1.0 / (2.0 * (2.0 * dim - 1.0)), std::nullopt);
        add("overlap", ov.mean, ov.std_err);
        add("overlap_haar_exact", 1.0 / dim, std::nullopt);
        add("overlap_cdf_sup_distance", overlap_cdf_distance(overlaps, dim), std::nullopt);
        ctx.sink.complete(unit, rows);
    }
}

inline void run_tfim(const RunContext &ctx) {
    const auto &cfg = ctx.cfg;
    for (int n : cfg.ns) {
        for (double g : cfg.fields) {
            std::ostringstream gs;
            gs << g;
            const std::string unit = unit_key({"tfim", "n" + std::to_string(n), "g" + gs.str()});
            if (ctx.sink.completed(unit)) {
                ctx.sink.replay(unit);
                continue;
            }
            TfimSpectrumSlice s;
            try {
                s = tfim_ground(n, g);
            } catch (const std::exception &e) {
                throw std::runtime_error("unit " + unit + ": " + e.what());
            }
            ResultRow r;
            r.experiment = "tfim";
            r.n = n;
            r.d0_or_g = gs.str();
            r.seed = cfg.seed;
            r.samples = 1;
            std::vector<ResultRow> rows;
            auto add = [&](const std::string &metric, double value) {
                r.metric = metric;
                r.value = value;
                rows.push_back(r);
            };
            add("E0", s.e0);
            add("E1", s.e1);
            add("gap", s.e1 - s.e0);
            add("entropy_half_bits", bipartite_entropy(s.ground, n / 2));
            add("degenerate", s.degenerate ? 1.0 : 0.0);
            ctx.sink.complete(unit, rows);
        }
    }
}

/// Runs a validated config. Returns the number of units replayed from a
/// manifest (0 without resume).
inline std::size_t run_experiment(const ExperimentConfig &cfg, bool resume = false,
                                  std::ostream *log = &std::cerr) {
    validate(cfg);
    const std::uint64_t hash = fnv1a(cfg.canonical().dump());
    ResultSink sink(cfg.output, cfg.timestamp, hash, resume);
    std::unique_ptr<std::ofstream> trace;
    if (!cfg.trace.empty()) {
        trace = std::make_unique<std::ofstream>(cfg.trace, std::ios::binary | std::ios::trunc);
        if (!*trace) {
            throw std::runtime_error("cannot open trace file '" + cfg.trace + "'");
        }
        *trace << "unit,task,restart,iteration,cost,grad_norm\n";
    }
    RunContext ctx{cfg, sink, cfg.workers > 0 ? cfg.workers : default_workers(), trace.get(), log};
    switch (cfg.kind) {
    case ExperimentKind::Discriminate:
    case ExperimentKind::Generate:
    case ExperimentKind::ArchBench: {
        if (cfg.kind == ExperimentKind::Generate && cfg.cost != CostKind::Gen) {
            ExperimentConfig gen = cfg;
            gen.cost = CostKind::Gen;
            RunContext gctx{gen, sink, ctx.workers, trace.get(), log};
            run_training(gctx);
        } else {
            run_training(ctx);
        }
        break;
    }
    case ExperimentKind::DcScan: run_dc_scan(ctx); break;
    case ExperimentKind::GradVar: run_gradvar(ctx); break;
    case ExperimentKind::OpSize: {
        std::unique_ptr<std::ofstream> size_csv;
        if (!cfg.output.empty()) {
            size_csv = std::make_unique<std::ofstream>(cfg.output + ".size.csv", std::ios::binary | std::ios::trunc);
        }
        run_opsize(ctx, size_csv.get());
        break;
    }
    case ExperimentKind::HelstromStats: run_helstrom_stats(ctx); break;
    case ExperimentKind::Tfim: run_tfim(ctx); break;
    }
    return sink.replayed();
}

} // namespace mlevqc::harness
