// mlevqc command-line driver.
//
//   mlevqc run <experiment> [flags]        flags override --config fields
//   mlevqc run --config file.json [flags]
//   mlevqc validate file.json
//   mlevqc layout --arch ttn --n 8 --depth 3
//
// Exit codes: 0 ok, 1 runtime failure, 2 schema error, 3 capacity error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "mlevqc/ansatz_json.hpp"
#include "mlevqc/harness/config.hpp"
#include "mlevqc/harness/experiments.hpp"

namespace {

using namespace mlevqc;
using namespace mlevqc::harness;

enum Exit { kOk = 0, kRuntime = 1, kSchema = 2, kCapacity = 3 };

struct Overrides {
    std::string kind;
    std::string config;
    std::optional<std::string> arch;
    std::optional<std::string> n;
    std::optional<std::string> depths;
    std::optional<std::string> ensemble;
    std::optional<std::string> d0s;
    std::optional<std::string> fields;
    std::optional<int> pairs;
    std::optional<int> restarts;
    std::optional<int> samples;
    std::optional<int> param_samples;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> measurement;
    std::optional<std::string> cost;
    std::optional<int> max_iterations;
    std::optional<int> max_depth;
    std::optional<std::string> output;
    std::optional<std::string> trace;
    std::optional<std::string> cache_dir;
    std::optional<int> workers;
    bool no_timestamp = false;
    bool resume = false;
};

/// Applies flags on top of the file config. Flag errors are schema errors.
ExperimentConfig assemble(const Overrides &o) {
    ExperimentConfig c;
    if (!o.config.empty()) {
        c = load_config(o.config);
    }
    auto flag = [](const std::string &f, auto &&apply) {
        try {
            apply();
        } catch (const schema_error &) {
            throw;
        } catch (const std::exception &e) {
            throw schema_error("--" + f + ": " + e.what());
        }
    };
    if (!o.kind.empty()) {
        flag("experiment", [&] { c.kind = parse_experiment(o.kind); });
    } else if (o.config.empty()) {
        throw schema_error("give an experiment name or --config");
    }
    if (o.arch) {
        flag("arch", [&] {
            c.archs.clear();
            std::size_t start = 0;
            while (true) {
                const auto comma = o.arch->find(',', start);
                c.archs.push_back(parse_architecture(o.arch->substr(start, comma - start)));
                if (comma == std::string::npos) {
                    break;
                }
                start = comma + 1;
            }
        });
    }
    if (o.n) {
        flag("n", [&] { c.ns = parse_int_list(*o.n); });
    }
    if (o.depths) {
        flag("depths", [&] { c.depths = parse_int_list(*o.depths); });
    }
    if (o.ensemble) {
        flag("ensemble", [&] {
            (void)parse_task_source(*o.ensemble);
            c.ensemble = *o.ensemble;
        });
    }
    if (o.d0s) {
        flag("d0s", [&] { c.d0s = parse_int_list(*o.d0s); });
    }
    if (o.fields) {
        flag("g", [&] { c.fields = parse_double_list(*o.fields); });
    }
    if (o.pairs) {
        c.pairs = *o.pairs;
    }
    if (o.restarts) {
        c.optimizer.restarts = *o.restarts;
    }
    if (o.samples) {
        c.samples = *o.samples;
    }
    if (o.param_samples) {
        c.param_samples = *o.param_samples;
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.measurement) {
        flag("measurement", [&] { c.measurement = harness::detail::parse_measurement(*o.measurement); });
    }
    if (o.cost) {
        flag("cost", [&] { c.cost = harness::detail::parse_cost(*o.cost); });
    }
    if (o.max_iterations) {
        c.optimizer.max_iterations = *o.max_iterations;
    }
    if (o.max_depth) {
        c.max_depth = *o.max_depth;
    }
    if (o.output) {
        c.output = *o.output;
    }
    if (o.trace) {
        c.trace = *o.trace;
    }
    if (o.cache_dir) {
        c.cache_dir = *o.cache_dir;
    }
    if (o.workers) {
        if (*o.workers < 1) {
            throw schema_error("--workers must be >= 1");
        }
        c.workers = static_cast<std::size_t>(*o.workers);
    }
    if (o.no_timestamp) {
        c.timestamp = false;
    }
    return c;
}

template <class F> int guarded(F &&body) {
    try {
        body();
        return kOk;
    } catch (const schema_error &e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return kSchema;
    } catch (const capacity_error &e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return kCapacity;
    } catch (const std::invalid_argument &e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return kSchema;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"MLE-VQC statevector simulator and experiment driver"};
    app.set_version_flag("--version", std::string(mlevqc::kVersion));
    app.require_subcommand(1);

    Overrides o;
    auto *run = app.add_subcommand("run", "run an experiment and write CSV");
    run->add_option("experiment", o.kind,
                    "discriminate, generate, gradvar, opsize, helstrom-stats, dc-scan, tfim, arch-bench");
    run->add_option("-c,--config", o.config, "JSON config file");
    run->add_option("--arch,--archs", o.arch, "architecture, or comma list for arch-bench/opsize");
    run->add_option("--n", o.n, "qubit count(s): 6, 4,6,8 or 4..8");
    run->add_option("--depths,--depth", o.depths, "depth list: 1..8 or 1,2,4");
    run->add_option("--ensemble", o.ensemble, "haar, local:D0, ti-local:D0, tfim:g or tfim:g0,g1");
    run->add_option("--d0s", o.d0s, "source depths for dc-scan");
    run->add_option("--g,--fields", o.fields, "transverse fields for tfim");
    run->add_option("--pairs", o.pairs, "state pairs (tasks)");
    run->add_option("--restarts", o.restarts, "BFGS restarts per task");
    run->add_option("--samples", o.samples, "random circuits for opsize");
    run->add_option("--param-samples", o.param_samples, "parameter points per task for gradvar");
    run->add_option("--seed", o.seed, "master seed");
    run->add_option("--measurement", o.measurement, "mle or single-qubit");
    run->add_option("--cost", o.cost, "dis or gen");
    run->add_option("--max-iterations", o.max_iterations, "BFGS iteration cap");
    run->add_option("--max-depth", o.max_depth, "deepest depth scanned by dc-scan");
    run->add_option("-o,--output", o.output, "CSV path (default stdout)");
    run->add_option("--trace", o.trace, "per-iteration training trace CSV");
    run->add_option("--cache-dir", o.cache_dir, "ensemble state cache directory");
    run->add_option("--workers", o.workers, "worker threads (default MLEVQC_WORKERS or all cores)");
    run->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp comment line");
    run->add_flag("--resume", o.resume, "skip units recorded in the output manifest");

    std::string validate_path;
    auto *val = app.add_subcommand("validate", "check a config without running it");
    val->add_option("config", validate_path, "JSON config file")->required();

    std::string layout_arch;
    int layout_n = 0;
    int layout_depth = 0;
    auto *lay = app.add_subcommand("layout", "print a circuit layout as JSON");
    lay->add_option("--arch", layout_arch)->required();
    lay->add_option("--n", layout_n)->required();
    lay->add_option("--depth", layout_depth)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kSchema;
    }

    if (*run) {
        return guarded([&] {
            const auto cfg = assemble(o);
            const auto replayed = run_experiment(cfg, o.resume);
            if (o.resume) {
                std::cerr << "resumed " << replayed << " completed unit(s)\n";
            }
        });
    }
    if (*val) {
        return guarded([&] { validate(load_config(validate_path)); });
    }
    return guarded([&] {
        const auto layout = layout_for_depth(parse_architecture(layout_arch), layout_n, layout_depth);
        std::cout << to_json(layout).dump(2) << '\n';
    });
}
