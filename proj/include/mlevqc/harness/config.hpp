#pragma once

// Experiment configuration: JSON file plus command-line overrides, validated
// once before any compute. The schema is published in docs/config.schema.json.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlevqc/ansatz.hpp"
#include "mlevqc/discriminate.hpp"
#include "mlevqc/ensembles.hpp"
#include "mlevqc/errors.hpp"
#include "mlevqc/optimize.hpp"
#include "mlevqc/scramble.hpp"

namespace mlevqc::harness {

/// Malformed or inconsistent configuration. Exit code 2.
class schema_error : public std::runtime_error {
  public:
    schema_error(const std::string &msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_{line} {}
    [[nodiscard]] int line() const noexcept { return line_; }

  private:
    int line_;
};

enum class ExperimentKind { Discriminate, Generate, GradVar, OpSize, HelstromStats, DcScan, Tfim, ArchBench };

inline constexpr std::array kAllExperiments = {
    ExperimentKind::Discriminate, ExperimentKind::Generate, ExperimentKind::GradVar,
    ExperimentKind::OpSize,       ExperimentKind::HelstromStats, ExperimentKind::DcScan,
    ExperimentKind::Tfim,         ExperimentKind::ArchBench,
};

constexpr std::string_view name(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::Discriminate: return "discriminate";
    case ExperimentKind::Generate: return "generate";
    case ExperimentKind::GradVar: return "gradvar";
    case ExperimentKind::OpSize: return "opsize";
    case ExperimentKind::HelstromStats: return "helstrom-stats";
    case ExperimentKind::DcScan: return "dc-scan";
    case ExperimentKind::Tfim: return "tfim";
    case ExperimentKind::ArchBench: return "arch-bench";
    }
    return "?";
}

inline ExperimentKind parse_experiment(std::string_view s) {
    for (auto k : kAllExperiments) {
        if (name(k) == s) {
            return k;
        }
    }
    std::string opts;
    for (auto k : kAllExperiments) {
        opts += opts.empty() ? "" : ", ";
        opts += name(k);
    }
    throw std::invalid_argument("unknown experiment '" + std::string(s) + "'; expected one of: " + opts);
}

enum class CostKind { Dis, Gen };

/// Input states of an experiment: an ensemble, or for "tfim:g0,g1" the
/// fixed pair of TFIM ground states.
struct TaskSource {
    EnsembleSpec spec;
    std::optional<std::pair<double, double>> tfim_pair;

    [[nodiscard]] std::string label() const {
        if (tfim_pair) {
            std::ostringstream os;
            os << "tfim:" << tfim_pair->first << ',' << tfim_pair->second;
            return os.str();
        }
        return spec.label();
    }
};

inline TaskSource parse_task_source(std::string_view text) {
    TaskSource src;
    if (text.starts_with("tfim:") && text.find(',') != std::string_view::npos) {
        const std::string body(text.substr(5));
        const auto comma = body.find(',');
        try {
            std::size_t u0 = 0;
            std::size_t u1 = 0;
            const std::string a = body.substr(0, comma);
            const std::string b = body.substr(comma + 1);
            const double g0 = std::stod(a, &u0);
            const double g1 = std::stod(b, &u1);
            if (u0 != a.size() || u1 != b.size()) {
                throw std::invalid_argument("");
            }
            src.tfim_pair = std::make_pair(g0, g1);
        } catch (const std::exception &) {
            throw std::invalid_argument("bad TFIM pair '" + std::string(text) + "'; expected tfim:g0,g1");
        }
        src.spec.kind = EnsembleKind::TFIMGround;
        src.spec.field = src.tfim_pair->first;
        return src;
    }
    src.spec = parse_ensemble(text);
    return src;
}

/// Inclusive range "a..b" or a comma list "1,2,5".
inline std::vector<int> parse_int_list(std::string_view text) {
    std::vector<int> out;
    auto to_int = [&](std::string_view s) {
        const std::string str(s);
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(str, &used);
        } catch (const std::exception &) {
            used = std::string::npos;
        }
        if (used != str.size()) {
            throw std::invalid_argument("bad integer '" + str + "' in list '" + std::string(text) + "'");
        }
        return v;
    };
    if (const auto dots = text.find(".."); dots != std::string_view::npos) {
        const int a = to_int(text.substr(0, dots));
        const int b = to_int(text.substr(dots + 2));
        if (b < a) {
            throw std::invalid_argument("empty range '" + std::string(text) + "'");
        }
        for (int v = a; v <= b; ++v) {
            out.push_back(v);
        }
        return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        out.push_back(to_int(text.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

inline std::vector<double> parse_double_list(std::string_view text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string item(text.substr(start, comma - start));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception &) {
            used = std::string::npos;
        }
        if (used != item.size()) {
            throw std::invalid_argument("bad number '" + item + "' in list '" + std::string(text) + "'");
        }
        out.push_back(v);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

/// Statevector training budget (dense 2^n amplitudes, FD gradients).
inline constexpr int kMaxTrainingQubits = 12;

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Discriminate;
    std::vector<Architecture> archs{Architecture::BrickwallOpen};
    std::vector<int> ns{6};
    std::vector<int> depths{1};
    std::string ensemble = "haar";
    std::vector<int> d0s;
    std::vector<double> fields{1.0, 10.0};
    int pairs = 20;
    int samples = 200;
    int param_samples = 10;
    MeasurementMode measurement = MeasurementMode::FullMLE;
    CostKind cost = CostKind::Dis;
    std::uint64_t seed = 0;
    int max_depth = 12;
    OptimizerConfig optimizer;
    std::string output;    ///< empty: stdout
    std::string trace;     ///< optional training trace CSV
    std::string cache_dir; ///< optional ensemble cache directory
    std::size_t workers = 0; ///< 0: MLEVQC_WORKERS or hardware concurrency
    bool timestamp = true;

    [[nodiscard]] TaskSource source() const { return parse_task_source(ensemble); }

    /// Canonical JSON of everything that affects results (not output paths,
    /// worker count or timestamp).
    [[nodiscard]] nlohmann::json canonical() const {
        nlohmann::json archs_j = nlohmann::json::array();
        for (auto a : archs) {
            archs_j.push_back(name(a));
        }
        return {{"experiment", name(kind)},
                {"arch", archs_j},
                {"n", ns},
                {"depths", depths},
                {"ensemble", ensemble},
                {"d0s", d0s},
                {"fields", fields},
                {"pairs", pairs},
                {"samples", samples},
                {"param_samples", param_samples},
                {"measurement", measurement == MeasurementMode::FullMLE ? "mle" : "single-qubit"},
                {"cost", cost == CostKind::Dis ? "dis" : "gen"},
                {"seed", seed},
                {"max_depth", max_depth},
                {"optimizer",
                 {{"fd_step", optimizer.fd_step},
                  {"max_iterations", optimizer.max_iterations},
                  {"gradient_tolerance", optimizer.gradient_tolerance},
                  {"cost_tolerance", optimizer.cost_tolerance},
                  {"restarts", optimizer.restarts},
                  {"c1", optimizer.c1},
                  {"c2", optimizer.c2}}}};
    }
};

// ---------------------------------------------------------------------------
// JSON loading
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 20> kConfigKeys = {
    "experiment", "arch",    "n",         "depths",      "ensemble", "d0s",  "fields",
    "pairs",      "samples", "param_samples", "measurement", "cost",  "seed", "max_depth",
    "optimizer",  "output",  "trace",     "cache_dir",   "workers",  "timestamp"};

inline constexpr std::array<std::string_view, 7> kOptimizerKeys = {
    "fd_step", "max_iterations", "gradient_tolerance", "cost_tolerance", "restarts", "c1", "c2"};

namespace detail {

inline int line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

/// Line of the first `"key"` used as an object key at or after `from`.
inline int line_of_key(std::string_view text, std::string_view key, std::size_t from = 0) {
    const std::string quoted = "\"" + std::string(key) + "\"";
    for (auto pos = text.find(quoted, from); pos != std::string_view::npos;
         pos = text.find(quoted, pos + 1)) {
        auto after = pos + quoted.size();
        while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) {
            ++after;
        }
        if (after < text.size() && text[after] == ':') {
            return line_of_offset(text, pos);
        }
    }
    return 0;
}

class Reader {
  public:
    Reader(const nlohmann::json &obj, std::string_view text, std::string prefix, std::size_t from)
        : obj_{obj}, text_{text}, prefix_{std::move(prefix)}, from_{from} {}

    [[nodiscard]] int line(std::string_view key) const { return line_of_key(text_, key, from_); }

    [[noreturn]] void fail(std::string_view key, const std::string &msg) const {
        throw schema_error("'" + prefix_ + std::string(key) + "': " + msg, line(key));
    }

    void reject_unknown(std::span<const std::string_view> allowed) const {
        for (const auto &[k, v] : obj_.items()) {
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
                std::string opts;
                for (auto a : allowed) {
                    opts += opts.empty() ? "" : ", ";
                    opts += a;
                }
                fail(k, "unknown key (allowed: " + opts + ")");
            }
        }
    }

    [[nodiscard]] bool has(std::string_view key) const { return obj_.contains(std::string(key)); }
    [[nodiscard]] const nlohmann::json &at(std::string_view key) const { return obj_.at(std::string(key)); }

    template <class F> void with(std::string_view key, F &&f) const {
        if (!has(key)) {
            return;
        }
        try {
            f(at(key));
        } catch (const schema_error &) {
            throw;
        } catch (const capacity_error &) {
            throw;
        } catch (const std::exception &e) {
            fail(key, e.what());
        }
    }

  private:
    const nlohmann::json &obj_;
    std::string_view text_;
    std::string prefix_;
    std::size_t from_;
};

inline int as_int(const nlohmann::json &v) {
    if (!v.is_number_integer()) {
        throw std::invalid_argument("expected an integer");
    }
    return v.get<int>();
}

inline double as_number(const nlohmann::json &v) {
    if (!v.is_number()) {
        throw std::invalid_argument("expected a number");
    }
    return v.get<double>();
}

inline std::string as_string(const nlohmann::json &v) {
    if (!v.is_string()) {
        throw std::invalid_argument("expected a string");
    }
    return v.get<std::string>();
}

inline std::vector<int> as_int_list(const nlohmann::json &v) {
    if (v.is_string()) {
        return parse_int_list(v.get<std::string>());
    }
    if (v.is_number_integer()) {
        return {v.get<int>()};
    }
    if (!v.is_array()) {
        throw std::invalid_argument("expected an integer list or a range string \"a..b\"");
    }
    std::vector<int> out;
    for (const auto &x : v) {
        out.push_back(as_int(x));
    }
    return out;
}

inline std::vector<double> as_number_list(const nlohmann::json &v) {
    if (v.is_number()) {
        return {v.get<double>()};
    }
    if (!v.is_array()) {
        throw std::invalid_argument("expected a number list");
    }
    std::vector<double> out;
    for (const auto &x : v) {
        out.push_back(as_number(x));
    }
    return out;
}

inline std::vector<Architecture> as_arch_list(const nlohmann::json &v) {
    std::vector<Architecture> out;
    if (v.is_string()) {
        out.push_back(parse_architecture(v.get<std::string>()));
    } else if (v.is_array()) {
        for (const auto &x : v) {
            out.push_back(parse_architecture(as_string(x)));
        }
    } else {
        throw std::invalid_argument("expected an architecture name or a list of names");
    }
    return out;
}

inline MeasurementMode parse_measurement(std::string_view s) {
    if (s == "mle") {
        return MeasurementMode::FullMLE;
    }
    if (s == "single-qubit") {
        return MeasurementMode::SingleQubit;
    }
    throw std::invalid_argument("unknown measurement '" + std::string(s) + "'; expected one of: mle, single-qubit");
}

inline CostKind parse_cost(std::string_view s) {
    if (s == "dis") {
        return CostKind::Dis;
    }
    if (s == "gen") {
        return CostKind::Gen;
    }
    throw std::invalid_argument("unknown cost '" + std::string(s) + "'; expected one of: dis, gen");
}

} // namespace detail

/// Parses a config document. `text` is the raw file content, used for
/// line numbers in error messages.
inline ExperimentConfig config_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error &e) {
        throw schema_error(std::string("invalid JSON: ") + e.what(),
                           detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
    }
    if (!j.is_object()) {
        throw schema_error("config must be a JSON object", 1);
    }
    ExperimentConfig c;
    detail::Reader r(j, text, "", 0);
    r.reject_unknown(kConfigKeys);
    if (!r.has("experiment")) {
        throw schema_error("missing required key 'experiment'", 1);
    }
    using namespace detail;
    r.with("experiment", [&](const auto &v) { c.kind = parse_experiment(as_string(v)); });
    r.with("arch", [&](const auto &v) { c.archs = as_arch_list(v); });
    r.with("n", [&](const auto &v) { c.ns = as_int_list(v); });
    r.with("depths", [&](const auto &v) { c.depths = as_int_list(v); });
    r.with("ensemble", [&](const auto &v) {
        c.ensemble = as_string(v);
        (void)parse_task_source(c.ensemble);
    });
    r.with("d0s", [&](const auto &v) { c.d0s = as_int_list(v); });
    r.with("fields", [&](const auto &v) { c.fields = as_number_list(v); });
    r.with("pairs", [&](const auto &v) { c.pairs = as_int(v); });
    r.with("samples", [&](const auto &v) { c.samples = as_int(v); });
    r.with("param_samples", [&](const auto &v) { c.param_samples = as_int(v); });
    r.with("measurement", [&](const auto &v) { c.measurement = parse_measurement(as_string(v)); });
    r.with("cost", [&](const auto &v) { c.cost = parse_cost(as_string(v)); });
    r.with("seed", [&](const auto &v) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.template get<long long>() >= 0)) {
            throw std::invalid_argument("expected a non-negative integer");
        }
        c.seed = v.template get<std::uint64_t>();
    });
    r.with("max_depth", [&](const auto &v) { c.max_depth = as_int(v); });
    r.with("output", [&](const auto &v) { c.output = as_string(v); });
    r.with("trace", [&](const auto &v) { c.trace = as_string(v); });
    r.with("cache_dir", [&](const auto &v) { c.cache_dir = as_string(v); });
    r.with("workers", [&](const auto &v) {
        const int w = as_int(v);
        if (w < 1) {
            throw std::invalid_argument("workers must be >= 1");
        }
        c.workers = static_cast<std::size_t>(w);
    });
    r.with("timestamp", [&](const auto &v) {
        if (!v.is_boolean()) {
            throw std::invalid_argument("expected true or false");
        }
        c.timestamp = v.template get<bool>();
    });
    r.with("optimizer", [&](const auto &v) {
        if (!v.is_object()) {
            throw std::invalid_argument("expected an object");
        }
        const auto start = static_cast<std::size_t>(std::max<long>(0, static_cast<long>(text.find("\"optimizer\""))));
        Reader o(v, text, "optimizer.", start);
        o.reject_unknown(kOptimizerKeys);
        auto &opt = c.optimizer;
        o.with("fd_step", [&](const auto &x) { opt.fd_step = as_number(x); });
        o.with("max_iterations", [&](const auto &x) { opt.max_iterations = as_int(x); });
        o.with("gradient_tolerance", [&](const auto &x) { opt.gradient_tolerance = as_number(x); });
        o.with("cost_tolerance", [&](const auto &x) { opt.cost_tolerance = as_number(x); });
        o.with("restarts", [&](const auto &x) { opt.restarts = as_int(x); });
        o.with("c1", [&](const auto &x) { opt.c1 = as_number(x); });
        o.with("c2", [&](const auto &x) { opt.c2 = as_number(x); });
        try {
            opt.validate();
        } catch (const std::invalid_argument &e) {
            throw schema_error(std::string("'optimizer': ") + e.what(), r.line("optimizer"));
        }
    });
    return c;
}

inline ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw schema_error("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/**
 * Static validation. Structural problems raise schema_error; requests
 * beyond a module budget (qubit counts, non-extensive depth caps) raise
 * capacity_error.
 */
inline void validate(const ExperimentConfig &c) {
    auto bad = [](const std::string &msg) { throw schema_error(msg); };
    if (c.ns.empty()) {
        bad("'n' must not be empty");
    }
    if (c.archs.empty()) {
        bad("'arch' must not be empty");
    }
    try {
        c.optimizer.validate();
    } catch (const std::invalid_argument &e) {
        bad(std::string("'optimizer': ") + e.what());
    }
    TaskSource src;
    try {
        src = c.source();
    } catch (const std::invalid_argument &e) {
        bad(std::string("'ensemble': ") + e.what());
    }
    const bool trains = c.kind == ExperimentKind::Discriminate || c.kind == ExperimentKind::Generate ||
                        c.kind == ExperimentKind::DcScan || c.kind == ExperimentKind::ArchBench;
    const bool circuits = trains || c.kind == ExperimentKind::GradVar || c.kind == ExperimentKind::OpSize;
    for (int n : c.ns) {
        if (n < 1) {
            bad("'n' entries must be >= 1");
        }
        if (n > kMaxTrainingQubits) {
            throw capacity_error("n = " + std::to_string(n) + " exceeds the statevector budget of " +
                                 std::to_string(kMaxTrainingQubits) + " qubits");
        }
        if (c.kind == ExperimentKind::OpSize && n > kMaxOperatorQubits) {
            throw capacity_error("operator-size runs are limited to " +
                                 std::to_string(kMaxOperatorQubits) + " qubits, got " + std::to_string(n));
        }
        if (circuits && (n < 2 || n % 2 != 0)) {
            bad("circuit experiments need even n >= 2, got " + std::to_string(n));
        }
        if (c.kind == ExperimentKind::Tfim && n < 2) {
            bad("TFIM needs n >= 2");
        }
    }
    if (circuits && c.kind != ExperimentKind::DcScan) {
        if (c.depths.empty()) {
            bad("'depths' must not be empty");
        }
        for (int d : c.depths) {
            if (d < 0) {
                bad("'depths' entries must be >= 0");
            }
        }
    }
    if ((trains || c.kind == ExperimentKind::GradVar || c.kind == ExperimentKind::HelstromStats) &&
        c.pairs < 1) {
        bad("'pairs' must be >= 1");
    }
    if (c.kind == ExperimentKind::OpSize && c.samples < 1) {
        bad("'samples' must be >= 1");
    }
    if (c.kind == ExperimentKind::GradVar) {
        if (c.param_samples < 1 || static_cast<long>(c.pairs) * c.param_samples < 2) {
            bad("gradvar needs pairs * param_samples >= 2");
        }
    }
    if (c.measurement == MeasurementMode::SingleQubit && c.cost == CostKind::Gen) {
        bad("single-qubit measurement applies to the discrimination cost only");
    }
    if (src.tfim_pair && c.kind != ExperimentKind::Discriminate && c.kind != ExperimentKind::ArchBench &&
        c.kind != ExperimentKind::Generate) {
        bad("'ensemble' tfim:g0,g1 is only valid for discriminate, generate and arch-bench");
    }
    for (int n : c.ns) {
        EnsembleSpec spec = src.spec;
        spec.n_qubits = n;
        if (c.kind != ExperimentKind::DcScan && c.kind != ExperimentKind::Tfim &&
            c.kind != ExperimentKind::OpSize) {
            try {
                spec.validate();
            } catch (const std::invalid_argument &e) {
                bad(std::string("'ensemble': ") + e.what());
            }
        }
        if (!circuits) {
            continue;
        }
        for (auto arch : c.archs) {
            const auto &ds = c.kind == ExperimentKind::DcScan ? std::vector<int>{c.max_depth} : c.depths;
            for (int d : ds) {
                try {
                    if (c.kind == ExperimentKind::ArchBench && !is_extensive(arch) &&
                        d > *max_depth(arch, n)) {
                        continue; // skipped per architecture in arch-bench
                    }
                    validate_layout_request(arch, n, d);
                } catch (const capacity_error &) {
                    throw;
                } catch (const std::invalid_argument &e) {
                    bad(e.what());
                }
            }
        }
    }
    if (c.kind == ExperimentKind::DcScan) {
        if (c.d0s.empty()) {
            bad("dc-scan needs 'd0s'");
        }
        for (int d0 : c.d0s) {
            if (d0 < 1) {
                bad("'d0s' entries must be >= 1");
            }
        }
        if (src.spec.kind != EnsembleKind::LocalRandom && src.spec.kind != EnsembleKind::TILocalRandom) {
            bad("dc-scan needs a local:D0 or ti-local:D0 ensemble (D0 is taken from 'd0s')");
        }
        if (c.max_depth < 0) {
            bad("'max_depth' must be >= 0");
        }
        for (auto arch : c.archs) {
            if (!is_extensive(arch)) {
                bad("dc-scan needs an extensive architecture, got " + std::string(name(arch)));
            }
        }
    }
    if (c.kind == ExperimentKind::Tfim) {
        if (c.fields.empty()) {
            bad("tfim needs 'fields'");
        }
        for (double g : c.fields) {
            if (!std::isfinite(g)) {
                bad("'fields' entries must be finite");
            }
        }
    }
}

} // namespace mlevqc::harness
