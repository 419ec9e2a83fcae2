#pragma once

/**
 * @file
 * Input-state families: Haar states, brickwall random-circuit states H(D0),
 * translation-invariant random-circuit states S(D0) and transverse-field
 * Ising ground states.
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mlevqc/ansatz.hpp"
#include "mlevqc/errors.hpp"
#include "mlevqc/parallel.hpp"
#include "mlevqc/rng.hpp"
#include "mlevqc/statevec.hpp"

namespace mlevqc {

enum class EnsembleKind { Haar, LocalRandom, TILocalRandom, TFIMGround };

constexpr std::string_view name(EnsembleKind k) {
    switch (k) {
    case EnsembleKind::Haar: return "haar";
    case EnsembleKind::LocalRandom: return "local";
    case EnsembleKind::TILocalRandom: return "ti-local";
    case EnsembleKind::TFIMGround: return "tfim";
    }
    return "?";
}

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::Haar;
    int n_qubits = 2;
    int depth = 0;      ///< D0 for the circuit ensembles
    double field = 0.0; ///< g for TFIM ground states
    std::uint64_t seed = 0;

    void validate() const {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("ensemble qubit count out of range");
        }
        switch (kind) {
        case EnsembleKind::Haar: break;
        case EnsembleKind::LocalRandom:
        case EnsembleKind::TILocalRandom:
            if (depth < 1) {
                throw std::invalid_argument("circuit ensembles need D0 >= 1");
            }
            if (n_qubits < 2 || n_qubits % 2 != 0) {
                throw std::invalid_argument("circuit ensembles need an even qubit count >= 2");
            }
            break;
        case EnsembleKind::TFIMGround:
            require_finite(field, "transverse field");
            if (n_qubits < 2) {
                throw std::invalid_argument("TFIM needs n >= 2");
            }
            break;
        }
    }

    /// "haar", "local:D0", "ti-local:D0" or "tfim:g".
    [[nodiscard]] std::string label() const {
        switch (kind) {
        case EnsembleKind::Haar: return "haar";
        case EnsembleKind::LocalRandom:
        case EnsembleKind::TILocalRandom: return std::string(name(kind)) + ":" + std::to_string(depth);
        case EnsembleKind::TFIMGround: {
            std::ostringstream os;
            os << "tfim:" << field;
            return os.str();
        }
        }
        return "?";
    }
};

/// Parses the label format of EnsembleSpec::label (n and seed left default).
inline EnsembleSpec parse_ensemble(std::string_view text) {
    EnsembleSpec spec;
    const auto colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    const std::string arg = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
    auto need_arg = [&] {
        if (arg.empty()) {
            throw std::invalid_argument("ensemble '" + std::string(head) + "' needs an argument");
        }
    };
    auto parse_int = [&] {
        std::size_t used = 0;
        const int v = std::stoi(arg, &used);
        if (used != arg.size()) {
            throw std::invalid_argument("bad ensemble depth '" + arg + "'");
        }
        return v;
    };
    if (head == "haar" && arg.empty()) {
        spec.kind = EnsembleKind::Haar;
    } else if (head == "local") {
        need_arg();
        spec.kind = EnsembleKind::LocalRandom;
        spec.depth = parse_int();
    } else if (head == "ti-local") {
        need_arg();
        spec.kind = EnsembleKind::TILocalRandom;
        spec.depth = parse_int();
    } else if (head == "tfim") {
        need_arg();
        spec.kind = EnsembleKind::TFIMGround;
        std::size_t used = 0;
        spec.field = std::stod(arg, &used);
        if (used != arg.size()) {
            throw std::invalid_argument("bad transverse field '" + arg + "'");
        }
    } else {
        throw std::invalid_argument("unknown ensemble '" + std::string(text) +
                                    "'; expected one of: haar, local:D0, ti-local:D0, tfim:g");
    }
    return spec;
}

// ---------------------------------------------------------------------------
// TFIM
// ---------------------------------------------------------------------------

inline constexpr int kMaxTfimQubits = 12;

/// H = -sum_i Z_i Z_{i+1} + g sum_i X_i with periodic boundary (the wrap
/// term Z_{n-1} Z_0 is included, so at n = 2 the pair is counted twice).
inline Eigen::MatrixXd tfim_hamiltonian(int n, double g) {
    if (n > kMaxTfimQubits) {
        throw capacity_error("TFIM diagonalization is limited to " + std::to_string(kMaxTfimQubits) +
                             " qubits, got " + std::to_string(n));
    }
    if (n < 2) {
        throw std::invalid_argument("TFIM qubit count must be at least 2");
    }
    require_finite(g, "transverse field");
    const Eigen::Index dim = Eigen::Index{1} << n;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const auto bits = static_cast<std::uint64_t>(j);
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            const int k = (i + 1) % n;
            const bool zi = (bits & kernels::bit_of(n, i)) != 0;
            const bool zk = (bits & kernels::bit_of(n, k)) != 0;
            diag -= (zi == zk) ? 1.0 : -1.0;
            h(static_cast<Eigen::Index>(bits ^ kernels::bit_of(n, i)), j) += g;
        }
        h(j, j) = diag;
    }
    return h;
}

struct TfimSpectrumSlice {
    double e0 = 0.0;
    double e1 = 0.0;
    StateVector ground{1};
    bool degenerate = false; ///< ground space selected by the symmetric rule
};

inline constexpr double kTfimDegeneracyGap = 1e-10;

/**
 * Ground state of the periodic TFIM by dense diagonalization.
 *
 * When e1 - e0 < 1e-10 the ground space is degenerate at machine precision.
 * The returned state is then the projection of |0...0> onto the ground
 * space, symmetrized under the global spin flip prod_i X_i and normalized
 * (GHZ at g = 0). In every case the first amplitude with modulus above 1e-12
 * is made positive.
 */
inline TfimSpectrumSlice tfim_ground(int n, double g) {
    const Eigen::MatrixXd h = tfim_hamiltonian(n, g);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("TFIM diagonalization failed");
    }
    const auto &w = eig.eigenvalues();
    const auto &v = eig.eigenvectors();
    TfimSpectrumSlice out;
    out.e0 = w[0];
    out.e1 = w[1];
    Eigen::VectorXd ground = v.col(0);
    if (w[1] - w[0] < kTfimDegeneracyGap) {
        out.degenerate = true;
        Eigen::VectorXd proj = Eigen::VectorXd::Zero(h.rows());
        for (Eigen::Index k = 0; k < w.size() && w[k] - w[0] < kTfimDegeneracyGap; ++k) {
            proj += v(0, k) * v.col(k);
        }
        if (proj.norm() > 1e-8) {
            ground = proj;
        }
        Eigen::VectorXd sym = ground + ground.reverse(); // reverse() == global flip
        if (sym.norm() > 1e-8) {
            ground = sym;
        }
        ground.normalize();
    }
    for (Eigen::Index j = 0; j < ground.size(); ++j) {
        if (std::abs(ground[j]) > 1e-12) {
            if (ground[j] < 0) {
                ground = -ground;
            }
            break;
        }
    }
    out.ground = StateVector::normalized(ground.cast<cplx>());
    return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Seed of the `index`-th sample of an ensemble.
inline std::uint64_t sample_seed(const EnsembleSpec &spec, std::uint64_t index) {
    return derive_seed(spec.seed, index);
}

/// The `index`-th member of the ensemble. Pure in (spec, index).
inline StateVector sample_state(const EnsembleSpec &spec, std::uint64_t index = 0) {
    spec.validate();
    CounterRng rng(sample_seed(spec, index));
    switch (spec.kind) {
    case EnsembleKind::Haar: return haar_state(spec.n_qubits, rng);
    case EnsembleKind::LocalRandom:
    case EnsembleKind::TILocalRandom: {
        const auto arch = spec.kind == EnsembleKind::LocalRandom ? Architecture::BrickwallOpen
                                                                 : Architecture::BrickwallTI;
        const auto layout = build_layout(arch, spec.n_qubits, spec.depth);
        StateVector s(spec.n_qubits);
        compile_random(layout, rng).apply(s);
        return s;
    }
    case EnsembleKind::TFIMGround: return tfim_ground(spec.n_qubits, spec.field).ground;
    }
    throw std::logic_error("unhandled ensemble kind");
}

struct MeanEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t count = 0;
};

inline MeanEstimate estimate_mean(const std::vector<double> &xs) {
    MeanEstimate e;
    e.count = xs.size();
    if (xs.empty()) {
        return e;
    }
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    e.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - e.mean) * (x - e.mean);
        }
        e.std_err = std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                              static_cast<double>(xs.size()));
    }
    return e;
}

/// Pair p uses samples 2p and 2p+1.
inline std::vector<double> pair_overlaps(const EnsembleSpec &spec, std::size_t pairs,
                                         std::size_t workers = default_workers()) {
    if (pairs < 1) {
        throw std::invalid_argument("pairs must be >= 1");
    }
    std::vector<double> out(pairs);
    parallel_for(
        pairs,
        [&](std::size_t p) {
            out[p] = overlap_sq(sample_state(spec, 2 * p), sample_state(spec, 2 * p + 1));
        },
        workers);
    return out;
}

inline MeanEstimate mean_overlap(const EnsembleSpec &spec, std::size_t pairs,
                                 std::size_t workers = default_workers()) {
    return estimate_mean(pair_overlaps(spec, pairs, workers));
}

} // namespace mlevqc
