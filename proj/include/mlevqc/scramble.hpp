#pragma once

/**
 * @file
 * Heisenberg evolution of a local Pauli operator through a circuit, Pauli
 * decomposition and operator size.
 *
 * Pauli strings are indexed base 4 with qubit 0 as the most significant
 * digit and digits I = 0, X = 1, Y = 2, Z = 3.
 */

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mlevqc/ansatz.hpp"
#include "mlevqc/ensembles.hpp"
#include "mlevqc/errors.hpp"
#include "mlevqc/parallel.hpp"
#include "mlevqc/rng.hpp"
#include "mlevqc/statevec.hpp"

namespace mlevqc {

inline constexpr int kMaxOperatorQubits = 8;

using Operator = Eigen::MatrixXcd;

inline void check_operator_budget(int n) {
    if (n < 1) {
        throw std::invalid_argument("operator needs at least one qubit");
    }
    if (n > kMaxOperatorQubits) {
        throw capacity_error("dense operator evolution is limited to " +
                             std::to_string(kMaxOperatorQubits) + " qubits, got " +
                             std::to_string(n));
    }
}

/// Z acting on qubit q of n.
inline Operator pauli_z(int n, int q) {
    check_operator_budget(n);
    kernels::check_qubit(n, q);
    const Eigen::Index dim = Eigen::Index{1} << n;
    Operator m = Operator::Zero(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        m(j, j) = (static_cast<std::size_t>(j) & kernels::bit_of(n, q)) ? -1.0 : 1.0;
    }
    return m;
}

namespace detail {

inline CompiledGate adjoint(const CompiledGate &g) {
    CompiledGate a = g;
    a.m4 = g.m4.adjoint();
    a.m2 = g.m2.adjoint();
    return a;
}

inline void left_multiply(Operator &m, int n, const CompiledGate &g) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        apply_gate(m.col(c).data(), n, g);
    }
}

} // namespace detail

/// M_D = U^dagger M0 U, one gate at a time: M <- g^dagger M g from the last
/// gate to the first. M0 must be Hermitian (the right multiplication uses
/// M g = (g^dagger M)^dagger).
inline Operator evolve_operator(const CompiledCircuit &circuit, Operator m) {
    const int n = circuit.n_qubits();
    check_operator_budget(n);
    const Eigen::Index dim = Eigen::Index{1} << n;
    if (m.rows() != dim || m.cols() != dim) {
        throw std::invalid_argument("operator dimension does not match the circuit");
    }
    const auto &gates = circuit.gates();
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
        const auto gd = detail::adjoint(*it);
        detail::left_multiply(m, n, gd); // g^dagger M
        m.adjointInPlace();              // M g (M Hermitian)
        detail::left_multiply(m, n, gd); // g^dagger M g
    }
    return m;
}

/// Evolves Z on qubit floor(n/2) through the layout at `params`.
inline Operator evolve_operator(const CircuitLayout &layout, std::span<const double> params) {
    check_operator_budget(layout.n_qubits());
    return evolve_operator(compile(layout, params),
                           pauli_z(layout.n_qubits(), layout.n_qubits() / 2));
}

struct PauliDecomposition {
    int n_qubits = 0;
    std::vector<cplx> coeffs; ///< 4^n entries, base-4 index

    [[nodiscard]] cplx operator[](std::size_t index) const { return coeffs.at(index); }
    [[nodiscard]] cplx coefficient(std::string_view label) const;
    [[nodiscard]] double norm_sq() const {
        double s = 0.0;
        for (const auto &a : coeffs) {
            s += std::norm(a);
        }
        return s;
    }
};

/// Base-4 index of a label such as "XIZ" (qubit 0 first).
inline std::size_t pauli_index(std::string_view label) {
    std::size_t idx = 0;
    for (char c : label) {
        int d = 0;
        switch (c) {
        case 'I': d = 0; break;
        case 'X': d = 1; break;
        case 'Y': d = 2; break;
        case 'Z': d = 3; break;
        default: throw std::invalid_argument("bad Pauli label '" + std::string(label) + "'");
        }
        idx = idx * 4 + static_cast<std::size_t>(d);
    }
    return idx;
}

inline std::string pauli_label(std::size_t index, int n) {
    std::string s(static_cast<std::size_t>(n), 'I');
    for (int q = n - 1; q >= 0; --q) {
        s[static_cast<std::size_t>(q)] = "IXYZ"[index % 4];
        index /= 4;
    }
    return s;
}

/// Number of non-identity factors of a string.
inline int pauli_weight(std::size_t index) {
    int w = 0;
    for (; index != 0; index /= 4) {
        w += (index % 4) != 0 ? 1 : 0;
    }
    return w;
}

inline cplx PauliDecomposition::coefficient(std::string_view label) const {
    if (label.size() != static_cast<std::size_t>(n_qubits)) {
        throw std::invalid_argument("label length does not match the qubit count");
    }
    return coeffs.at(pauli_index(label));
}

/**
 * alpha_S = Tr(S M) / 2^n for every string S.
 *
 * A string with X-mask x (X or Y factors) and Z-mask z (Y or Z factors)
 * maps |k> to i^{#Y} (-1)^{|k & z|} |k ^ x>, so
 * Tr(S M) = i^{#Y} sum_k (-1)^{|k & z|} M[k, k ^ x]. For each x the sum over
 * all z is one Walsh-Hadamard transform, giving O(n 4^n) work overall.
 */
inline PauliDecomposition pauli_decompose(const Operator &m, int n) {
    check_operator_budget(n);
    const std::size_t dim = std::size_t{1} << n;
    if (static_cast<std::size_t>(m.rows()) != dim || static_cast<std::size_t>(m.cols()) != dim) {
        throw std::invalid_argument("operator is not 2^n x 2^n");
    }
    PauliDecomposition out;
    out.n_qubits = n;
    out.coeffs.assign(dim * dim, cplx{});
    std::vector<cplx> v(dim);
    const double scale = 1.0 / static_cast<double>(dim);
    for (std::size_t x = 0; x < dim; ++x) {
        for (std::size_t k = 0; k < dim; ++k) {
            v[k] = m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k ^ x));
        }
        for (std::size_t h = 1; h < dim; h <<= 1) {
            for (std::size_t i = 0; i < dim; i += 2 * h) {
                for (std::size_t j = i; j < i + h; ++j) {
                    const cplx a = v[j];
                    const cplx b = v[j + h];
                    v[j] = a + b;
                    v[j + h] = a - b;
                }
            }
        }
        for (std::size_t z = 0; z < dim; ++z) {
            std::size_t idx = 0;
            int n_y = 0;
            for (int q = 0; q < n; ++q) {
                const std::size_t bit = kernels::bit_of(n, q);
                const bool xb = (x & bit) != 0;
                const bool zb = (z & bit) != 0;
                const int d = xb ? (zb ? 2 : 1) : (zb ? 3 : 0);
                n_y += d == 2 ? 1 : 0;
                idx = idx * 4 + static_cast<std::size_t>(d);
            }
            static constexpr cplx kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
            out.coeffs[idx] = kIPow[n_y % 4] * v[z] * scale;
        }
    }
    return out;
}

/// sum_S alpha_S S, for checking decompositions.
inline Operator pauli_reconstruct(const PauliDecomposition &dec) {
    const int n = dec.n_qubits;
    const std::size_t dim = std::size_t{1} << n;
    Operator m = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t idx = 0; idx < dec.coeffs.size(); ++idx) {
        const cplx a = dec.coeffs[idx];
        if (a == cplx{}) {
            continue;
        }
        std::size_t x = 0;
        std::size_t z = 0;
        int n_y = 0;
        std::size_t rest = idx;
        for (int q = n - 1; q >= 0; --q) {
            const auto d = rest % 4;
            rest /= 4;
            const std::size_t bit = kernels::bit_of(n, q);
            if (d == 1 || d == 2) {
                x |= bit;
            }
            if (d == 2 || d == 3) {
                z |= bit;
            }
            n_y += d == 2 ? 1 : 0;
        }
        static constexpr cplx kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        for (std::size_t k = 0; k < dim; ++k) {
            const double sign = (std::popcount(k & z) % 2) ? -1.0 : 1.0;
            m(static_cast<Eigen::Index>(k ^ x), static_cast<Eigen::Index>(k)) +=
                a * kIPow[n_y % 4] * sign;
        }
    }
    return m;
}

inline constexpr double kSizeNormTol = 1e-6;

/// Size(M) = sum_S |alpha_S|^2 L(S), L the number of non-identity factors.
inline double operator_size(const PauliDecomposition &dec) {
    const double norm = dec.norm_sq();
    if (std::abs(norm - 1.0) > kSizeNormTol) {
        throw std::invalid_argument("operator is not Hilbert-Schmidt normalized (sum |alpha|^2 = " +
                                    std::to_string(norm) + ")");
    }
    double size = 0.0;
    for (std::size_t idx = 0; idx < dec.coeffs.size(); ++idx) {
        size += std::norm(dec.coeffs[idx]) * pauli_weight(idx);
    }
    return size;
}

struct SizeSample {
    double size = 0.0;
    double norm_error = 0.0;     ///< |sum |alpha|^2 - 1|
    double identity_coeff = 0.0; ///< |alpha_{I...I}|
};

/// Operator size of Z_{floor(n/2)} after one random circuit.
inline SizeSample sample_operator_size(const CircuitLayout &layout, std::uint64_t seed) {
    check_operator_budget(layout.n_qubits());
    CounterRng rng(seed);
    const auto circuit = compile_random(layout, rng);
    const auto m = evolve_operator(circuit, pauli_z(layout.n_qubits(), layout.n_qubits() / 2));
    const auto dec = pauli_decompose(m, layout.n_qubits());
    SizeSample s;
    s.norm_error = std::abs(dec.norm_sq() - 1.0);
    s.identity_coeff = std::abs(dec.coeffs[0]);
    s.size = operator_size(dec);
    return s;
}

struct SizeEstimate {
    MeanEstimate size;
    double max_norm_error = 0.0;
    double max_identity_coeff = 0.0;
};

/**
 * Ensemble-mean operator size over random circuits on the layout of
 * (arch, n, D) with Haar two-qubit gates. Sample s uses seed
 * derive_seed(seed, s). D = 0 gives exactly 1.
 */
inline SizeEstimate avg_operator_size(Architecture arch, int n, int depth, std::size_t samples,
                                      std::uint64_t seed, std::size_t workers = default_workers()) {
    check_operator_budget(n);
    if (samples < 1) {
        throw std::invalid_argument("samples must be >= 1");
    }
    const auto layout = layout_for_depth(arch, n, depth);
    std::vector<SizeSample> out(samples);
    parallel_for(
        samples, [&](std::size_t s) { out[s] = sample_operator_size(layout, derive_seed(seed, s)); },
        workers);
    SizeEstimate est;
    std::vector<double> sizes;
    for (const auto &s : out) {
        sizes.push_back(s.size);
        est.max_norm_error = std::max(est.max_norm_error, s.norm_error);
        est.max_identity_coeff = std::max(est.max_identity_coeff, s.identity_coeff);
    }
    est.size = estimate_mean(sizes);
    return est;
}

/// Saturation value of the size for Haar-random operators on n qubits:
/// 3n/4 * 4^n / (4^n - 1).
inline double haar_operator_size(int n) {
    const double d2 = std::pow(4.0, n);
    return 0.75 * n * d2 / (d2 - 1.0);
}

/// CSV rows: arch,n,D,sample_count,mean_size,std_err.
inline void write_size_csv_header(std::ostream &os) {
    os << "arch,n,D,sample_count,mean_size,std_err\n";
}

inline void write_size_csv_row(std::ostream &os, Architecture arch, int n, int depth,
                               const SizeEstimate &e) {
    const auto old = os.precision(17);
    os << name(arch) << ',' << n << ',' << depth << ',' << e.size.count << ',' << e.size.mean << ','
       << e.size.std_err << '\n';
    os.precision(old);
}

} // namespace mlevqc
