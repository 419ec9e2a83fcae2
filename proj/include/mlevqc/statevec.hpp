#pragma once

/**
 * @file
 * Pure n-qubit states, gate kernels, Haar sampling and entanglement entropy.
 *
 * Basis convention: amplitude index j is read as a bit string with qubit 0
 * as the most significant bit, so qubit q owns bit (n - 1 - q).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlevqc/rng.hpp"

namespace mlevqc {

using cplx = std::complex<double>;
using Gate2 = Eigen::Matrix2cd;
using Gate4 = Eigen::Matrix4cd;

inline constexpr double kKernelTol = 1e-12;
inline constexpr double kCircuitTol = 1e-10;
inline constexpr int kMaxQubits = 24;

inline void require_finite(double v, const char *what) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) + " must be finite");
    }
}

template <class Derived>
bool is_unitary(const Eigen::MatrixBase<Derived> &m, double tol = kKernelTol) {
    if (m.rows() != m.cols()) {
        return false;
    }
    const auto id = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    return ((m.adjoint() * m).eval() - id).cwiseAbs().maxCoeff() <= tol;
}

class StateVector {
  public:
    /// |0...0> on n qubits.
    explicit StateVector(int n_qubits) : n_{check_qubits(n_qubits)}, amps_(dim_of(n_)) {
        amps_.setZero();
        amps_[0] = 1.0;
    }

    static StateVector basis(int n_qubits, std::uint64_t index) {
        StateVector s(n_qubits);
        if (index >= s.dim()) {
            throw std::invalid_argument("basis index out of range");
        }
        s.amps_[0] = 0.0;
        s.amps_[static_cast<Eigen::Index>(index)] = 1.0;
        return s;
    }

    /// Takes ownership of `amps`; the length must be a power of two and the
    /// norm must be 1 within `tol`.
    static StateVector from_amplitudes(Eigen::VectorXcd amps, double tol = kCircuitTol) {
        const int n = qubits_for_length(amps.size());
        const double norm = amps.norm();
        if (!std::isfinite(norm) || std::abs(norm - 1.0) > tol) {
            throw std::invalid_argument("state is not normalized (norm " + std::to_string(norm) +
                                        ")");
        }
        return StateVector(n, std::move(amps));
    }

    /// Normalizes `amps` before wrapping it.
    static StateVector normalized(Eigen::VectorXcd amps) {
        const int n = qubits_for_length(amps.size());
        const double norm = amps.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw std::invalid_argument("cannot normalize a zero or non-finite vector");
        }
        amps /= norm;
        return StateVector(n, std::move(amps));
    }

    [[nodiscard]] int n_qubits() const noexcept { return n_; }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
    [[nodiscard]] const Eigen::VectorXcd &amplitudes() const noexcept { return amps_; }
    [[nodiscard]] cplx operator[](std::size_t j) const { return amps_[static_cast<Eigen::Index>(j)]; }
    [[nodiscard]] cplx *data() noexcept { return amps_.data(); }
    [[nodiscard]] const cplx *data() const noexcept { return amps_.data(); }
    [[nodiscard]] double norm() const { return amps_.norm(); }

    friend bool operator==(const StateVector &a, const StateVector &b) {
        return a.n_ == b.n_ && a.amps_ == b.amps_;
    }

  private:
    StateVector(int n, Eigen::VectorXcd amps) : n_{n}, amps_{std::move(amps)} {}

    static int check_qubits(int n) {
        if (n < 1 || n > kMaxQubits) {
            throw std::invalid_argument("qubit count must be in [1, " + std::to_string(kMaxQubits) +
                                        "], got " + std::to_string(n));
        }
        return n;
    }
    static Eigen::Index dim_of(int n) { return Eigen::Index{1} << n; }
    static int qubits_for_length(Eigen::Index len) {
        if (len < 2 || (len & (len - 1)) != 0) {
            throw std::invalid_argument("amplitude count must be a power of two >= 2");
        }
        int n = 0;
        while ((Eigen::Index{1} << n) < len) {
            ++n;
        }
        return check_qubits(n);
    }

    int n_;
    Eigen::VectorXcd amps_;
};

// ---------------------------------------------------------------------------
// Elementary gates
// ---------------------------------------------------------------------------

/// exp(-i t Z / 2)
inline Gate2 rz(double t) {
    Gate2 g = Gate2::Zero();
    g(0, 0) = std::polar(1.0, -t / 2);
    g(1, 1) = std::polar(1.0, t / 2);
    return g;
}

/// exp(-i t Y / 2)
inline Gate2 ry(double t) {
    const double c = std::cos(t / 2);
    const double s = std::sin(t / 2);
    Gate2 g;
    g << c, -s, s, c;
    return g;
}

/// R(t1, t2, t3) = exp(-i t1 Z/2) exp(-i t2 Y/2) exp(-i t3 Z/2).
inline Gate2 rotation_gate(double t1, double t2, double t3) {
    require_finite(t1, "rotation angle");
    require_finite(t2, "rotation angle");
    require_finite(t3, "rotation angle");
    return rz(t1) * ry(t2) * rz(t3);
}

/// CNOT with the first (more significant) qubit as control.
inline Gate4 cnot_gate() {
    Gate4 g = Gate4::Zero();
    g(0, 0) = g(1, 1) = g(2, 3) = g(3, 2) = 1.0;
    return g;
}

inline Gate4 cz_gate() {
    Gate4 g = Gate4::Identity();
    g(3, 3) = -1.0;
    return g;
}

// ---------------------------------------------------------------------------
// Kernels. Unchecked except for index range; the public wrappers below
// validate unitarity.
// ---------------------------------------------------------------------------

namespace kernels {

inline std::size_t bit_of(int n, int q) { return std::size_t{1} << (n - 1 - q); }

inline void check_qubit(int n, int q) {
    if (q < 0 || q >= n) {
        throw std::invalid_argument("qubit index " + std::to_string(q) + " out of range for " +
                                    std::to_string(n) + " qubits");
    }
}

inline void check_pair(int n, int qa, int qb) {
    check_qubit(n, qa);
    check_qubit(n, qb);
    if (qa == qb) {
        throw std::invalid_argument("two-qubit gate needs distinct qubits");
    }
}

inline void apply_1q(cplx *a, int n, int q, const Gate2 &g) {
    const std::size_t stride = bit_of(n, q);
    const std::size_t dim = std::size_t{1} << n;
    const cplx g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cplx x0 = a[i];
            const cplx x1 = a[i + stride];
            a[i] = g00 * x0 + g01 * x1;
            a[i + stride] = g10 * x0 + g11 * x1;
        }
    }
}

/// Row/column order of `g` is |q_a q_b> with q_a the more significant index.
inline void apply_2q(cplx *a, int n, int qa, int qb, const Gate4 &g) {
    const std::size_t ba = bit_of(n, qa);
    const std::size_t bb = bit_of(n, qb);
    const std::size_t lo = std::min(ba, bb);
    const std::size_t hi = std::max(ba, bb);
    const std::size_t quarter = std::size_t{1} << (n - 2);
    cplx m[4][4];
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            m[r][c] = g(r, c);
        }
    }
    for (std::size_t k = 0; k < quarter; ++k) {
        std::size_t i = ((k & ~(lo - 1)) << 1) | (k & (lo - 1));
        i = ((i & ~(hi - 1)) << 1) | (i & (hi - 1));
        const std::size_t idx[4] = {i, i | bb, i | ba, i | ba | bb};
        const cplx v[4] = {a[idx[0]], a[idx[1]], a[idx[2]], a[idx[3]]};
        for (int r = 0; r < 4; ++r) {
            a[idx[r]] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
        }
    }
}

inline void apply_cz(cplx *a, int n, int qa, int qb) {
    const std::size_t mask = bit_of(n, qa) | bit_of(n, qb);
    const std::size_t dim = std::size_t{1} << n;
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & mask) == mask) {
            a[i] = -a[i];
        }
    }
}

inline void apply_cnot(cplx *a, int n, int control, int target) {
    const std::size_t bc = bit_of(n, control);
    const std::size_t bt = bit_of(n, target);
    const std::size_t dim = std::size_t{1} << n;
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & bc) != 0 && (i & bt) == 0) {
            std::swap(a[i], a[i | bt]);
        }
    }
}

} // namespace kernels

inline StateVector apply_single_qubit(StateVector state, int q, const Gate2 &g) {
    kernels::check_qubit(state.n_qubits(), q);
    if (!is_unitary(g)) {
        throw std::invalid_argument("single-qubit gate is not unitary");
    }
    kernels::apply_1q(state.data(), state.n_qubits(), q, g);
    return state;
}

inline StateVector apply_two_qubit(StateVector state, int qa, int qb, const Gate4 &g) {
    kernels::check_pair(state.n_qubits(), qa, qb);
    if (!is_unitary(g)) {
        throw std::invalid_argument("two-qubit gate is not unitary");
    }
    kernels::apply_2q(state.data(), state.n_qubits(), qa, qb, g);
    return state;
}

// ---------------------------------------------------------------------------
// Haar sampling
// ---------------------------------------------------------------------------

/**
 * Haar-random element of U(dim).
 *
 * A dim x dim matrix of i.i.d. standard complex Gaussians (drawn column by
 * column, real part then imaginary part) is QR-decomposed and Q is
 * multiplied by diag(r_kk / |r_kk|) to remove the phase ambiguity of QR.
 */
inline Eigen::MatrixXcd haar_unitary(int dim, CounterRng &rng) {
    if (dim < 1) {
        throw std::invalid_argument("Haar dimension must be >= 1");
    }
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2);
    Eigen::MatrixXcd g(dim, dim);
    for (int c = 0; c < dim; ++c) {
        for (int r = 0; r < dim; ++r) {
            const double re = normal(rng);
            const double im = normal(rng);
            g(r, c) = cplx(re, im);
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::VectorXcd diag = qr.matrixQR().diagonal();
    for (int c = 0; c < dim; ++c) {
        q.col(c) *= diag[c] / std::abs(diag[c]);
    }
    return q;
}

inline Gate4 haar_gate4(CounterRng &rng) { return haar_unitary(4, rng); }
inline Gate2 haar_gate2(CounterRng &rng) { return haar_unitary(2, rng); }

/**
 * U|0...0> for U ~ Haar on 2^n dimensions.
 *
 * Only the first Ginibre column enters U|0>: after phase fixing that column
 * is g_1 / |g_1|. Consuming the generator in the same order as
 * haar_unitary, this returns exactly haar_unitary(2^n, rng).col(0) without
 * the O(d^3) factorization.
 */
inline StateVector haar_state(int n_qubits, CounterRng &rng) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("qubit count out of range");
    }
    const Eigen::Index dim = Eigen::Index{1} << n_qubits;
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2);
    Eigen::VectorXcd v(dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const double re = normal(rng);
        const double im = normal(rng);
        v[r] = cplx(re, im);
    }
    return StateVector::normalized(std::move(v));
}

// ---------------------------------------------------------------------------
// Measurements on states
// ---------------------------------------------------------------------------

inline cplx inner_product(const StateVector &a, const StateVector &b) {
    if (a.n_qubits() != b.n_qubits()) {
        throw std::invalid_argument("inner product of states with different qubit counts");
    }
    return a.amplitudes().dot(b.amplitudes()); // conjugates the left operand
}

inline double overlap_sq(const StateVector &a, const StateVector &b) {
    return std::norm(inner_product(a, b));
}

inline std::vector<double> outcome_distribution(const StateVector &s) {
    std::vector<double> p(s.dim());
    const cplx *a = s.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
        p[j] = std::norm(a[j]);
    }
    return p;
}

/**
 * Von Neumann entropy, in bits, of qubits [0, k) in a pure state.
 *
 * Amplitudes are reshaped row-major into a 2^k x 2^(n-k) matrix whose
 * squared singular values are the Schmidt weights.
 */
inline double bipartite_entropy(const StateVector &s, int k) {
    const int n = s.n_qubits();
    if (k < 1 || k > n - 1) {
        throw std::invalid_argument("entropy cut must satisfy 1 <= k <= n-1");
    }
    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> m(s.data(), Eigen::Index{1} << k, Eigen::Index{1} << (n - k));
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
    double h = 0.0;
    for (const double sigma : svd.singularValues()) {
        const double p = sigma * sigma;
        if (p > 0.0) {
            h -= p * std::log2(p);
        }
    }
    return std::clamp(h, 0.0, static_cast<double>(std::min(k, n - k)));
}

} // namespace mlevqc
