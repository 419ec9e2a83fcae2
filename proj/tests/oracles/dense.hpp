#pragma once

// Independent dense reference implementations. Everything here is built from
// Kronecker products and explicit permutation matrices, never from the
// library kernels.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat kron(const Mat &a, const Mat &b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Mat eye(Eigen::Index d) { return Mat::Identity(d, d); }

inline Mat pauli(char p) {
    Mat m(2, 2);
    const cplx i{0, 1};
    switch (p) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m = eye(2);
    }
    return m;
}

/// Kronecker product of single-qubit factors, qubit 0 leftmost.
inline Mat kron_all(const std::vector<Mat> &factors) {
    Mat out = Mat::Identity(1, 1);
    for (const auto &f : factors) {
        out = kron(out, f);
    }
    return out;
}

inline Mat pauli_string(const std::string &label) {
    std::vector<Mat> f;
    for (char c : label) {
        f.push_back(pauli(c));
    }
    return kron_all(f);
}

/// Single-qubit gate g on qubit q of n: I (x) ... (x) g (x) ... (x) I.
inline Mat embed_1q(int n, int q, const Mat &g) {
    return kron(kron(eye(Eigen::Index{1} << q), g), eye(Eigen::Index{1} << (n - q - 1)));
}

/// Permutation matrix relabelling qubits: basis state bits b_0..b_{n-1}
/// (b_0 most significant) map to positions perm[k].
inline Mat qubit_permutation(int n, const std::vector<int> &perm) {
    const Eigen::Index d = Eigen::Index{1} << n;
    Mat p = Mat::Zero(d, d);
    for (Eigen::Index x = 0; x < d; ++x) {
        Eigen::Index y = 0;
        for (int k = 0; k < n; ++k) {
            const auto bit = (x >> (n - 1 - k)) & 1;
            y |= bit << (n - 1 - perm[static_cast<std::size_t>(k)]);
        }
        p(y, x) = 1.0;
    }
    return p;
}

/// Two-qubit gate g on ordered qubits (qa, qb): move qa to 0 and qb to 1,
/// apply g (x) I, move back.
inline Mat embed_2q(int n, int qa, int qb, const Mat &g) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    perm[static_cast<std::size_t>(qa)] = 0;
    perm[static_cast<std::size_t>(qb)] = 1;
    int next = 2;
    for (int k = 0; k < n; ++k) {
        if (k != qa && k != qb) {
            perm[static_cast<std::size_t>(k)] = next++;
        }
    }
    const Mat p = qubit_permutation(n, perm);
    return p.adjoint() * kron(g, eye(Eigen::Index{1} << (n - 2))) * p;
}

/// Cyclic shift T: qubit k moves to k + 1 (mod n).
inline Mat cyclic_shift(int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        perm[static_cast<std::size_t>(k)] = (k + 1) % n;
    }
    return qubit_permutation(n, perm);
}

// Elementary gates written out from their definitions.

inline Mat rz(double t) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = std::exp(cplx{0, -t / 2});
    m(1, 1) = std::exp(cplx{0, t / 2});
    return m;
}

inline Mat ry(double t) {
    // exp(-i t Y / 2) = cos(t/2) I - i sin(t/2) Y
    return std::cos(t / 2) * eye(2) - cplx{0, 1} * std::sin(t / 2) * pauli('Y');
}

inline Mat rot(double a, double b, double c) { return rz(a) * ry(b) * rz(c); }

/// CNOT on a 2-qubit register, control c and target t in {0, 1}.
inline Mat cnot2(int c, int t) {
    const Mat p0 = (eye(2) + pauli('Z')) / 2.0;
    const Mat p1 = (eye(2) - pauli('Z')) / 2.0;
    return c == 0 && t == 1 ? Mat(kron(p0, eye(2)) + kron(p1, pauli('X')))
                            : Mat(kron(eye(2), p0) + kron(pauli('X'), p1));
}

inline Mat cz2() { return Mat(Eigen::Vector4cd(1, 1, 1, -1).asDiagonal()); }

/// Fifteen-angle two-qubit template as an explicit matrix product.
inline Mat universal(const double *p) {
    Mat u = kron(rot(p[0], p[1], p[2]), rot(p[3], p[4], p[5]));
    u = cnot2(1, 0) * u;
    u = kron(rz(p[6]), ry(p[7])) * u;
    u = cnot2(0, 1) * u;
    u = kron(eye(2), ry(p[8])) * u;
    u = cnot2(1, 0) * u;
    return kron(rot(p[9], p[10], p[11]), rot(p[12], p[13], p[14])) * u;
}

/// |<a|b>| distance between unitaries modulo a global phase.
inline double phase_distance(const Mat &a, const Mat &b) {
    const cplx tr = (a.adjoint() * b).trace();
    const cplx phase = std::abs(tr) > 0 ? tr / std::abs(tr) : cplx{1, 0};
    return (a * phase - b).cwiseAbs().maxCoeff();
}

/// Periodic TFIM H = -sum Z_i Z_{i+1} + g sum X_i from Pauli strings.
inline Mat tfim(int n, double g) {
    const Eigen::Index d = Eigen::Index{1} << n;
    Mat h = Mat::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        std::string zz(static_cast<std::size_t>(n), 'I');
        zz[static_cast<std::size_t>(i)] = 'Z';
        zz[static_cast<std::size_t>((i + 1) % n)] = 'Z';
        std::string x(static_cast<std::size_t>(n), 'I');
        x[static_cast<std::size_t>(i)] = 'X';
        h -= pauli_string(zz);
        h += g * pauli_string(x);
    }
    return h;
}

/// Jordan-Wigner ground energy of the periodic chain: the even-parity
/// sector has antiperiodic fermion momenta k = (2m + 1) pi / N.
inline double tfim_ground_energy(int n, double g) {
    double e = 0.0;
    for (int m = 0; m < n; ++m) {
        const double k = (2.0 * m + 1.0) * std::numbers::pi / n;
        e -= std::sqrt(1.0 + g * g - 2.0 * g * std::cos(k));
    }
    return e;
}

/// Mean entanglement entropy (bits) of a Haar state on d_a x d_b, d_a <= d_b.
inline double page_entropy_bits(double da, double db) {
    double s = 0.0;
    for (double k = db + 1; k <= da * db; k += 1.0) {
        s += 1.0 / k;
    }
    return (s - (da - 1) / (2 * db)) / std::log(2.0);
}

} // namespace oracle
