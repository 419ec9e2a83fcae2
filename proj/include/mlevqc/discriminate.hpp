#pragma once

/**
 * @file
 * Binary discrimination of equal-prior pure states: the Helstrom limit, the
 * maximum-likelihood decision on full computational-basis outcomes, the
 * single-qubit baseline and the two training costs.
 */

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlevqc/ansatz.hpp"
#include "mlevqc/statevec.hpp"

namespace mlevqc {

enum class MeasurementMode { FullMLE, SingleQubit };

struct DiscriminationTask {
    StateVector psi0;
    StateVector psi1;
    MeasurementMode mode = MeasurementMode::FullMLE;
    int measured_qubit = -1; ///< SingleQubit mode; -1 means floor(n/2)

    DiscriminationTask(StateVector a, StateVector b, MeasurementMode m = MeasurementMode::FullMLE,
                       int q = -1)
        : psi0{std::move(a)}, psi1{std::move(b)}, mode{m}, measured_qubit{q} {
        if (psi0.n_qubits() != psi1.n_qubits()) {
            throw std::invalid_argument("task states have different qubit counts");
        }
        if (mode == MeasurementMode::SingleQubit) {
            kernels::check_qubit(psi0.n_qubits(), qubit());
        }
    }

    [[nodiscard]] int n_qubits() const { return psi0.n_qubits(); }
    [[nodiscard]] int qubit() const { return measured_qubit >= 0 ? measured_qubit : n_qubits() / 2; }
};

/// P_H = (1 - sqrt(1 - |<psi0|psi1>|^2)) / 2.
inline double helstrom_pure(const StateVector &psi0, const StateVector &psi1) {
    const double f = std::min(overlap_sq(psi0, psi1), 1.0);
    return std::clamp(0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - f))), 0.0, 0.5);
}

inline double helstrom_pure(const DiscriminationTask &t) { return helstrom_pure(t.psi0, t.psi1); }

/// Hypothesis chosen for each outcome: 0 where q0 >= q1 (ties go to 0).
inline std::vector<int> mle_decision_rule(const std::vector<double> &q0,
                                          const std::vector<double> &q1) {
    if (q0.size() != q1.size()) {
        throw std::invalid_argument("outcome distributions differ in length");
    }
    std::vector<int> rule(q0.size());
    for (std::size_t j = 0; j < q0.size(); ++j) {
        rule[j] = q0[j] >= q1[j] ? 0 : 1;
    }
    return rule;
}

/// P_E = (1 - sum_{q0 >= q1} (q0 - q1)) / 2.
inline double mle_error_from_distributions(const std::vector<double> &q0,
                                           const std::vector<double> &q1) {
    if (q0.size() != q1.size()) {
        throw std::invalid_argument("outcome distributions differ in length");
    }
    double gain = 0.0;
    for (std::size_t j = 0; j < q0.size(); ++j) {
        if (q0[j] >= q1[j]) {
            gain += q0[j] - q1[j];
        }
    }
    return std::clamp(0.5 * (1.0 - gain), 0.0, 0.5);
}

/// Same as above, straight from amplitudes.
inline double mle_error_from_states(const StateVector &a, const StateVector &b) {
    double gain = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) {
        const double d = std::norm(a[j]) - std::norm(b[j]);
        if (d >= 0) {
            gain += d;
        }
    }
    return std::clamp(0.5 * (1.0 - gain), 0.0, 0.5);
}

/// Binary MLE on the marginal of qubit q.
inline double single_qubit_error_from_states(const StateVector &a, const StateVector &b, int q) {
    kernels::check_qubit(a.n_qubits(), q);
    const std::size_t mask = kernels::bit_of(a.n_qubits(), q);
    double p0 = 0.0; // P(bit = 0 | psi0)
    double p1 = 0.0; // P(bit = 0 | psi1)
    for (std::size_t j = 0; j < a.dim(); ++j) {
        if ((j & mask) == 0) {
            p0 += std::norm(a[j]);
            p1 += std::norm(b[j]);
        }
    }
    return mle_error_from_distributions({p0, 1.0 - p0}, {p1, 1.0 - p1});
}

/// Error of the task's measurement on already-processed states.
inline double measured_error(const DiscriminationTask &t, const StateVector &out0,
                             const StateVector &out1) {
    return t.mode == MeasurementMode::FullMLE ? mle_error_from_states(out0, out1)
                                              : single_qubit_error_from_states(out0, out1, t.qubit());
}

inline double mle_error(const DiscriminationTask &t, const CircuitLayout &layout,
                        std::span<const double> params) {
    if (t.mode != MeasurementMode::FullMLE) {
        throw std::invalid_argument("mle_error needs a full-MLE task");
    }
    return mle_error_from_states(apply_circuit(layout, params, t.psi0),
                                 apply_circuit(layout, params, t.psi1));
}

inline double single_qubit_error(const DiscriminationTask &t, const CircuitLayout &layout,
                                 std::span<const double> params) {
    if (t.mode != MeasurementMode::SingleQubit) {
        throw std::invalid_argument("single_qubit_error needs a single-qubit task");
    }
    return single_qubit_error_from_states(apply_circuit(layout, params, t.psi0),
                                          apply_circuit(layout, params, t.psi1), t.qubit());
}

/// Error probability of the task's own measurement mode.
inline double task_error(const DiscriminationTask &t, const CircuitLayout &layout,
                         std::span<const double> params) {
    return measured_error(t, apply_circuit(layout, params, t.psi0),
                          apply_circuit(layout, params, t.psi1));
}

/// C_dis = P_E - P_H.
inline double cost_dis(const DiscriminationTask &t, const CircuitLayout &layout,
                       std::span<const double> params) {
    return task_error(t, layout, params) - helstrom_pure(t);
}

/// C_gen = 1 - |<target|U|0>|^2.
inline double cost_gen(const CircuitLayout &layout, std::span<const double> params,
                       const StateVector &target) {
    if (target.n_qubits() != layout.n_qubits()) {
        throw std::invalid_argument("target qubit count does not match the layout");
    }
    const auto out = apply_circuit(layout, params, StateVector(layout.n_qubits()));
    return std::clamp(1.0 - overlap_sq(target, out), 0.0, 1.0);
}

} // namespace mlevqc
