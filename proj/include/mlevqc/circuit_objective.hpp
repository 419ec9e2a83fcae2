#pragma once

/**
 * @file
 * Training objectives over a circuit layout: C_dis for a discrimination
 * task and C_gen for a target state.
 *
 * gradient() is the central finite-difference gradient computed with cached
 * prefix states: the shifted circuits for parameter i are re-simulated only
 * from the first gate that reads parameter i. Every floating-point operation
 * matches a full re-simulation, so the result is bit-identical to
 * finite_diff_gradient over operator().
 */

#include <algorithm>
#include <memory>
#include <vector>

#include "mlevqc/ansatz.hpp"
#include "mlevqc/discriminate.hpp"
#include "mlevqc/optimize.hpp"
#include "mlevqc/statevec.hpp"

namespace mlevqc {

class CircuitObjective {
  public:
    enum class Kind { Discrimination, Generation };

    static CircuitObjective discrimination(CircuitLayout layout, DiscriminationTask task) {
        if (task.n_qubits() != layout.n_qubits()) {
            throw std::invalid_argument("task qubit count does not match the layout");
        }
        const double ph = helstrom_pure(task);
        std::vector<StateVector> inputs{task.psi0, task.psi1};
        return CircuitObjective(Kind::Discrimination, std::move(layout), std::move(inputs),
                                std::make_shared<const DiscriminationTask>(std::move(task)), ph,
                                std::nullopt);
    }

    static CircuitObjective generation(CircuitLayout layout, StateVector target) {
        if (target.n_qubits() != layout.n_qubits()) {
            throw std::invalid_argument("target qubit count does not match the layout");
        }
        std::vector<StateVector> inputs{StateVector(layout.n_qubits())};
        return CircuitObjective(Kind::Generation, std::move(layout), std::move(inputs), nullptr, 0.0,
                                std::move(target));
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const CircuitLayout &layout() const noexcept { return layout_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return layout_.param_count(); }
    /// P_H of the task (0 for generation).
    [[nodiscard]] double helstrom() const noexcept { return helstrom_; }

    double operator()(const Vector &x) const {
        const auto gates = compile(layout_, as_span(x));
        std::vector<StateVector> states = inputs_;
        for (auto &s : states) {
            gates.apply(s);
        }
        return cost_of(states);
    }

    /// Error probability of the task's measurement at x (discrimination only).
    [[nodiscard]] double error_probability(const Vector &x) const {
        if (kind_ != Kind::Discrimination) {
            throw std::logic_error("error_probability needs a discrimination objective");
        }
        return (*this)(x) + helstrom_;
    }

    [[nodiscard]] Vector gradient(const Vector &x, double step) const {
        if (!(step > 0)) {
            throw std::invalid_argument("finite-difference step must be positive");
        }
        check_params(layout_, as_span(x));
        const auto &slots = layout_.slots();
        const int n = layout_.n_qubits();
        const CompiledCircuit base = compile(layout_, as_span(x));

        Vector g(x.size());
        Vector xp = x;
        std::vector<StateVector> prefix = inputs_;
        std::size_t applied = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const std::size_t first = first_slot_[static_cast<std::size_t>(i)];
            if (first < applied) { // parameters not in slot order
                prefix = inputs_;
                applied = 0;
            }
            for (; applied < first; ++applied) {
                for (auto &s : prefix) {
                    apply_gate(s.data(), n, base.gates()[applied]);
                }
            }
            const double xi = x[i];
            double f[2];
            for (int side = 0; side < 2; ++side) {
                xp[i] = side == 0 ? xi + step : xi - step;
                // Recompile the suffix the way compile() would; slots that do
                // not read parameter i keep their matrices.
                std::vector<CompiledGate> suffix(base.gates().begin() + static_cast<long>(first),
                                                 base.gates().end());
                for (std::size_t k = first; k < slots.size(); ++k) {
                    if (reads(slots[k], i)) {
                        suffix[k - first] = slot_gate(slots[k], as_span(xp));
                    }
                }
                std::vector<StateVector> states = prefix;
                for (auto &s : states) {
                    for (const auto &gate : suffix) {
                        apply_gate(s.data(), n, gate);
                    }
                }
                f[side] = cost_of(states);
            }
            xp[i] = xi;
            g[i] = (f[0] - f[1]) / (2 * step);
        }
        return g;
    }

    /// Objective for multi_restart_train using the cached-prefix gradient.
    [[nodiscard]] Objective as_objective(double fd_step) const {
        auto self = std::make_shared<const CircuitObjective>(*this);
        return Objective{dim(), [self](const Vector &x) { return (*self)(x); },
                         [self, fd_step](const Vector &x) { return self->gradient(x, fd_step); }};
    }

  private:
    CircuitObjective(Kind kind, CircuitLayout layout, std::vector<StateVector> inputs,
                     std::shared_ptr<const DiscriminationTask> task, double helstrom,
                     std::optional<StateVector> target)
        : kind_{kind}, layout_{std::move(layout)}, inputs_{std::move(inputs)}, task_{std::move(task)},
          helstrom_{helstrom}, target_{std::move(target)} {
        first_slot_.assign(static_cast<std::size_t>(layout_.param_count()), layout_.slots().size());
        for (std::size_t k = 0; k < layout_.slots().size(); ++k) {
            const auto &s = layout_.slots()[k];
            for (int j = 0; j < param_count(s.kind); ++j) {
                auto &f = first_slot_[static_cast<std::size_t>(s.param_offset + j)];
                f = std::min(f, k);
            }
        }
    }

    static bool reads(const GateSlot &s, Eigen::Index i) {
        return s.param_offset >= 0 && i >= s.param_offset && i < s.param_offset + param_count(s.kind);
    }

    double cost_of(const std::vector<StateVector> &out) const {
        if (kind_ == Kind::Discrimination) {
            return measured_error(*task_, out[0], out[1]) - helstrom_;
        }
        return std::clamp(1.0 - overlap_sq(*target_, out[0]), 0.0, 1.0);
    }

    Kind kind_;
    CircuitLayout layout_;
    std::vector<StateVector> inputs_;
    std::shared_ptr<const DiscriminationTask> task_;
    double helstrom_;
    std::optional<StateVector> target_;
    std::vector<std::size_t> first_slot_;
};

} // namespace mlevqc
