#pragma once

/**
 * @file
 * Parameterized circuit layouts for every supported architecture.
 *
 * A CircuitLayout is an ordered list of layers, each an ordered list of gate
 * slots. Every parameterized slot reads a contiguous block of the flat
 * parameter vector starting at `param_offset`. Layouts are immutable values;
 * build_layout is a pure function of (architecture, n, depth).
 *
 * Layer rules (layers numbered l = 1..D):
 *  - brickwall-open: pairs (0,1),(2,3),... on odd l; (1,2),(3,4),... on even l.
 *  - brickwall-periodic: as open, plus the wrap pair (n-1,0) on even l.
 *  - brickwall-ti: periodic wiring; every slot of a layer shares one
 *    15-parameter block.
 *  - prism: brickwall-open layer l followed by one long-range gate on
 *    (a, (a + n/2) mod n) with a = (l-1) mod n.
 *  - polygon: stride s = ((l-1) mod (n/2)) + 1; gates on (i, (i+s) mod n)
 *    for i = 0..n-1, skipping pairs already present in the layer.
 *  - ttn: level l pairs the active qubits (a0,a1),(a2,a3),... and keeps the
 *    even-indexed ones. Maximum depth log2(n); n must be a power of two.
 *  - mera: each ttn level is preceded by disentanglers on the active pairs
 *    (a1,a2),(a3,a4),... . Same depth cap and power-of-two rule as ttn.
 *  - qcnn: convolution on active pairs (a0,a1),(a2,a3),... then
 *    (a1,a2),(a3,a4),...; pooling on (a0,a1),(a2,a3),... then the odd-indexed
 *    active qubits are dropped. Maximum depth ceil(log2 n). Dropped qubits
 *    are still measured.
 *  - svqc / real-svqc: D entangler layers, each a rotation on every qubit
 *    (Rotation3 or RotationY) followed by a CZ brick layer with the brickwall
 *    pair rule; every second CZ layer also gets CZ(n-1, 0). A final rotation
 *    on every qubit closes the circuit.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <climits>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mlevqc/errors.hpp"
#include "mlevqc/rng.hpp"
#include "mlevqc/statevec.hpp"

namespace mlevqc {

using ParameterVector = Eigen::VectorXd;

enum class Architecture {
    BrickwallOpen,
    BrickwallPeriodic,
    BrickwallTI,
    Prism,
    Polygon,
    QCNN,
    TTN,
    MERA,
    SVQC,
    RealSVQC,
};

inline constexpr std::array kAllArchitectures = {
    Architecture::BrickwallOpen, Architecture::BrickwallPeriodic, Architecture::BrickwallTI,
    Architecture::Prism,         Architecture::Polygon,           Architecture::QCNN,
    Architecture::TTN,           Architecture::MERA,              Architecture::SVQC,
    Architecture::RealSVQC,
};

constexpr std::string_view name(Architecture a) {
    switch (a) {
    case Architecture::BrickwallOpen: return "brickwall-open";
    case Architecture::BrickwallPeriodic: return "brickwall-periodic";
    case Architecture::BrickwallTI: return "brickwall-ti";
    case Architecture::Prism: return "prism";
    case Architecture::Polygon: return "polygon";
    case Architecture::QCNN: return "qcnn";
    case Architecture::TTN: return "ttn";
    case Architecture::MERA: return "mera";
    case Architecture::SVQC: return "svqc";
    case Architecture::RealSVQC: return "real-svqc";
    }
    return "?";
}

inline std::string architecture_options() {
    std::string out;
    for (auto a : kAllArchitectures) {
        if (!out.empty()) {
            out += ", ";
        }
        out += name(a);
    }
    return out;
}

inline Architecture parse_architecture(std::string_view s) {
    for (auto a : kAllArchitectures) {
        if (name(a) == s) {
            return a;
        }
    }
    if (s == "brickwall") {
        return Architecture::BrickwallOpen;
    }
    throw std::invalid_argument("unknown architecture '" + std::string(s) +
                                "'; expected one of: " + architecture_options());
}

constexpr bool is_extensive(Architecture a) {
    return a != Architecture::QCNN && a != Architecture::TTN && a != Architecture::MERA;
}

inline int ceil_log2(int n) {
    int l = 0;
    while ((1 << l) < n) {
        ++l;
    }
    return l;
}

/// Structural depth cap of a non-extensive architecture; nullopt when the
/// architecture accepts any depth.
inline std::optional<int> max_depth(Architecture a, int n) {
    if (is_extensive(a)) {
        return std::nullopt;
    }
    return ceil_log2(n);
}

enum class GateKind { Universal2Q, Rotation3, RotationY, CZ, CNOT };

constexpr int param_count(GateKind k) {
    switch (k) {
    case GateKind::Universal2Q: return 15;
    case GateKind::Rotation3: return 3;
    case GateKind::RotationY: return 1;
    case GateKind::CZ:
    case GateKind::CNOT: return 0;
    }
    return 0;
}

constexpr bool is_two_qubit(GateKind k) {
    return k == GateKind::Universal2Q || k == GateKind::CZ || k == GateKind::CNOT;
}

constexpr std::string_view name(GateKind k) {
    switch (k) {
    case GateKind::Universal2Q: return "universal2q";
    case GateKind::Rotation3: return "rotation3";
    case GateKind::RotationY: return "rotation-y";
    case GateKind::CZ: return "cz";
    case GateKind::CNOT: return "cnot";
    }
    return "?";
}

inline GateKind parse_gate_kind(std::string_view s) {
    for (auto k : {GateKind::Universal2Q, GateKind::Rotation3, GateKind::RotationY, GateKind::CZ,
                   GateKind::CNOT}) {
        if (name(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown gate kind '" + std::string(s) + "'");
}

struct GateSlot {
    GateKind kind;
    int qa;
    int qb = -1;          ///< -1 for single-qubit slots
    int param_offset = -1; ///< -1 for fixed gates

    friend bool operator==(const GateSlot &, const GateSlot &) = default;
};

using Layer = std::vector<GateSlot>;

class CircuitLayout {
  public:
    /// Empty circuit on n qubits (depth 0).
    static CircuitLayout identity(int n_qubits, Architecture arch = Architecture::BrickwallOpen) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("qubit count out of range");
        }
        return CircuitLayout(arch, n_qubits, 0, {}, 0);
    }

    /// Validating constructor used by build_layout and deserialization.
    static CircuitLayout from_layers(Architecture arch, int n_qubits, int depth,
                                     std::vector<Layer> layers, int declared_params) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("qubit count out of range");
        }
        std::vector<bool> used(static_cast<std::size_t>(std::max(declared_params, 0)), false);
        for (const auto &layer : layers) {
            for (const auto &s : layer) {
                kernels::check_qubit(n_qubits, s.qa);
                if (is_two_qubit(s.kind)) {
                    kernels::check_pair(n_qubits, s.qa, s.qb);
                } else if (s.qb != -1) {
                    throw std::invalid_argument("single-qubit slot with a second qubit");
                }
                const int np = mlevqc::param_count(s.kind);
                if (np == 0) {
                    if (s.param_offset != -1) {
                        throw std::invalid_argument("fixed gate with parameter indices");
                    }
                    continue;
                }
                if (s.param_offset < 0 || s.param_offset + np > declared_params) {
                    throw std::invalid_argument("slot parameter indices out of range");
                }
                for (int i = 0; i < np; ++i) {
                    used[static_cast<std::size_t>(s.param_offset + i)] = true;
                }
            }
        }
        if (std::find(used.begin(), used.end(), false) != used.end()) {
            throw std::invalid_argument(
                "declared parameter count exceeds the parameters referenced by slots");
        }
        return CircuitLayout(arch, n_qubits, depth, std::move(layers), declared_params);
    }

    [[nodiscard]] Architecture architecture() const noexcept { return arch_; }
    [[nodiscard]] int n_qubits() const noexcept { return n_; }
    [[nodiscard]] int depth() const noexcept { return depth_; }
    [[nodiscard]] int param_count() const noexcept { return params_; }
    [[nodiscard]] const std::vector<Layer> &layers() const noexcept { return layers_; }
    /// Slots in application order.
    [[nodiscard]] const std::vector<GateSlot> &slots() const noexcept { return flat_; }

    /// D*: CNOT/CZ layers in the physical implementation. Three per layer
    /// holding a universal gate, one per layer of CZ/CNOT gates.
    [[nodiscard]] int entangler_layers() const {
        int count = 0;
        for (const auto &layer : layers_) {
            const bool universal = std::any_of(layer.begin(), layer.end(), [](const GateSlot &s) {
                return s.kind == GateKind::Universal2Q;
            });
            const bool fixed = std::any_of(layer.begin(), layer.end(), [](const GateSlot &s) {
                return s.kind == GateKind::CZ || s.kind == GateKind::CNOT;
            });
            count += universal ? 3 : (fixed ? 1 : 0);
        }
        return count;
    }

    [[nodiscard]] std::size_t count(GateKind k) const {
        return static_cast<std::size_t>(
            std::count_if(flat_.begin(), flat_.end(), [k](const GateSlot &s) { return s.kind == k; }));
    }

    friend bool operator==(const CircuitLayout &a, const CircuitLayout &b) {
        return a.arch_ == b.arch_ && a.n_ == b.n_ && a.depth_ == b.depth_ &&
               a.params_ == b.params_ && a.layers_ == b.layers_;
    }

  private:
    CircuitLayout(Architecture arch, int n, int depth, std::vector<Layer> layers, int params)
        : arch_{arch}, n_{n}, depth_{depth}, params_{params}, layers_{std::move(layers)} {
        for (const auto &layer : layers_) {
            flat_.insert(flat_.end(), layer.begin(), layer.end());
        }
    }

    Architecture arch_;
    int n_;
    int depth_;
    int params_;
    std::vector<Layer> layers_;
    std::vector<GateSlot> flat_;
};

inline int count_entangler_layers(const CircuitLayout &layout) { return layout.entangler_layers(); }

// ---------------------------------------------------------------------------
// Two-qubit template
// ---------------------------------------------------------------------------

inline constexpr int kUniversalParams = 15;

namespace detail {

inline Gate4 kron(const Gate2 &a, const Gate2 &b) {
    Gate4 out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
        }
    }
    return out;
}

// Left-multiplication by CNOT(control a, target b): swap rows |10>,|11>.
inline void cnot_ab_left(Gate4 &m) { m.row(2).swap(m.row(3)); }
// Left-multiplication by CNOT(control b, target a): swap rows |01>,|11>.
inline void cnot_ba_left(Gate4 &m) { m.row(1).swap(m.row(3)); }

} // namespace detail

/**
 * Universal two-qubit gate from 15 angles, 3 CNOTs.
 *
 * Application order on (q_a, q_b):
 *   R(p0,p1,p2) x R(p3,p4,p5);  CNOT(b->a);  RZ(p6) x RY(p7);
 *   CNOT(a->b);  I x RY(p8);  CNOT(b->a);  R(p9,p10,p11) x R(p12,p13,p14)
 * where R is rotation_gate. The alternating CNOT orientation reaches all of
 * SU(4) up to a global phase. With every angle zero the gate is SWAP.
 */
inline Gate4 universal_two_qubit(std::span<const double> p) {
    if (p.size() != kUniversalParams) {
        throw std::invalid_argument("universal two-qubit gate needs 15 parameters, got " +
                                    std::to_string(p.size()));
    }
    for (double v : p) {
        require_finite(v, "gate parameter");
    }
    Gate4 m = detail::kron(rotation_gate(p[0], p[1], p[2]), rotation_gate(p[3], p[4], p[5]));
    detail::cnot_ba_left(m);
    m = detail::kron(rz(p[6]), ry(p[7])) * m;
    detail::cnot_ab_left(m);
    m = detail::kron(Gate2::Identity(), ry(p[8])) * m;
    detail::cnot_ba_left(m);
    return detail::kron(rotation_gate(p[9], p[10], p[11]), rotation_gate(p[12], p[13], p[14])) * m;
}

/// Angles for which universal_two_qubit is the identity up to global phase.
/// The middle angles make the CNOT core equal to RZ(-pi/2) x RZ(pi/2),
/// which the post-rotations undo.
inline std::array<double, kUniversalParams> universal_identity_parameters() {
    constexpr double h = std::numbers::pi / 2;
    return {0, 0, 0, 0, 0, 0, -h, h, -h, h, 0, 0, -h, 0, 0};
}

// ---------------------------------------------------------------------------
// Layout construction
// ---------------------------------------------------------------------------

namespace detail {

class LayoutBuilder {
  public:
    void begin_layer() { layers_.emplace_back(); }

    void add(GateKind kind, int qa, int qb = -1) {
        const int np = param_count(kind);
        layers_.back().push_back(GateSlot{kind, qa, qb, np > 0 ? next_ : -1});
        next_ += np;
    }

    void add_shared(GateKind kind, int qa, int qb, int offset) {
        layers_.back().push_back(GateSlot{kind, qa, qb, offset});
    }

    int reserve(int count) {
        const int off = next_;
        next_ += count;
        return off;
    }

    void drop_empty_last() {
        if (!layers_.empty() && layers_.back().empty()) {
            layers_.pop_back();
        }
    }

    std::vector<Layer> take() { return std::move(layers_); }
    [[nodiscard]] int params() const { return next_; }

  private:
    std::vector<Layer> layers_;
    int next_ = 0;
};

/// Pairs of one brickwall layer, l counted from 1.
inline std::vector<std::pair<int, int>> brick_pairs(int n, int l, bool periodic) {
    std::vector<std::pair<int, int>> pairs;
    const int start = (l % 2 == 1) ? 0 : 1;
    for (int i = start; i + 1 < n; i += 2) {
        pairs.emplace_back(i, i + 1);
    }
    if (periodic && l % 2 == 0 && n >= 2) {
        pairs.emplace_back(n - 1, 0);
    }
    return pairs;
}

inline void add_brickwall(LayoutBuilder &b, int n, int depth, bool periodic, bool shared) {
    for (int l = 1; l <= depth; ++l) {
        b.begin_layer();
        const auto pairs = brick_pairs(n, l, periodic);
        if (shared) {
            const int off = b.reserve(kUniversalParams);
            for (auto [a, c] : pairs) {
                b.add_shared(GateKind::Universal2Q, a, c, off);
            }
        } else {
            for (auto [a, c] : pairs) {
                b.add(GateKind::Universal2Q, a, c);
            }
        }
        b.drop_empty_last();
    }
}

inline void add_prism(LayoutBuilder &b, int n, int depth) {
    for (int l = 1; l <= depth; ++l) {
        b.begin_layer();
        for (auto [a, c] : brick_pairs(n, l, false)) {
            b.add(GateKind::Universal2Q, a, c);
        }
        const int a = (l - 1) % n;
        b.add(GateKind::Universal2Q, a, (a + n / 2) % n);
    }
}

inline void add_polygon(LayoutBuilder &b, int n, int depth) {
    for (int l = 1; l <= depth; ++l) {
        b.begin_layer();
        const int stride = ((l - 1) % (n / 2)) + 1;
        std::vector<std::pair<int, int>> seen;
        for (int i = 0; i < n; ++i) {
            const int j = (i + stride) % n;
            const std::pair<int, int> key{std::min(i, j), std::max(i, j)};
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
                continue;
            }
            seen.push_back(key);
            b.add(GateKind::Universal2Q, i, j);
        }
    }
}

inline void add_pairs(LayoutBuilder &b, const std::vector<int> &active, int first) {
    b.begin_layer();
    for (std::size_t i = static_cast<std::size_t>(first); i + 1 < active.size(); i += 2) {
        b.add(GateKind::Universal2Q, active[i], active[i + 1]);
    }
    b.drop_empty_last();
}

inline std::vector<int> keep_even(const std::vector<int> &active) {
    std::vector<int> out;
    for (std::size_t i = 0; i < active.size(); i += 2) {
        out.push_back(active[i]);
    }
    return out;
}

enum class Hierarchy { TTN, MERA, QCNN };

inline void add_hierarchy(LayoutBuilder &b, int n, int depth, Hierarchy kind) {
    std::vector<int> active(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        active[static_cast<std::size_t>(i)] = i;
    }
    for (int l = 1; l <= depth; ++l) {
        switch (kind) {
        case Hierarchy::TTN: add_pairs(b, active, 0); break;
        case Hierarchy::MERA:
            add_pairs(b, active, 1);
            add_pairs(b, active, 0);
            break;
        case Hierarchy::QCNN:
            add_pairs(b, active, 0);
            add_pairs(b, active, 1);
            add_pairs(b, active, 0);
            break;
        }
        active = keep_even(active);
    }
}

inline void add_simplified(LayoutBuilder &b, int n, int depth, GateKind rot) {
    auto rotations = [&] {
        b.begin_layer();
        for (int q = 0; q < n; ++q) {
            b.add(rot, q);
        }
    };
    for (int l = 1; l <= depth; ++l) {
        rotations();
        b.begin_layer();
        for (auto [a, c] : brick_pairs(n, l, false)) {
            b.add(GateKind::CZ, a, c);
        }
        if (l % 2 == 0) {
            b.add(GateKind::CZ, n - 1, 0);
        }
        b.drop_empty_last();
    }
    rotations();
}

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace detail

/// Checks the (architecture, n, depth) triple without building anything.
/// Throws std::invalid_argument for malformed input and capacity_error when
/// the depth exceeds a non-extensive architecture's maximum.
inline void validate_layout_request(Architecture arch, int n, int depth) {
    if (n < 2 || n % 2 != 0 || n > kMaxQubits) {
        throw std::invalid_argument("layouts need an even qubit count >= 2, got " +
                                    std::to_string(n));
    }
    if (depth < 0) {
        throw std::invalid_argument("depth must be >= 0");
    }
    if ((arch == Architecture::TTN || arch == Architecture::MERA) && !detail::is_power_of_two(n)) {
        throw std::invalid_argument(std::string(name(arch)) +
                                    " layouts need a power-of-two qubit count, got " +
                                    std::to_string(n));
    }
    if (const auto cap = max_depth(arch, n); cap && depth > *cap) {
        throw capacity_error(std::string(name(arch)) + " on " + std::to_string(n) +
                             " qubits admits depth at most " + std::to_string(*cap) + ", got " +
                             std::to_string(depth));
    }
}

inline CircuitLayout build_layout(Architecture arch, int n, int depth) {
    validate_layout_request(arch, n, depth);
    detail::LayoutBuilder b;
    switch (arch) {
    case Architecture::BrickwallOpen: detail::add_brickwall(b, n, depth, false, false); break;
    case Architecture::BrickwallPeriodic: detail::add_brickwall(b, n, depth, true, false); break;
    case Architecture::BrickwallTI: detail::add_brickwall(b, n, depth, true, true); break;
    case Architecture::Prism: detail::add_prism(b, n, depth); break;
    case Architecture::Polygon: detail::add_polygon(b, n, depth); break;
    case Architecture::TTN: detail::add_hierarchy(b, n, depth, detail::Hierarchy::TTN); break;
    case Architecture::MERA: detail::add_hierarchy(b, n, depth, detail::Hierarchy::MERA); break;
    case Architecture::QCNN: detail::add_hierarchy(b, n, depth, detail::Hierarchy::QCNN); break;
    case Architecture::SVQC: detail::add_simplified(b, n, depth, GateKind::Rotation3); break;
    case Architecture::RealSVQC: detail::add_simplified(b, n, depth, GateKind::RotationY); break;
    }
    const int params = b.params();
    return CircuitLayout::from_layers(arch, n, depth, b.take(), params);
}

/// Layout for depth D; D = 0 is the empty circuit.
inline CircuitLayout layout_for_depth(Architecture arch, int n, int depth) {
    return depth == 0 ? CircuitLayout::identity(n, arch) : build_layout(arch, n, depth);
}

// ---------------------------------------------------------------------------
// Circuit evaluation
// ---------------------------------------------------------------------------

struct CompiledGate {
    GateKind kind;
    int qa;
    int qb;
    Gate4 m4;
    Gate2 m2;
};

inline void apply_gate(cplx *amps, int n, const CompiledGate &g) {
    switch (g.kind) {
    case GateKind::Universal2Q: kernels::apply_2q(amps, n, g.qa, g.qb, g.m4); break;
    case GateKind::Rotation3:
    case GateKind::RotationY: kernels::apply_1q(amps, n, g.qa, g.m2); break;
    case GateKind::CZ: kernels::apply_cz(amps, n, g.qa, g.qb); break;
    case GateKind::CNOT: kernels::apply_cnot(amps, n, g.qa, g.qb); break;
    }
}

/// Gate for one slot, reading its parameters from `params`.
inline CompiledGate slot_gate(const GateSlot &s, std::span<const double> params) {
    CompiledGate g{s.kind, s.qa, s.qb, Gate4::Identity(), Gate2::Identity()};
    switch (s.kind) {
    case GateKind::Universal2Q:
        g.m4 = universal_two_qubit(params.subspan(static_cast<std::size_t>(s.param_offset), 15));
        break;
    case GateKind::Rotation3: {
        const auto o = static_cast<std::size_t>(s.param_offset);
        g.m2 = rotation_gate(params[o], params[o + 1], params[o + 2]);
        break;
    }
    case GateKind::RotationY:
        require_finite(params[static_cast<std::size_t>(s.param_offset)], "gate parameter");
        g.m2 = ry(params[static_cast<std::size_t>(s.param_offset)]);
        break;
    case GateKind::CZ: g.m4 = cz_gate(); break;
    case GateKind::CNOT: g.m4 = cnot_gate(); break;
    }
    return g;
}

/// A layout with concrete gate matrices, ready to apply.
class CompiledCircuit {
  public:
    CompiledCircuit(int n_qubits, std::vector<CompiledGate> gates)
        : n_{n_qubits}, gates_{std::move(gates)} {}

    [[nodiscard]] int n_qubits() const noexcept { return n_; }
    [[nodiscard]] const std::vector<CompiledGate> &gates() const noexcept { return gates_; }
    [[nodiscard]] std::vector<CompiledGate> &gates() noexcept { return gates_; }

    void apply(cplx *amps, std::size_t begin, std::size_t end) const {
        for (std::size_t k = begin; k < end; ++k) {
            apply_gate(amps, n_, gates_[k]);
        }
    }
    void apply(StateVector &s) const { apply(s.data(), 0, gates_.size()); }

  private:
    int n_;
    std::vector<CompiledGate> gates_;
};

inline void check_params(const CircuitLayout &layout, std::span<const double> params) {
    if (params.size() != static_cast<std::size_t>(layout.param_count())) {
        throw std::invalid_argument("parameter vector has length " + std::to_string(params.size()) +
                                    ", layout expects " + std::to_string(layout.param_count()));
    }
}

inline std::span<const double> as_span(const ParameterVector &v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

inline CompiledCircuit compile(const CircuitLayout &layout, std::span<const double> params) {
    check_params(layout, params);
    std::vector<CompiledGate> gates;
    gates.reserve(layout.slots().size());
    for (const auto &s : layout.slots()) {
        // Slots sharing a parameter block (brickwall-ti) share the matrix.
        if (!gates.empty() && s.param_offset >= 0 && s.kind == gates.back().kind) {
            const auto &prev = layout.slots()[gates.size() - 1];
            if (prev.param_offset == s.param_offset) {
                CompiledGate g = gates.back();
                g.qa = s.qa;
                g.qb = s.qb;
                gates.push_back(g);
                continue;
            }
        }
        gates.push_back(slot_gate(s, params));
    }
    return CompiledCircuit(layout.n_qubits(), std::move(gates));
}

/// Circuit with Haar-random gates in every parameterized slot: universal
/// slots get Haar U(4) samples, Rotation3 slots Haar U(2), RotationY slots a
/// uniform angle. Slots sharing a parameter block share the sample.
inline CompiledCircuit compile_random(const CircuitLayout &layout, CounterRng &rng) {
    std::vector<CompiledGate> gates;
    gates.reserve(layout.slots().size());
    for (std::size_t k = 0; k < layout.slots().size(); ++k) {
        const auto &s = layout.slots()[k];
        if (k > 0 && s.param_offset >= 0 && layout.slots()[k - 1].param_offset == s.param_offset) {
            CompiledGate g = gates.back();
            g.qa = s.qa;
            g.qb = s.qb;
            gates.push_back(g);
            continue;
        }
        CompiledGate g{s.kind, s.qa, s.qb, Gate4::Identity(), Gate2::Identity()};
        switch (s.kind) {
        case GateKind::Universal2Q: g.m4 = haar_gate4(rng); break;
        case GateKind::Rotation3: g.m2 = haar_gate2(rng); break;
        case GateKind::RotationY: g.m2 = ry(2 * std::numbers::pi * rng.uniform()); break;
        case GateKind::CZ: g.m4 = cz_gate(); break;
        case GateKind::CNOT: g.m4 = cnot_gate(); break;
        }
        gates.push_back(g);
    }
    return CompiledCircuit(layout.n_qubits(), std::move(gates));
}

inline StateVector apply_circuit(const CircuitLayout &layout, std::span<const double> params,
                                 StateVector input) {
    if (input.n_qubits() != layout.n_qubits()) {
        throw std::invalid_argument("input state has " + std::to_string(input.n_qubits()) +
                                    " qubits, layout has " + std::to_string(layout.n_qubits()));
    }
    compile(layout, params).apply(input);
    if (std::abs(input.norm() - 1.0) > kCircuitTol) {
        throw std::runtime_error("circuit application lost normalization");
    }
    return input;
}

inline StateVector apply_circuit(const CircuitLayout &layout, const ParameterVector &params,
                                 StateVector input) {
    return apply_circuit(layout, as_span(params), std::move(input));
}

/// Uniform [0, 2pi) initialization, one draw per parameter in index order.
inline ParameterVector random_parameters(const CircuitLayout &layout, CounterRng &rng) {
    ParameterVector p(layout.param_count());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        p[i] = 2 * std::numbers::pi * rng.uniform();
    }
    return p;
}

/// Parameters making every parameterized gate the identity (up to phase).
inline ParameterVector identity_parameters(const CircuitLayout &layout) {
    ParameterVector p = ParameterVector::Zero(layout.param_count());
    const auto id = universal_identity_parameters();
    for (const auto &s : layout.slots()) {
        if (s.kind == GateKind::Universal2Q) {
            for (int i = 0; i < kUniversalParams; ++i) {
                p[s.param_offset + i] = id[static_cast<std::size_t>(i)];
            }
        }
    }
    return p;
}

/**
 * Embeds trained parameters of `from` into the deeper layout `to`.
 *
 * Requires the layers of `from` to be a prefix of the layers of `to`; the
 * extra gates are set to the identity so the embedded circuit implements
 * the same unitary (up to phase). Returns nullopt when the layouts are not
 * prefix-compatible.
 */
inline std::optional<ParameterVector> embed_parameters(const CircuitLayout &from,
                                                       const ParameterVector &params,
                                                       const CircuitLayout &to) {
    if (from.n_qubits() != to.n_qubits() || from.layers().size() > to.layers().size() ||
        params.size() != from.param_count()) {
        return std::nullopt;
    }
    for (std::size_t l = 0; l < from.layers().size(); ++l) {
        if (from.layers()[l] != to.layers()[l]) {
            return std::nullopt;
        }
    }
    for (std::size_t l = from.layers().size(); l < to.layers().size(); ++l) {
        for (const auto &s : to.layers()[l]) {
            if (s.kind != GateKind::Universal2Q) {
                return std::nullopt;
            }
        }
    }
    ParameterVector out = identity_parameters(to);
    out.head(from.param_count()) = params;
    return out;
}

} // namespace mlevqc
