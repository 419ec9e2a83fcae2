#include <gtest/gtest.h>

#include <set>

#include "mlevqc/ansatz.hpp"
#include "mlevqc/ansatz_json.hpp"
#include "mlevqc/scramble.hpp"
#include "oracles/dense.hpp"

using namespace mlevqc;

namespace {

/// Dense unitary of a compiled circuit, column by column.
oracle::Mat unitary_of(const CompiledCircuit &c) {
    const int n = c.n_qubits();
    const Eigen::Index d = Eigen::Index{1} << n;
    oracle::Mat u(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        auto s = StateVector::basis(n, static_cast<std::uint64_t>(j));
        c.apply(s);
        u.col(j) = s.amplitudes();
    }
    return u;
}

/// Dense unitary of a layout built from the oracle's own gate matrices.
oracle::Mat oracle_unitary(const CircuitLayout &layout, const ParameterVector &p) {
    const int n = layout.n_qubits();
    oracle::Mat u = oracle::eye(Eigen::Index{1} << n);
    for (const auto &s : layout.slots()) {
        oracle::Mat g;
        switch (s.kind) {
        case GateKind::Universal2Q: g = oracle::embed_2q(n, s.qa, s.qb, oracle::universal(p.data() + s.param_offset)); break;
        case GateKind::Rotation3: {
            const double *o = p.data() + s.param_offset;
            g = oracle::embed_1q(n, s.qa, oracle::rot(o[0], o[1], o[2]));
            break;
        }
        case GateKind::RotationY: g = oracle::embed_1q(n, s.qa, oracle::ry(p[s.param_offset])); break;
        case GateKind::CZ: g = oracle::embed_2q(n, s.qa, s.qb, oracle::cz2()); break;
        case GateKind::CNOT: g = oracle::embed_2q(n, s.qa, s.qb, oracle::cnot2(0, 1)); break;
        }
        u = g * u;
    }
    return u;
}

int open_brick_gates(int n, int d) { return (d + 1) / 2 * (n / 2) + d / 2 * (n / 2 - 1); }

} // namespace

TEST(Template, MatchesOracleProduct) {
    CounterRng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<double, 15> p{};
        for (auto &v : p) {
            v = (2 * rng.uniform() - 1) * std::numbers::pi * 2;
        }
        const Gate4 g = universal_two_qubit(p);
        EXPECT_LT((oracle::Mat(g) - oracle::universal(p.data())).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((g.adjoint() * g - Gate4::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Template, ZeroParametersGiveSwap) {
    const std::array<double, 15> zero{};
    oracle::Mat swap = oracle::Mat::Zero(4, 4);
    swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1.0;
    EXPECT_LT(oracle::phase_distance(universal_two_qubit(zero), swap), 1e-12);
    EXPECT_LT(oracle::phase_distance(oracle::universal(zero.data()), swap), 1e-12);
}

TEST(Template, IdentityParameters) {
    const auto p = universal_identity_parameters();
    EXPECT_LT(oracle::phase_distance(universal_two_qubit(p), oracle::eye(4)), 1e-12);
}

TEST(Template, ReachesRandomTargets) {
    // Fit the template to Haar targets by descending |tr(V^dag U)|.
    // A cheap surrogate for universality: random restarts reach fidelity 1.
    CounterRng rng(4);
    const Gate4 target = haar_gate4(rng);
    double best = 0.0;
    for (int r = 0; r < 12 && best < 1 - 1e-8; ++r) {
        std::array<double, 15> p{};
        for (auto &v : p) {
            v = rng.uniform() * 2 * std::numbers::pi;
        }
        auto fid = [&](const std::array<double, 15> &x) {
            return std::abs((target.adjoint() * universal_two_qubit(x)).trace()) / 4.0;
        };
        double f = fid(p);
        double step = 0.5;
        for (int it = 0; it < 6000 && step > 1e-10; ++it) {
            bool improved = false;
            for (std::size_t k = 0; k < 15; ++k) {
                for (double sgn : {1.0, -1.0}) {
                    auto q = p;
                    q[k] += sgn * step;
                    const double fq = fid(q);
                    if (fq > f) {
                        p = q;
                        f = fq;
                        improved = true;
                    }
                }
            }
            if (!improved) {
                step /= 2;
            }
        }
        best = std::max(best, f);
    }
    EXPECT_GT(best, 1 - 1e-6);
}

TEST(Layouts, ParameterCountsClosedForm) {
    for (int n : {2, 4, 6, 8}) {
        for (int d = 1; d <= 6; ++d) {
            EXPECT_EQ(build_layout(Architecture::BrickwallOpen, n, d).param_count(), 15 * open_brick_gates(n, d));
            EXPECT_EQ(build_layout(Architecture::SVQC, n, d).param_count(), 3 * n * (d + 1));
            EXPECT_EQ(build_layout(Architecture::RealSVQC, n, d).param_count(), n * (d + 1));
            EXPECT_EQ(build_layout(Architecture::SVQC, n, d).entangler_layers(), d);
            if (n >= 4) {
                EXPECT_EQ(build_layout(Architecture::BrickwallPeriodic, n, d).param_count(), 15 * d * n / 2);
                EXPECT_EQ(build_layout(Architecture::BrickwallTI, n, d).param_count(), 15 * d);
                EXPECT_EQ(build_layout(Architecture::Prism, n, d).param_count(), 15 * (open_brick_gates(n, d) + d));
                int poly = 0;
                for (int l = 1; l <= d; ++l) {
                    poly += ((l - 1) % (n / 2)) + 1 == n / 2 ? n / 2 : n;
                }
                EXPECT_EQ(build_layout(Architecture::Polygon, n, d).param_count(), 15 * poly);
            }
        }
    }
    for (int n : {2, 4, 8}) {
        for (int d = 1; d <= ceil_log2(n); ++d) {
            int gates = 0;
            for (int l = 1; l <= d; ++l) {
                gates += n >> l;
            }
            EXPECT_EQ(build_layout(Architecture::TTN, n, d).param_count(), 15 * gates);
            EXPECT_EQ(build_layout(Architecture::TTN, n, d).entangler_layers(), 3 * d);
        }
    }
    EXPECT_EQ(build_layout(Architecture::QCNN, 8, 3).count(GateKind::Universal2Q), 18u);
    EXPECT_EQ(build_layout(Architecture::MERA, 8, 3).count(GateKind::Universal2Q), 11u);
    EXPECT_EQ(build_layout(Architecture::BrickwallOpen, 6, 3).entangler_layers(), 9);
}

TEST(Layouts, DepthCapsAndValidation) {
    EXPECT_EQ(max_depth(Architecture::TTN, 8), 3);
    EXPECT_EQ(max_depth(Architecture::QCNN, 6), 3);
    EXPECT_FALSE(max_depth(Architecture::BrickwallOpen, 8).has_value());
    EXPECT_THROW(build_layout(Architecture::TTN, 8, 4), capacity_error);
    try {
        build_layout(Architecture::TTN, 8, 9);
        FAIL();
    } catch (const capacity_error &e) {
        EXPECT_NE(std::string(e.what()).find("at most 3"), std::string::npos);
    }
    EXPECT_THROW(build_layout(Architecture::TTN, 6, 1), std::invalid_argument);
    EXPECT_THROW(build_layout(Architecture::BrickwallOpen, 5, 1), std::invalid_argument);
    EXPECT_THROW(build_layout(Architecture::BrickwallOpen, 4, -1), std::invalid_argument);
    try {
        parse_architecture("hexagon");
        FAIL();
    } catch (const std::invalid_argument &e) {
        EXPECT_NE(std::string(e.what()).find("brickwall-open"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("real-svqc"), std::string::npos);
    }
    EXPECT_EQ(parse_architecture("brickwall"), Architecture::BrickwallOpen);
    for (auto a : kAllArchitectures) {
        EXPECT_EQ(parse_architecture(name(a)), a);
    }
}

TEST(Layouts, NoQubitTwicePerLayer) {
    // Prism and polygon layers chain overlapping gates and are exempt.
    for (auto a : kAllArchitectures) {
        if (a == Architecture::Prism || a == Architecture::Polygon) {
            continue;
        }
        const int n = 8;
        const int d = max_depth(a, n).value_or(5);
        const auto layout = build_layout(a, n, d);
        for (const auto &layer : layout.layers()) {
            std::set<int> used;
            for (const auto &s : layer) {
                EXPECT_TRUE(used.insert(s.qa).second) << name(a);
                if (is_two_qubit(s.kind)) {
                    EXPECT_TRUE(used.insert(s.qb).second) << name(a);
                }
            }
        }
    }
}

TEST(Layouts, CompiledCircuitMatchesDenseOracle) {
    CounterRng rng(21);
    for (auto a : kAllArchitectures) {
        const int n = 4;
        const int d = std::min(2, max_depth(a, n).value_or(2));
        const auto layout = build_layout(a, n, d);
        const auto p = random_parameters(layout, rng);
        const auto u = unitary_of(compile(layout, as_span(p)));
        EXPECT_LT((u - oracle_unitary(layout, p)).cwiseAbs().maxCoeff(), 1e-10) << name(a);
    }
}

TEST(Layouts, IdentityParametersGiveIdentity) {
    for (auto a : {Architecture::BrickwallOpen, Architecture::BrickwallTI, Architecture::QCNN, Architecture::SVQC}) {
        const auto layout = build_layout(a, 4, 2);
        const auto u = unitary_of(compile(layout, as_span(identity_parameters(layout))));
        // Unparameterized CZ gates remain.
        oracle::Mat want = oracle::eye(16);
        for (const auto &s : layout.slots()) {
            if (s.kind == GateKind::CZ) {
                want = oracle::embed_2q(4, s.qa, s.qb, oracle::cz2()) * want;
            }
        }
        EXPECT_LT(oracle::phase_distance(u, want), 1e-10) << name(a);
    }
}

TEST(Layouts, TranslationInvariantCommutesWithTwoSiteShift) {
    // One shared gate per layer: the alternating brickwall is invariant under
    // shifts by two sites (a one-site shift swaps even and odd layers).
    CounterRng rng(8);
    const int n = 6;
    const auto layout = build_layout(Architecture::BrickwallTI, n, 3);
    const auto u = unitary_of(compile(layout, as_span(random_parameters(layout, rng))));
    const oracle::Mat t = oracle::cyclic_shift(n);
    const oracle::Mat t2 = t * t;
    EXPECT_LT((u * t2 - t2 * u).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT((u * t - t * u).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Layouts, LightConeOfEvolvedZ) {
    CounterRng rng(13);
    const int n = 8;
    for (int d = 1; d <= 3; ++d) {
        const auto layout = build_layout(Architecture::BrickwallOpen, n, d);
        const auto p = random_parameters(layout, rng);
        const int q = 3;
        const auto circuit = compile(layout, as_span(p));
        const auto dec = pauli_decompose(evolve_operator(circuit, pauli_z(n, q)), n);
        for (std::size_t i = 0; i < dec.coeffs.size(); ++i) {
            if (std::abs(dec[i]) < 1e-12) {
                continue;
            }
            const auto label = pauli_label(i, n);
            for (int k = 0; k < n; ++k) {
                if (std::abs(k - q) > d) {
                    EXPECT_EQ(label[static_cast<std::size_t>(k)], 'I') << label << " D=" << d;
                }
            }
        }
    }
}

TEST(Layouts, EmbedParametersPreservesUnitary) {
    CounterRng rng(2);
    for (auto a : {Architecture::BrickwallOpen, Architecture::Prism, Architecture::TTN}) {
        const auto small = build_layout(a, 4, 1);
        const auto big = build_layout(a, 4, 2);
        const auto p = random_parameters(small, rng);
        const auto q = embed_parameters(small, p, big);
        ASSERT_TRUE(q.has_value()) << name(a);
        const auto u = unitary_of(compile(small, as_span(p)));
        const auto v = unitary_of(compile(big, as_span(*q)));
        EXPECT_LT(oracle::phase_distance(u, v), 1e-10) << name(a);
    }
    // sVQC ends in a rotation layer, so depth 1 is not a layer prefix of depth 2.
    const auto s = build_layout(Architecture::SVQC, 4, 1);
    EXPECT_FALSE(embed_parameters(s, random_parameters(s, rng), build_layout(Architecture::SVQC, 4, 2)).has_value());
}

TEST(Layouts, JsonRoundTrip) {
    for (auto a : kAllArchitectures) {
        const auto layout = build_layout(a, 8, std::min(2, max_depth(a, 8).value_or(2)));
        const auto back = layout_from_json(nlohmann::json::parse(to_json(layout).dump()));
        EXPECT_TRUE(back == layout) << name(a);
    }
    auto j = to_json(build_layout(Architecture::BrickwallOpen, 4, 1));
    j["layers"][0][0]["qubits"] = {0, 9};
    EXPECT_THROW(layout_from_json(j), std::exception);
}

TEST(Layouts, ParameterChecks) {
    const auto layout = build_layout(Architecture::BrickwallOpen, 4, 1);
    ParameterVector short_p = ParameterVector::Zero(3);
    EXPECT_THROW(compile(layout, as_span(short_p)), std::invalid_argument);
    ParameterVector nan_p = ParameterVector::Zero(layout.param_count());
    nan_p[4] = std::nan("");
    EXPECT_THROW(compile(layout, as_span(nan_p)), std::invalid_argument);
    const auto d0 = layout_for_depth(Architecture::BrickwallOpen, 4, 0);
    EXPECT_EQ(d0.param_count(), 0);
    EXPECT_EQ(d0.entangler_layers(), 0);
}
