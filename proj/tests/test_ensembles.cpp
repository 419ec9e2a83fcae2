#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "mlevqc/ensembles.hpp"
#include "mlevqc/state_io.hpp"
#include "oracles/dense.hpp"

using namespace mlevqc;

TEST(Tfim, HamiltonianMatchesPauliStrings) {
    for (int n : {2, 3, 4}) {
        for (double g : {0.0, 0.7, 2.0}) {
            const oracle::Mat h = tfim_hamiltonian(n, g).cast<cplx>();
            EXPECT_LT((h - oracle::tfim(n, g)).cwiseAbs().maxCoeff(), 1e-14) << n << " " << g;
        }
    }
}

TEST(Tfim, GroundEnergyMatchesFreeFermions) {
    for (int n : {4, 6, 8}) {
        for (double g : {0.3, 1.0, 1.7, 10.0}) {
            EXPECT_NEAR(tfim_ground(n, g).e0, oracle::tfim_ground_energy(n, g), 1e-8) << n << " " << g;
        }
    }
}

TEST(Tfim, GroundStateIsEigenvector) {
    const auto s = tfim_ground(6, 1.3);
    const Eigen::VectorXcd v = s.ground.amplitudes();
    const Eigen::VectorXcd hv = tfim_hamiltonian(6, 1.3).cast<cplx>() * v;
    EXPECT_LT((hv - s.e0 * v).norm(), 1e-9);
    EXPECT_FALSE(s.degenerate);
    EXPECT_GT(s.e1 - s.e0, 0.0);
}

TEST(Tfim, ZeroFieldGivesSymmetricCatState) {
    const auto s = tfim_ground(6, 0.0);
    EXPECT_TRUE(s.degenerate);
    EXPECT_NEAR(s.e0, -6.0, 1e-12);
    EXPECT_NEAR(std::abs(s.ground[0]), 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(std::abs(s.ground[63]), 1 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(bipartite_entropy(s.ground, 3), 1.0, 1e-12);
}

TEST(Tfim, SignConventionAndLimits) {
    const auto s = tfim_ground(4, 0.8);
    for (std::size_t i = 0; i < s.ground.dim(); ++i) {
        if (std::abs(s.ground[i]) > 1e-12) {
            EXPECT_GT(s.ground[i].real(), 0.0);
            break;
        }
    }
    EXPECT_THROW(tfim_ground(kMaxTfimQubits + 1, 1.0), capacity_error);
    EXPECT_THROW(tfim_ground(1, 1.0), std::invalid_argument);
}

TEST(Tfim, EntropyLowerDeepInParamagnet) {
    EXPECT_LT(bipartite_entropy(tfim_ground(6, 10).ground, 3), bipartite_entropy(tfim_ground(6, 1).ground, 3));
}

TEST(Ensembles, ParseAndLabel) {
    EXPECT_EQ(parse_ensemble("haar").kind, EnsembleKind::Haar);
    const auto l = parse_ensemble("local:3");
    EXPECT_EQ(l.kind, EnsembleKind::LocalRandom);
    EXPECT_EQ(l.depth, 3);
    EXPECT_EQ(l.label(), "local:3");
    EXPECT_EQ(parse_ensemble("ti-local:2").kind, EnsembleKind::TILocalRandom);
    EXPECT_DOUBLE_EQ(parse_ensemble("tfim:1.5").field, 1.5);
    EXPECT_THROW(parse_ensemble("gaussian"), std::invalid_argument);
    EXPECT_THROW(parse_ensemble("local:x"), std::invalid_argument);
}

TEST(Ensembles, SamplesAreDeterministicAndDistinct) {
    for (const char *text : {"haar", "local:2", "ti-local:2"}) {
        auto spec = parse_ensemble(text);
        spec.n_qubits = 6;
        spec.seed = 99;
        const auto a = sample_state(spec, 3);
        const auto b = sample_state(spec, 3);
        const auto c = sample_state(spec, 4);
        EXPECT_EQ(a.amplitudes(), b.amplitudes()) << text;
        EXPECT_LT(overlap_sq(a, c), 0.9) << text;
        EXPECT_NEAR(a.norm(), 1.0, 1e-12);
    }
}

TEST(Ensembles, ShallowLocalStatesHaveBoundedEntanglement) {
    // Depth-1 open brickwall: gates on (0,1),(2,3),(4,5) only, so the
    // cut between qubits 1|2 carries no entanglement.
    EnsembleSpec spec;
    spec.kind = EnsembleKind::LocalRandom;
    spec.depth = 1;
    spec.n_qubits = 6;
    spec.seed = 5;
    EXPECT_NEAR(bipartite_entropy(sample_state(spec, 0), 2), 0.0, 1e-10);
    EXPECT_GT(bipartite_entropy(sample_state(spec, 0), 1), 1e-3);
}

TEST(Ensembles, TranslationInvariantStatesAreShiftSymmetric) {
    // Shared gates and a |0...0> input: shifting by two sites leaves the
    // state unchanged.
    EnsembleSpec spec;
    spec.kind = EnsembleKind::TILocalRandom;
    spec.depth = 3;
    spec.n_qubits = 6;
    spec.seed = 1;
    const auto s = sample_state(spec, 0);
    const oracle::Mat t = oracle::cyclic_shift(6);
    const oracle::Vec shifted = t * t * s.amplitudes();
    EXPECT_LT((shifted - s.amplitudes()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Ensembles, HaarMeanOverlap) {
    EnsembleSpec spec;
    spec.n_qubits = 5;
    spec.seed = 3;
    const auto m = mean_overlap(spec, 3000, 1);
    EXPECT_NEAR(m.mean, 1.0 / 32, 4 * m.std_err);
    EXPECT_EQ(m.count, 3000u);
}

TEST(Ensembles, PairOverlapsIndependentOfWorkers) {
    EnsembleSpec spec;
    spec.n_qubits = 4;
    spec.seed = 8;
    EXPECT_EQ(pair_overlaps(spec, 50, 1), pair_overlaps(spec, 50, 3));
}

TEST(Ensembles, MeanEstimate) {
    const auto e = estimate_mean({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_NEAR(e.std_err, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(StateIo, RoundTripIsExact) {
    EnsembleSpec spec = parse_ensemble("local:2");
    spec.n_qubits = 4;
    spec.seed = 12345;
    StateRecord rec{spec, 7, sample_state(spec, 7)};
    std::stringstream ss;
    write_state(ss, rec);
    EXPECT_EQ(ss.str().size(), 8u + 4 + 4 + 4 + 4 + 8 + 8 + 8 + 16u * 16);
    const auto back = read_state(ss);
    EXPECT_EQ(back.sample_index, 7u);
    EXPECT_EQ(back.spec.seed, 12345u);
    EXPECT_EQ(back.spec.depth, 2);
    EXPECT_EQ(back.state.amplitudes(), rec.state.amplitudes());
}

TEST(StateIo, RejectsCorruptInput) {
    std::stringstream bad("NOTMAGIC and some bytes");
    EXPECT_THROW(read_state(bad), std::runtime_error);
    EnsembleSpec spec;
    spec.n_qubits = 3;
    StateRecord rec{spec, 0, sample_state(spec, 0)};
    std::stringstream ss;
    write_state(ss, rec);
    std::string s = ss.str();
    s.resize(s.size() - 5);
    std::stringstream truncated(s);
    EXPECT_THROW(read_state(truncated), std::runtime_error);
}
