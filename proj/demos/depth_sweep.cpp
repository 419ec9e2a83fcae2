// Trains brickwall circuits of increasing depth to discriminate Haar-random
// state pairs and prints how the trained error approaches the Helstrom bound.
//
//   depth_sweep [n=4] [pairs=4] [max_depth=4]

#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "mlevqc/mlevqc.hpp"

int main(int argc, char **argv) {
    using namespace mlevqc;
    const int n = argc > 1 ? std::atoi(argv[1]) : 4;
    const std::size_t pairs = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 4;
    const int max_d = argc > 3 ? std::atoi(argv[3]) : 4;

    try {
        EnsembleSpec spec;
        spec.n_qubits = n;
        spec.seed = 2024;
        std::vector<DiscriminationTask> tasks;
        for (std::size_t p = 0; p < pairs; ++p) {
            tasks.emplace_back(sample_state(spec, 2 * p), sample_state(spec, 2 * p + 1));
        }
        OptimizerConfig cfg;
        cfg.restarts = 4;
        std::vector<int> depths(static_cast<std::size_t>(max_d) + 1);
        std::iota(depths.begin(), depths.end(), 0);

        std::printf("%3s %4s %7s %12s %12s %12s\n", "D", "D*", "params", "<P_E>", "<C_dis>", "<P_H>");
        depth_sweep(tasks, Architecture::BrickwallOpen, depths, cfg, 7, default_workers(),
                    [](const DepthPoint &pt) {
                        std::printf("%3d %4d %7d %12.4e %12.4e %12.4e\n", pt.depth, pt.entangler_layers,
                                    pt.param_count, pt.error.mean, pt.cost.mean, pt.helstrom.mean);
                        std::fflush(stdout);
                    });
    } catch (const std::exception &e) {
        std::fprintf(stderr, "depth_sweep: %s\n", e.what());
        return 1;
    }
    return 0;
}
