/*
 *  config.hpp
 *  Run configuration and its defaults.
 */
#pragma once

#include <cstdint>
#include <string>

namespace bhsne {

enum class Algorithm { Exact, BarnesHut, DualTree };

// Form of the cell-summary condition. Standard compares cell size against
// distance (size/distance < threshold); PaperLiteral compares squared
// distance against cell size (distance^2/size < threshold).
enum class SummaryCondition { Standard, PaperLiteral };

struct RunConfig {
    double perplexity = 30.0;
    double theta = 0.5;
    double rho = 0.25;
    int iterations = 1000;
    double exaggeration = 12.0;
    int exaggeration_iters = 250;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    int momentum_switch_iter = 250;
    double eta = 200.0;
    int output_dims = 2;
    std::uint64_t seed = 0;
    Algorithm algorithm = Algorithm::BarnesHut;
    SummaryCondition condition = SummaryCondition::Standard;
    int pca_target = 50;
    int threads = 0;               // 0 = all hardware threads
    int cost_check_interval = 50;  // cost is recorded every this many iterations
    bool verbose = false;          // per-checkpoint progress lines on stderr

    // Throws std::invalid_argument on out-of-range values.
    void validate() const;

    // floor(3u), the neighborhood size used for the sparse affinities.
    int neighbor_count() const { return static_cast<int>(3.0 * perplexity); }
};

const char* to_string(Algorithm a);
const char* to_string(SummaryCondition c);
Algorithm algorithm_from_string(const std::string& s);        // throws std::invalid_argument
SummaryCondition condition_from_string(const std::string& s);

}  // namespace bhsne
