#include "bhsne/config.hpp"

#include <stdexcept>

namespace bhsne {

void RunConfig::validate() const {
    if (perplexity <= 0.0) throw std::invalid_argument("perplexity must be positive");
    if (theta < 0.0) throw std::invalid_argument("theta must be non-negative");
    if (rho < 0.0) throw std::invalid_argument("rho must be non-negative");
    if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
    if (exaggeration < 1.0) throw std::invalid_argument("exaggeration must be >= 1");
    if (exaggeration_iters < 0) throw std::invalid_argument("exaggeration_iters must be non-negative");
    if (momentum_early < 0.0 || momentum_early >= 1.0 || momentum_late < 0.0 || momentum_late >= 1.0) {
        throw std::invalid_argument("momentum weights must lie in [0, 1)");
    }
    if (eta <= 0.0) throw std::invalid_argument("step size eta must be positive");
    if (output_dims != 2 && output_dims != 3) throw std::invalid_argument("output_dims must be 2 or 3");
    if (pca_target < 0) throw std::invalid_argument("pca_target must be non-negative");
    if (cost_check_interval < 1) throw std::invalid_argument("cost_check_interval must be positive");
}

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Exact: return "exact";
        case Algorithm::BarnesHut: return "bh";
        case Algorithm::DualTree: return "dual";
    }
    return "?";
}

const char* to_string(SummaryCondition c) {
    return c == SummaryCondition::Standard ? "standard" : "paper-literal";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "exact") return Algorithm::Exact;
    if (s == "bh") return Algorithm::BarnesHut;
    if (s == "dual") return Algorithm::DualTree;
    throw std::invalid_argument("unknown algorithm: " + s);
}

SummaryCondition condition_from_string(const std::string& s) {
    if (s == "standard") return SummaryCondition::Standard;
    if (s == "paper-literal") return SummaryCondition::PaperLiteral;
    throw std::invalid_argument("unknown condition: " + s);
}

}  // namespace bhsne
