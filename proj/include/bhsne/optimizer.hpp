/*
 *  optimizer.hpp
 *  The learning loop: Gaussian initialization, early exaggeration, momentum
 *  schedule, adaptive per-parameter gains, gradient descent.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "affinity.hpp"
#include "config.hpp"
#include "gradient.hpp"
#include "matrix.hpp"

namespace bhsne {

inline constexpr double kMinGain = 0.01;

// i.i.d. normal coordinates with mean 0 and variance 1e-4, deterministic per seed.
Matrix initialize_embedding(std::size_t n, int dims, std::uint64_t seed);

struct OptimizerState {
    Matrix y;
    Matrix velocity;
    Matrix gains;
    int iteration = 0;
};

struct IterationRecord {
    int iteration = 0;
    std::optional<double> cost;  // recorded every cost_check_interval iterations
    double gradient_norm = 0.0;
    double seconds = 0.0;  // elapsed since the start of the run
};

struct RunResult {
    Matrix embedding;
    std::vector<IterationRecord> history;
};

// One update: gains adapt per component (+0.2 on sign disagreement between
// gradient and velocity, x0.8 otherwise, floored at kMinGain), then
// velocity <- momentum * velocity - eta * gain * grad and y <- y + velocity.
// Momentum is momentum_early before momentum_switch_iter, momentum_late after.
// Throws NumericError on a non-finite gradient.
void step(OptimizerState& state, const GradientField& gradient, const RunConfig& cfg);

// Called after every iteration with the current state and the P values in
// use (exaggerated during the early phase).
using IterationObserver = std::function<void(const OptimizerState&, const SparseAffinity&)>;

// Full optimization: exaggerates P before iteration 0, removes the
// exaggeration at iteration exaggeration_iters, and dispatches the gradient
// per cfg.algorithm.
RunResult run(const SparseAffinity& p, const RunConfig& cfg,
              const IterationObserver& observer = {});

// Dense-P variant; supports Algorithm::Exact only.
RunResult run(const Matrix& dense_p, const RunConfig& cfg);

}  // namespace bhsne
