/*
 *  optimizer.cpp
 *  Gradient-descent loop with early exaggeration, momentum schedule and
 *  adaptive gains.
 */
#include "bhsne/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include "bhsne/error.hpp"
#include "bhsne/metrics.hpp"
#include "bhsne/rng.hpp"

namespace bhsne {

namespace {

constexpr std::size_t kExactCostLimit = 10000;

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

double l2_norm(const Matrix& m) {
    double s = 0.0;
    for (const double v : m.values()) s += v * v;
    return std::sqrt(s);
}

void check_finite(const GradientField& g, int iteration) {
    for (const double v : g.grad.values()) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite gradient at iteration " + std::to_string(iteration));
        }
    }
}

bool is_checkpoint(int iter, const RunConfig& cfg) {
    return iter == 0 || iter == cfg.iterations - 1 ||
           (iter + 1) % cfg.cost_check_interval == 0;
}

void report_progress(const IterationRecord& rec) {
    std::cerr << "iteration " << rec.iteration + 1 << ": cost " << *rec.cost << " ("
              << rec.seconds << " s)\n";
}

double checkpoint_cost(const SparseAffinity& p, const Matrix& y, const RunConfig& cfg,
                       double p_scale) {
    if (p.n <= kExactCostLimit) return kl_cost(p, y, p_scale, cfg.threads);
    const SpaceTree tree(y);
    const double param = cfg.algorithm == Algorithm::DualTree ? cfg.rho : cfg.theta;
    return approx_kl_cost(p, y, tree, param, cfg.condition, p_scale, cfg.threads);
}

}  // namespace

Matrix initialize_embedding(std::size_t n, int dims, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("initialize_embedding: need at least two points");
    if (dims != 2 && dims != 3) {
        throw std::invalid_argument("initialize_embedding: dims must be 2 or 3");
    }
    Matrix y(n, static_cast<std::size_t>(dims));
    Rng rng(seed);
    for (auto& v : y.values()) v = rng.gaussian() * 1e-2;  // variance 1e-4
    return y;
}

void step(OptimizerState& state, const GradientField& gradient, const RunConfig& cfg) {
    if (gradient.grad.rows() != state.y.rows() || gradient.grad.cols() != state.y.cols()) {
        throw std::invalid_argument("step: gradient shape mismatch");
    }
    check_finite(gradient, state.iteration);

    const double momentum = state.iteration < cfg.momentum_switch_iter ? cfg.momentum_early
                                                                       : cfg.momentum_late;
    const std::size_t total = state.y.size();
    for (std::size_t e = 0; e < total; ++e) {
        const double g = gradient.grad.values()[e];
        double& gain = state.gains.values()[e];
        double& v = state.velocity.values()[e];
        gain = sign_of(g) != sign_of(v) ? gain + 0.2 : gain * 0.8;
        if (gain < kMinGain) gain = kMinGain;
        v = momentum * v - cfg.eta * gain * g;
        state.y.values()[e] += v;
    }
    ++state.iteration;
}

RunResult run(const SparseAffinity& p_in, const RunConfig& cfg,
              const IterationObserver& observer) {
    cfg.validate();
    const std::size_t n = p_in.n;
    const auto s = static_cast<std::size_t>(cfg.output_dims);

    SparseAffinity p = p_in;
    const bool exaggerate_phase = cfg.exaggeration_iters > 0 && cfg.iterations > 0;
    if (exaggerate_phase) exaggerate(p, cfg.exaggeration);
    double p_scale = exaggerate_phase ? 1.0 / cfg.exaggeration : 1.0;

    OptimizerState state;
    state.y = initialize_embedding(n, cfg.output_dims, cfg.seed);
    state.velocity = Matrix(n, s, 0.0);
    state.gains = Matrix(n, s, 1.0);

    RunResult out;
    out.history.reserve(static_cast<std::size_t>(cfg.iterations));
    const auto start = std::chrono::steady_clock::now();

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        if (exaggerate_phase && iter == cfg.exaggeration_iters) {
            unexaggerate(p, cfg.exaggeration);
            p_scale = 1.0;
        }
        const GradientField gradient = compute_gradient(p, state.y, cfg);
        step(state, gradient, cfg);

        IterationRecord rec;
        rec.iteration = iter;
        rec.gradient_norm = l2_norm(gradient.grad);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (is_checkpoint(iter, cfg)) {
            rec.cost = checkpoint_cost(p, state.y, cfg, p_scale);
            if (cfg.verbose) report_progress(rec);
        }
        out.history.push_back(std::move(rec));
        if (observer) observer(state, p);
    }

    out.embedding = std::move(state.y);
    return out;
}

RunResult run(const Matrix& dense_p, const RunConfig& cfg) {
    cfg.validate();
    if (cfg.algorithm != Algorithm::Exact) {
        throw std::invalid_argument("run: a dense P supports the exact algorithm only");
    }
    const std::size_t n = dense_p.rows();
    const auto s = static_cast<std::size_t>(cfg.output_dims);

    Matrix p = dense_p;
    const bool exaggerate_phase = cfg.exaggeration_iters > 0 && cfg.iterations > 0;
    if (exaggerate_phase) {
        for (auto& v : p.values()) v *= cfg.exaggeration;
    }
    double p_scale = exaggerate_phase ? 1.0 / cfg.exaggeration : 1.0;

    OptimizerState state;
    state.y = initialize_embedding(n, cfg.output_dims, cfg.seed);
    state.velocity = Matrix(n, s, 0.0);
    state.gains = Matrix(n, s, 1.0);

    RunResult out;
    out.history.reserve(static_cast<std::size_t>(cfg.iterations));
    const auto start = std::chrono::steady_clock::now();

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        if (exaggerate_phase && iter == cfg.exaggeration_iters) {
            for (auto& v : p.values()) v /= cfg.exaggeration;
            p_scale = 1.0;
        }
        const GradientField gradient = exact_gradient(p, state.y, cfg.threads);
        step(state, gradient, cfg);

        IterationRecord rec;
        rec.iteration = iter;
        rec.gradient_norm = l2_norm(gradient.grad);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (is_checkpoint(iter, cfg)) {
            rec.cost = kl_cost(p, state.y, p_scale, cfg.threads);
            if (cfg.verbose) report_progress(rec);
        }
        out.history.push_back(std::move(rec));
    }

    out.embedding = std::move(state.y);
    return out;
}

}  // namespace bhsne
