/*
 *  main.cpp
 *  Command-line driver: embed, bench-theta, bench-size, bench-dual.
 */
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bhsne/bhsne.hpp"

namespace {

using bhsne::Algorithm;
using bhsne::LabelVector;
using bhsne::Matrix;
using bhsne::RunConfig;

constexpr std::size_t kDefaultExactCap = 20000;

struct Options {
    std::string input;
    std::string format = "auto";  // csv, bin, or inferred from the extension
    std::string labels_path;
    std::string out = "embedding.csv";
    std::string algorithm = "bh";
    std::string condition = "standard";
    std::string bench_grid;
    RunConfig cfg;
    int repeats = 3;
    bool resume = false;
    bool force = false;
    std::size_t exact_cap = kDefaultExactCap;
};

void add_common_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--input", o.input, "input matrix (CSV or binary)")->required();
    cmd->add_option("--format", o.format, "input format: csv or bin (default: by extension)")
        ->check(CLI::IsMember({"auto", "csv", "bin"}));
    cmd->add_option("--labels", o.labels_path, "label file, one integer per line");
    cmd->add_option("--out", o.out, "output path");
    cmd->add_option("--perplexity", o.cfg.perplexity, "perplexity u");
    cmd->add_option("--theta", o.cfg.theta, "Barnes-Hut trade-off parameter");
    cmd->add_option("--rho", o.cfg.rho, "dual-tree trade-off parameter");
    cmd->add_option("--iters", o.cfg.iterations, "gradient-descent iterations");
    cmd->add_option("--alpha", o.cfg.exaggeration, "early exaggeration factor");
    cmd->add_option("--exaggeration-iters", o.cfg.exaggeration_iters,
                    "iterations with exaggerated P");
    cmd->add_option("--momentum-switch", o.cfg.momentum_switch_iter,
                    "iteration at which momentum switches");
    cmd->add_option("--eta", o.cfg.eta, "step size");
    cmd->add_option("--dims", o.cfg.output_dims, "embedding dimensionality")
        ->check(CLI::IsMember({2, 3}));
    cmd->add_option("--seed", o.cfg.seed, "random seed");
    cmd->add_option("--algorithm", o.algorithm, "gradient algorithm")
        ->check(CLI::IsMember({"exact", "bh", "dual"}));
    cmd->add_option("--condition", o.condition, "summary condition form")
        ->check(CLI::IsMember({"standard", "paper-literal"}));
    cmd->add_option("--pca", o.cfg.pca_target, "PCA target dimensionality (0 disables)");
    cmd->add_option("--threads", o.cfg.threads, "worker threads (0 = all)");
    cmd->add_option("--repeats", o.repeats, "timing repeats per benchmark row");
    cmd->add_flag("--resume", o.resume, "skip benchmark rows already in the output CSV");
    cmd->add_flag("--force", o.force, "allow the exact algorithm above the size guard");
    cmd->add_option("--exact-cap", o.exact_cap, "largest n the exact algorithm runs at");
}

struct Input {
    Matrix data;
    std::optional<LabelVector> labels;
};

Input load_input(const Options& o) {
    std::string format = o.format;
    if (format == "auto") {
        const auto ext = std::filesystem::path(o.input).extension().string();
        format = (ext == ".bin" || ext == ".bhsne" || ext == ".dat") ? "bin" : "csv";
    }
    Input in;
    if (format == "bin") {
        in.data = bhsne::load_binary(o.input);
    } else {
        in.data = bhsne::load_csv(o.input).matrix;
    }
    if (!o.labels_path.empty()) {
        LabelVector labels = bhsne::load_labels(o.labels_path);
        if (labels.size() != in.data.rows()) {
            throw bhsne::DataError("label count " + std::to_string(labels.size()) +
                                   " does not match matrix rows " +
                                   std::to_string(in.data.rows()));
        }
        in.labels = std::move(labels);
    }
    return in;
}

RunConfig make_config(const Options& o) {
    RunConfig cfg = o.cfg;
    cfg.algorithm = bhsne::algorithm_from_string(o.algorithm);
    cfg.condition = bhsne::condition_from_string(o.condition);
    cfg.validate();
    return cfg;
}

struct PipelineOutcome {
    Matrix embedding;
    double seconds = 0.0;
    double final_kl = 0.0;
    double knn_err = -1.0;
};

// PCA -> kNN graph -> sparse P -> optimization. Timing covers exactly this
// span; file I/O stays outside.
PipelineOutcome run_pipeline(const Matrix& data, const std::optional<LabelVector>& labels,
                             const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();

    const Matrix* working = &data;
    Matrix reduced;
    if (cfg.pca_target > 0 && data.cols() > static_cast<std::size_t>(cfg.pca_target)) {
        reduced = bhsne::pca_reduce(data, static_cast<std::size_t>(cfg.pca_target), cfg.threads)
                      .reduced;
        working = &reduced;
    }

    const auto k = static_cast<std::size_t>(cfg.neighbor_count());
    const auto graph = bhsne::knn_graph(*working, k, cfg.threads);
    const auto p = bhsne::sparse_p(graph, cfg.perplexity, cfg.threads);
    auto result = bhsne::run(p, cfg);

    PipelineOutcome out;
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.embedding = std::move(result.embedding);

    if (p.n <= 10000) {
        out.final_kl = bhsne::kl_cost(p, out.embedding, 1.0, cfg.threads);
    } else {
        const bhsne::SpaceTree tree(out.embedding);
        const double param = cfg.algorithm == Algorithm::DualTree ? cfg.rho : cfg.theta;
        out.final_kl =
            bhsne::approx_kl_cost(p, out.embedding, tree, param, cfg.condition, 1.0, cfg.threads);
    }
    if (labels) out.knn_err = bhsne::knn_error(out.embedding, *labels, cfg.threads);
    return out;
}

double algorithm_param(const RunConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::Exact: return 0.0;
        case Algorithm::BarnesHut: return cfg.theta;
        case Algorithm::DualTree: return cfg.rho;
    }
    return 0.0;
}

int cmd_embed(const Options& o) {
    RunConfig cfg = make_config(o);
    const Input in = load_input(o);

    if (cfg.algorithm == Algorithm::Exact && in.data.rows() > o.exact_cap && !o.force) {
        std::cerr << "embed: exact algorithm on n=" << in.data.rows() << " exceeds "
                  << o.exact_cap << "; pass --force to run anyway\n";
        return 1;
    }

    cfg.verbose = true;
    const PipelineOutcome outcome = run_pipeline(in.data, in.labels, cfg);
    bhsne::write_embedding(o.out, outcome.embedding, in.labels ? &*in.labels : nullptr);

    if (in.labels) {
        bhsne::EvalReport report;
        report.algorithm = bhsne::to_string(cfg.algorithm);
        report.n = in.data.rows();
        report.param = algorithm_param(cfg);
        report.seconds = outcome.seconds;
        report.knn_err = outcome.knn_err;
        report.final_kl = outcome.final_kl;
        report.seed = cfg.seed;
        std::cout << bhsne::EvalReport::csv_header() << "\n" << report.csv_row() << "\n";
    }
    return 0;
}

// ---- benchmark harness ----------------------------------------------------

struct BenchRecord {
    std::string algorithm;
    std::size_t n = 0;
    double param = 0.0;
    double seconds = 0.0;
    double knn_err = -1.0;
    double final_kl = 0.0;
    std::uint64_t seed = 0;
};

std::string format_record(const BenchRecord& r) {
    bhsne::EvalReport rep;
    rep.algorithm = r.algorithm;
    rep.n = r.n;
    rep.param = r.param;
    rep.seconds = r.seconds;
    rep.knn_err = r.knn_err;
    rep.final_kl = r.final_kl;
    rep.seed = r.seed;
    return rep.csv_row();
}

// Key fields of rows already present, for --resume.
struct DoneKey {
    std::string algorithm;
    std::size_t n;
    double param;
    std::uint64_t seed;
};

std::vector<DoneKey> load_done(const std::string& path) {
    std::vector<DoneKey> done;
    std::ifstream in(path);
    if (!in) return done;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue;  // header
        }
        std::stringstream ss(line);
        std::string field;
        DoneKey key;
        if (!std::getline(ss, key.algorithm, ',')) continue;
        if (!std::getline(ss, field, ',')) continue;
        key.n = std::strtoull(field.c_str(), nullptr, 10);
        if (!std::getline(ss, field, ',')) continue;
        key.param = std::strtod(field.c_str(), nullptr);
        // skip seconds, knn_error, final_kl
        for (int skip = 0; skip < 3; ++skip) std::getline(ss, field, ',');
        if (!std::getline(ss, field, ',')) continue;
        key.seed = std::strtoull(field.c_str(), nullptr, 10);
        done.push_back(key);
    }
    return done;
}

bool already_done(const std::vector<DoneKey>& done, const std::string& algorithm,
                  std::size_t n, double param, std::uint64_t seed) {
    for (const auto& k : done) {
        if (k.algorithm == algorithm && k.n == n && k.seed == seed &&
            std::fabs(k.param - param) <= 1e-12) {
            return true;
        }
    }
    return false;
}

class BenchWriter {
public:
    BenchWriter(const std::string& path, bool resume) : path_(path) {
        if (resume) done_ = load_done(path);
        const bool fresh = !std::filesystem::exists(path) ||
                           std::filesystem::file_size(path) == 0;
        out_.open(path, std::ios::app);
        if (!out_) throw bhsne::DataError("cannot open " + path + " for writing");
        if (fresh) out_ << bhsne::EvalReport::csv_header() << "\n";
    }

    bool skip(const std::string& algorithm, std::size_t n, double param,
              std::uint64_t seed) const {
        return already_done(done_, algorithm, n, param, seed);
    }

    void write(const BenchRecord& r) {
        const std::string row = format_record(r);
        out_ << row << "\n";
        out_.flush();
        std::cout << row << "\n";
    }

private:
    std::string path_;
    std::vector<DoneKey> done_;
    std::ofstream out_;
};

// Median wall time over `repeats` identical runs; quality metrics come from
// the first run (same seed, so they are identical across repeats).
BenchRecord timed_record(const Matrix& data, const std::optional<LabelVector>& labels,
                         const RunConfig& cfg, int repeats) {
    BenchRecord rec;
    rec.algorithm = bhsne::to_string(cfg.algorithm);
    rec.n = data.rows();
    rec.param = algorithm_param(cfg);
    rec.seed = cfg.seed;

    std::vector<double> times;
    for (int r = 0; r < std::max(repeats, 1); ++r) {
        PipelineOutcome outcome = run_pipeline(data, labels, cfg);
        times.push_back(outcome.seconds);
        if (r == 0) {
            rec.knn_err = outcome.knn_err;
            rec.final_kl = outcome.final_kl;
        }
    }
    std::sort(times.begin(), times.end());
    rec.seconds = times[times.size() / 2];
    return rec;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        if (field.empty()) continue;
        grid.push_back(std::stod(field));
    }
    if (grid.empty()) throw CLI::ValidationError("--bench-grid", "empty grid");
    std::sort(grid.begin(), grid.end());
    return grid;
}

int cmd_bench_theta(const Options& o) {
    RunConfig cfg = make_config(o);
    const Input in = load_input(o);
    if (!in.labels) {
        std::cerr << "bench-theta: --labels is required\n";
        return 1;
    }

    std::vector<double> grid;
    if (!o.bench_grid.empty()) {
        grid = parse_grid(o.bench_grid);
    } else {
        for (int i = 1; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    }

    BenchWriter writer(o.out, o.resume);

    // Exact baseline rides along when the data is small enough.
    if (in.data.rows() <= o.exact_cap) {
        RunConfig exact_cfg = cfg;
        exact_cfg.algorithm = Algorithm::Exact;
        if (!writer.skip("exact", in.data.rows(), 0.0, cfg.seed)) {
            writer.write(timed_record(in.data, in.labels, exact_cfg, o.repeats));
        }
    }
    for (const double theta : grid) {
        RunConfig bh_cfg = cfg;
        bh_cfg.algorithm = Algorithm::BarnesHut;
        bh_cfg.theta = theta;
        if (writer.skip("bh", in.data.rows(), theta, cfg.seed)) continue;
        writer.write(timed_record(in.data, in.labels, bh_cfg, o.repeats));
    }
    return 0;
}

int cmd_bench_size(const Options& o) {
    RunConfig cfg = make_config(o);
    const Input in = load_input(o);

    std::vector<std::size_t> grid;
    if (!o.bench_grid.empty()) {
        for (const double v : parse_grid(o.bench_grid)) {
            grid.push_back(static_cast<std::size_t>(v));
        }
    } else {
        grid = {1250, 2500, 5000, 10000};
    }
    if (grid.back() > in.data.rows()) {
        std::cerr << "bench-size: grid point " << grid.back() << " exceeds data size "
                  << in.data.rows() << "\n";
        return 1;
    }

    // One seeded shuffle; prefixes give nested subsets.
    std::vector<std::uint32_t> order(in.data.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    bhsne::Rng rng(cfg.seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }

    BenchWriter writer(o.out, o.resume);
    for (const std::size_t size : grid) {
        Matrix subset(size, in.data.cols());
        LabelVector subset_labels(in.labels ? size : 0);
        for (std::size_t i = 0; i < size; ++i) {
            const std::uint32_t src = order[i];
            std::copy_n(in.data.row(src), in.data.cols(), subset.row(i));
            if (in.labels) subset_labels[i] = (*in.labels)[src];
        }
        std::optional<LabelVector> maybe_labels;
        if (in.labels) maybe_labels = subset_labels;

        RunConfig bh_cfg = cfg;
        bh_cfg.algorithm = Algorithm::BarnesHut;
        if (!writer.skip("bh", size, bh_cfg.theta, cfg.seed)) {
            writer.write(timed_record(subset, maybe_labels, bh_cfg, o.repeats));
        }
        if (size <= o.exact_cap) {
            RunConfig exact_cfg = cfg;
            exact_cfg.algorithm = Algorithm::Exact;
            if (!writer.skip("exact", size, 0.0, cfg.seed)) {
                writer.write(timed_record(subset, maybe_labels, exact_cfg, o.repeats));
            }
        }
    }
    return 0;
}

int cmd_bench_dual(const Options& o) {
    RunConfig cfg = make_config(o);
    const Input in = load_input(o);
    if (!in.labels) {
        std::cerr << "bench-dual: --labels is required\n";
        return 1;
    }

    std::vector<double> grid;
    if (!o.bench_grid.empty()) {
        grid = parse_grid(o.bench_grid);
    } else {
        grid = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
    }

    BenchWriter writer(o.out, o.resume);
    for (const double rho : grid) {
        RunConfig dual_cfg = cfg;
        dual_cfg.algorithm = Algorithm::DualTree;
        dual_cfg.rho = rho;
        if (writer.skip("dual", in.data.rows(), rho, cfg.seed)) continue;
        writer.write(timed_record(in.data, in.labels, dual_cfg, o.repeats));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Barnes-Hut t-SNE embedding engine"};
    app.require_subcommand(1);

    Options opts;
    opts.out = "embedding.csv";
    auto* embed = app.add_subcommand("embed", "embed a data set");
    add_common_flags(embed, opts);

    Options theta_opts;
    theta_opts.out = "bench_theta.csv";
    auto* bench_theta =
        app.add_subcommand("bench-theta", "benchmark over a grid of theta values");
    add_common_flags(bench_theta, theta_opts);
    bench_theta->add_option("--bench-grid", theta_opts.bench_grid, "comma-separated theta grid");

    Options size_opts;
    size_opts.out = "bench_size.csv";
    auto* bench_size =
        app.add_subcommand("bench-size", "benchmark over a grid of data set sizes");
    add_common_flags(bench_size, size_opts);
    bench_size->add_option("--bench-grid", size_opts.bench_grid, "comma-separated size grid");

    Options dual_opts;
    dual_opts.out = "bench_dual.csv";
    auto* bench_dual =
        app.add_subcommand("bench-dual", "benchmark the dual-tree algorithm over a rho grid");
    add_common_flags(bench_dual, dual_opts);
    bench_dual->add_option("--bench-grid", dual_opts.bench_grid, "comma-separated rho grid");

    try {
        app.parse(argc, argv);
        if (embed->parsed()) return cmd_embed(opts);
        if (bench_theta->parsed()) return cmd_bench_theta(theta_opts);
        if (bench_size->parsed()) return cmd_bench_size(size_opts);
        if (bench_dual->parsed()) return cmd_bench_dual(dual_opts);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const bhsne::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const bhsne::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
