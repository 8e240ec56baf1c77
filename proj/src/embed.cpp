#include "ness/embed.hpp"

#include "ness/error.hpp"
#include "ness/io.hpp"
#include "ness/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ness {

AffinityMatrix::AffinityMatrix(Matrix values, AffinityKind kind)
    : values_(std::move(values)), kind_(kind) {
    const std::size_t n = values_.rows();
    if (values_.cols() != n) {
        throw ValidationError("affinity matrix must be square");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (values_(i, i) != 0.0) {
            throw ValidationError("affinity diagonal must be zero (row " + std::to_string(i + 1) +
                                  ")");
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double v = values_(i, j);
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ValidationError("affinities must be finite and non-negative");
            }
            if (v != values_(j, i)) {
                throw ValidationError("affinity matrix must be exactly symmetric");
            }
            total += v;
        }
    }
    if (std::abs(total - 1.0) > 1e-10) {
        throw ValidationError("affinities sum to " + io::format_number(total) + ", expected 1");
    }
}

ConditionalAffinities conditional_affinities(const DistanceMatrix& d, double perplexity) {
    const std::size_t n = d.n();
    if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n))) {
        throw ArgumentError("perplexity must lie in (1, n); got " + io::format_number(perplexity) +
                            " with n=" + std::to_string(n));
    }
    constexpr int kMaxSteps = 200;
    constexpr double kEntropyTol = 1e-9;
    const double target = std::log2(perplexity);

    ConditionalAffinities out{Matrix(n, n), std::vector<double>(n, 0.0)};
    std::vector<double> shifted(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dmin = INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                dmin = std::min(dmin, d(i, j) * d(i, j));
            }
        }
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            shifted[j] = j == i ? 0.0 : d(i, j) * d(i, j) - dmin;
            mean += shifted[j];
        }
        mean /= static_cast<double>(n - 1);

        double beta = mean > 0.0 ? 1.0 / mean : 1.0;
        double lo = 0.0;
        double hi = INFINITY;
        auto row = out.p.row(i);
        bool converged = false;
        for (int step = 0; step < kMaxSteps; ++step) {
            double sum = 0.0;
            double weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    row[j] = 0.0;
                    continue;
                }
                row[j] = std::exp(-beta * shifted[j]);
                sum += row[j];
                weighted += row[j] * shifted[j];
            }
            const double entropy = (std::log(sum) + beta * weighted / sum) / std::numbers::ln2;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] /= sum;
            }
            const double diff = entropy - target;
            if (std::abs(diff) < kEntropyTol) {
                converged = true;
                break;
            }
            if (diff > 0.0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (lo + hi);
            } else {
                hi = beta;
                beta = 0.5 * (lo + hi);
            }
        }
        if (!converged) {
            throw NumericError("perplexity calibration did not converge for row " +
                               std::to_string(i + 1));
        }
        out.beta[i] = beta;
    }
    return out;
}

AffinityMatrix tsne_affinities_perplexity(const DistanceMatrix& d, double perplexity) {
    const auto cond = conditional_affinities(d, perplexity);
    const std::size_t n = d.n();
    Matrix p(n, n);
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (cond.p(i, j) + cond.p(j, i)) / denom;
            p(i, j) = v;
            p(j, i) = v;
        }
    }
    return AffinityMatrix(std::move(p), AffinityKind::perplexity);
}

AffinityMatrix tsne_affinities_knn(const KnnGraph& graph) {
    const std::size_t n = graph.n();
    std::vector<char> edge(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto j : graph.neighbors(i)) {
            edge[i * n + j] = 1;
            edge[j * n + i] = 1;
        }
    }
    const auto ordered_pairs = static_cast<double>(std::count(edge.begin(), edge.end(), 1));
    // 1/(2nk) per pair, renormalized: the OR-neighborhood has between nk and
    // 2nk ordered pairs, so the common value is 1 / ordered_pairs.
    const double weight = 1.0 / ordered_pairs;
    Matrix p(n, n);
    for (std::size_t idx = 0; idx < n * n; ++idx) {
        if (edge[idx]) {
            p.data()[idx] = weight;
        }
    }
    return AffinityMatrix(std::move(p), AffinityKind::knn_uniform);
}

void OptimizerParams::validate() const {
    if (iterations == 0) throw ArgumentError("iterations must be positive");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (!(learning_rate_per_point >= 0.0)) {
        throw ArgumentError("per-point learning rate must be non-negative");
    }
    if (!(momentum_early > 0.0) || !(momentum_late > 0.0)) {
        throw ArgumentError("momentum values must be positive");
    }
    if (momentum_switch > iterations) {
        throw ArgumentError("momentum switch iteration exceeds iteration count");
    }
    if (!(exaggeration > 0.0)) throw ArgumentError("exaggeration factor must be positive");
    if (exaggeration_iterations > iterations) {
        throw ArgumentError("exaggeration duration exceeds iteration count");
    }
    if (!(init_scale > 0.0)) throw ArgumentError("init scale must be positive");
}

double OptimizerParams::step_size(std::size_t n) const {
    return learning_rate_per_point > 0.0 ? learning_rate_per_point * static_cast<double>(n)
                                         : learning_rate;
}

Matrix random_init(std::size_t n, std::uint64_t seed, double init_scale) {
    if (!(init_scale > 0.0)) {
        throw ArgumentError("init scale must be positive");
    }
    Rng rng(seed);
    Matrix y(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        y(i, 0) = init_scale * rng.normal();
        y(i, 1) = init_scale * rng.normal();
    }
    return y;
}

namespace {

struct GradientPass {
    double z = 0.0;       // sum over ordered pairs of w_ij
    double plogw = 0.0;   // sum over ordered pairs of p_ij log w_ij
    double psum = 0.0;    // sum over ordered pairs of p_ij
};

// KL-divergence gradient with attraction scaled by alpha, written to `grad`
// (n x 2, row-major). Pairs i < j are visited once on split coordinate
// arrays: the i side is a SIMD reduction, the j side a contiguous update.
// Lane assignment is fixed, so results are bitwise reproducible for a build.
GradientPass kl_gradient(const double* p, const double* y, std::size_t n, double alpha,
                         double* grad, bool want_objective) {
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = y[2 * i];
        ys[i] = y[2 * i + 1];
    }
    std::vector<double> ax(n, 0.0), ay(n, 0.0), rx(n, 0.0), ry(n, 0.0);
    const double* xp = xs.data();
    const double* yp = ys.data();
    double* axp = ax.data();
    double* ayp = ay.data();
    double* rxp = rx.data();
    double* ryp = ry.data();
    GradientPass pass;
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = xp[i];
        const double yi = yp[i];
        const double* prow = p + i * n;
        double z = 0.0, a0 = 0.0, a1 = 0.0, r0 = 0.0, r1 = 0.0;
#pragma omp simd reduction(+ : z, a0, a1, r0, r1)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d0 = xi - xp[j];
            const double d1 = yi - yp[j];
            const double w = 1.0 / (1.0 + d0 * d0 + d1 * d1);
            const double pw = prow[j] * w;
            const double ww = w * w;
            z += w;
            a0 += pw * d0;
            a1 += pw * d1;
            r0 += ww * d0;
            r1 += ww * d1;
            axp[j] -= pw * d0;
            ayp[j] -= pw * d1;
            rxp[j] -= ww * d0;
            ryp[j] -= ww * d1;
        }
        pass.z += z;
        axp[i] += a0;
        ayp[i] += a1;
        rxp[i] += r0;
        ryp[i] += r1;
        if (want_objective) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (prow[j] != 0.0) {
                    const double d0 = xi - xp[j];
                    const double d1 = yi - yp[j];
                    pass.plogw -= prow[j] * std::log1p(d0 * d0 + d1 * d1);
                    pass.psum += prow[j];
                }
            }
        }
    }
    pass.z *= 2.0;
    pass.plogw *= 2.0;
    pass.psum *= 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        grad[2 * i] = 4.0 * (alpha * ax[i] - rx[i] / pass.z);
        grad[2 * i + 1] = 4.0 * (alpha * ay[i] - ry[i] / pass.z);
    }
    return pass;
}

double objective_from(const GradientPass& pass) {
    return pass.plogw - pass.psum * std::log(pass.z);
}

void check_shapes(const AffinityMatrix& p, const Matrix& y) {
    if (y.rows() != p.n() || y.cols() != 2) {
        throw ArgumentError("embedding must be n x 2 with n matching the affinity matrix");
    }
}

} // namespace

double objective(const AffinityMatrix& p, const Matrix& y) {
    check_shapes(p, y);
    const std::size_t n = p.n();
    double z = 0.0;
    double plogw = 0.0;
    double psum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d0 = y(i, 0) - y(j, 0);
            const double d1 = y(i, 1) - y(j, 1);
            const double w = 1.0 / (1.0 + d0 * d0 + d1 * d1);
            z += w;
            if (p(i, j) != 0.0) {
                plogw += p(i, j) * std::log(w);
                psum += p(i, j);
            }
        }
    }
    return 2.0 * plogw - 2.0 * psum * std::log(2.0 * z);
}

Matrix objective_gradient(const AffinityMatrix& p, const Matrix& y) {
    check_shapes(p, y);
    Matrix grad(p.n(), 2);
    kl_gradient(p.values().data(), y.data(), p.n(), 1.0, grad.data(), false);
    for (std::size_t t = 0; t < 2 * p.n(); ++t) {
        grad.data()[t] = -grad.data()[t];
    }
    return grad;
}

EmbeddingRun tsne_optimize(const AffinityMatrix& p, Matrix init, const OptimizerParams& params) {
    params.validate();
    check_shapes(p, init);
    const std::size_t n = p.n();
    const std::size_t len = 2 * n;
    constexpr std::size_t kTail = 50;
    const double rate = params.step_size(n);

    EmbeddingRun run;
    run.initial_objective = objective(p, init);
    Matrix y = std::move(init);
    std::vector<double> grad(len), velocity(len, 0.0), gains(len, 1.0);
    std::vector<double> tail;
    double momentum = params.momentum_early;
    const std::size_t tail_start =
        params.iterations > kTail ? params.iterations - kTail : 0;

    for (std::size_t iter = 0; iter < params.iterations; ++iter) {
        if (iter == params.momentum_switch) {
            momentum = params.momentum_late;
        }
        const double alpha = iter < params.exaggeration_iterations ? params.exaggeration : 1.0;
        const bool track = iter >= tail_start && alpha == 1.0;
        const auto pass = kl_gradient(p.values().data(), y.data(), n, alpha, grad.data(), track);
        if (track) {
            tail.push_back(objective_from(pass));
        }
        for (std::size_t t = 0; t < len; ++t) {
            if (!std::isfinite(grad[t])) {
                throw NumericError("non-finite gradient at iteration " + std::to_string(iter));
            }
            const bool same_sign = (grad[t] > 0.0) == (velocity[t] > 0.0);
            gains[t] = same_sign ? std::max(gains[t] * 0.8, 0.01) : gains[t] + 0.2;
            velocity[t] = momentum * velocity[t] - rate * gains[t] * grad[t];
            y.data()[t] += velocity[t];
        }
        double mean0 = 0.0, mean1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean0 += y(i, 0);
            mean1 += y(i, 1);
        }
        mean0 /= static_cast<double>(n);
        mean1 /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y(i, 0) -= mean0;
            y(i, 1) -= mean1;
        }
    }

    run.final_objective = objective(p, y);
    tail.push_back(run.final_objective);
    for (std::size_t t = 1; t < tail.size(); ++t) {
        if (tail[t] < tail[t - 1] - 1e-6) {
            run.tail_monotone = false;
        }
    }
    run.coords = std::move(y);
    run.iterations = params.iterations;
    return run;
}

std::string to_string(EngineKind kind) {
    return kind == EngineKind::tsne_perplexity ? "tsne-perplexity" : "tsne-knn";
}

EngineKind parse_engine(const std::string& name) {
    if (name == "tsne-perplexity") return EngineKind::tsne_perplexity;
    if (name == "tsne-knn") return EngineKind::tsne_knn;
    throw ArgumentError("unknown engine '" + name + "' (expected tsne-perplexity or tsne-knn)");
}

TsneEmbedder::TsneEmbedder(EngineKind kind, OptimizerParams params, Metric metric)
    : kind_(kind), params_(params), metric_(metric) {
    params_.validate();
}

void TsneEmbedder::check_gcp(double gcp, std::size_t n) const {
    if (kind_ == EngineKind::tsne_perplexity) {
        if (!(gcp > 1.0) || !(gcp < static_cast<double>(n))) {
            throw ArgumentError("perplexity must lie in (1, n); got " + io::format_number(gcp));
        }
        return;
    }
    if (gcp != std::floor(gcp) || gcp < 1.0 || gcp > static_cast<double>(n) - 1.0) {
        throw ArgumentError("neighbor count must be an integer in [1, n-1]; got " +
                            io::format_number(gcp));
    }
}

AffinityMatrix TsneEmbedder::affinities(const DistanceMatrix& d, double gcp) const {
    check_gcp(gcp, d.n());
    if (kind_ == EngineKind::tsne_perplexity) {
        return tsne_affinities_perplexity(d, gcp);
    }
    return tsne_affinities_knn(knn_graph(d, static_cast<std::size_t>(gcp)));
}

RunFactory TsneEmbedder::prepare(const DataMatrix& x, std::shared_ptr<const DistanceMatrix> d,
                                 double gcp) const {
    if (!d) {
        d = std::make_shared<const DistanceMatrix>(pairwise_distances(x, metric_));
    }
    auto p = std::make_shared<const AffinityMatrix>(affinities(*d, gcp));
    return [p, params = params_, tag = tag(), gcp](std::uint64_t seed) {
        auto run = tsne_optimize(*p, random_init(p->n(), seed, params.init_scale), params);
        run.engine = tag;
        run.gcp = gcp;
        run.seed = seed;
        return run;
    };
}

EmbeddingRun run_engine(EngineKind kind, const DataMatrix& x, double gcp, std::uint64_t seed,
                        const OptimizerParams& params) {
    TsneEmbedder engine(kind, params);
    return engine.prepare(x, nullptr, gcp)(seed);
}

EmbeddingRun parse_embedding_csv(const std::string& text, const RunMeta& meta) {
    auto data = parse_matrix_csv(text);
    if (data.p() != 2) {
        throw ValidationError("embedding CSV must have exactly 2 columns, found " +
                              std::to_string(data.p()));
    }
    EmbeddingRun run;
    run.coords = data.values();
    run.engine = meta.engine;
    run.gcp = meta.gcp;
    run.seed = meta.seed;
    return run;
}

EmbeddingRun load_external_embedding(const std::filesystem::path& path, const RunMeta& meta) {
    return parse_embedding_csv(io::read_file(path), meta);
}

std::string format_embedding_csv(const EmbeddingRun& run) {
    // Full precision so a saved ensemble reloads to identical coordinates.
    std::string out = "dim1,dim2\n";
    for (std::size_t i = 0; i < run.n(); ++i) {
        out += io::format_exact(run.coords(i, 0)) + "," + io::format_exact(run.coords(i, 1)) + "\n";
    }
    return out;
}

std::string format_embedding_sidecar(const EmbeddingRun& run) {
    nlohmann::json j;
    j["engine"] = run.engine;
    j["gcp"] = io::round9(run.gcp);
    j["seed"] = run.seed;
    if (std::isfinite(run.final_objective)) {
        j["final_objective"] = io::round9(run.final_objective);
    } else {
        j["final_objective"] = nullptr;
    }
    j["iterations"] = run.iterations;
    return j.dump(2) + "\n";
}

} // namespace ness
