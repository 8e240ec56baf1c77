#pragma once

#include "ness/dataset.hpp"
#include "ness/knn.hpp"
#include "ness/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace ness {

enum class AffinityKind { perplexity, knn_uniform, custom };

/// Joint input affinities p_ij: symmetric, non-negative, zero diagonal,
/// summing to 1 over ordered pairs.
class AffinityMatrix {
public:
    /// Validates the invariants (sum tolerance 1e-10) and throws ValidationError.
    AffinityMatrix(Matrix values, AffinityKind kind);

    std::size_t n() const { return values_.rows(); }
    AffinityKind kind() const { return kind_; }
    double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
    const Matrix& values() const { return values_; }

private:
    Matrix values_;
    AffinityKind kind_;
};

/// Row-conditional Gaussian affinities p_{j|i} (row i sums to 1) and the
/// precision beta_i = 1 / (2 sigma_i^2) found for each row.
struct ConditionalAffinities {
    Matrix p;
    std::vector<double> beta;
};

/// Calibrates each row so the base-2 entropy equals log2(perplexity) within
/// 1e-9. Throws NumericError naming the row when 200 bisection steps do not
/// converge.
ConditionalAffinities conditional_affinities(const DistanceMatrix& d, double perplexity);

/// p_ij = (p_{j|i} + p_{i|j}) / (2n).
AffinityMatrix tsne_affinities_perplexity(const DistanceMatrix& d, double perplexity);

/// Uniform weight on every pair where either point lists the other as a
/// neighbor, normalized to sum to 1.
AffinityMatrix tsne_affinities_knn(const KnnGraph& graph);

struct OptimizerParams {
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    /// When positive, the step is this times n and learning_rate is ignored.
    double learning_rate_per_point = 0.0;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    std::size_t momentum_switch = 250;
    double exaggeration = 12.0;
    std::size_t exaggeration_iterations = 250;
    double init_scale = 1e-4;

    /// Throws ArgumentError on non-positive values or a switch past the end.
    void validate() const;
    double step_size(std::size_t n) const;
};

struct EmbeddingRun {
    Matrix coords;
    std::string engine;
    double gcp = 0.0;
    std::uint64_t seed = 0;
    double final_objective = std::numeric_limits<double>::quiet_NaN();
    double initial_objective = std::numeric_limits<double>::quiet_NaN();
    std::size_t iterations = 0;
    /// Objective never dropped by more than 1e-6 between consecutive steps
    /// over the last 50 iterations.
    bool tail_monotone = true;

    std::size_t n() const { return coords.rows(); }
};

/// i.i.d. Gaussian n x 2 coordinates with standard deviation init_scale.
Matrix random_init(std::size_t n, std::uint64_t seed, double init_scale = 1e-4);

/// C*(Y) = sum_{i != j} p_ij log q_ij with Student-t q normalized over all
/// ordered pairs.
double objective(const AffinityMatrix& p, const Matrix& y);

/// Gradient of C* with respect to Y (ascent direction).
Matrix objective_gradient(const AffinityMatrix& p, const Matrix& y);

/// Momentum gradient ascent of C* with early exaggeration and per-coordinate
/// gains. Throws NumericError with the iteration index on a non-finite gradient.
EmbeddingRun tsne_optimize(const AffinityMatrix& p, Matrix init, const OptimizerParams& params);

using RunFactory = std::function<EmbeddingRun(std::uint64_t seed)>;

/// Common interface for embedding engines driven by random initialization.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string tag() const = 0;
    /// Throws ArgumentError when gcp is not valid for n points.
    virtual void check_gcp(double gcp, std::size_t n) const = 0;
    virtual Metric metric() const { return Metric::euclidean; }
    /// Prepares everything that depends only on (x, gcp). The returned
    /// callable is safe to invoke concurrently with different seeds.
    virtual RunFactory prepare(const DataMatrix& x, std::shared_ptr<const DistanceMatrix> d,
                               double gcp) const = 0;
};

enum class EngineKind { tsne_perplexity, tsne_knn };

std::string to_string(EngineKind kind);
EngineKind parse_engine(const std::string& name);

class TsneEmbedder final : public Embedder {
public:
    explicit TsneEmbedder(EngineKind kind, OptimizerParams params = {},
                          Metric metric = Metric::euclidean);

    std::string tag() const override { return to_string(kind_); }
    void check_gcp(double gcp, std::size_t n) const override;
    Metric metric() const override { return metric_; }
    RunFactory prepare(const DataMatrix& x, std::shared_ptr<const DistanceMatrix> d,
                       double gcp) const override;

    /// Affinities this engine would optimize for the given distances.
    AffinityMatrix affinities(const DistanceMatrix& d, double gcp) const;

private:
    EngineKind kind_;
    OptimizerParams params_;
    Metric metric_;
};

/// distances -> affinities -> random_init(seed) -> optimize.
EmbeddingRun run_engine(EngineKind kind, const DataMatrix& x, double gcp, std::uint64_t seed,
                        const OptimizerParams& params = {});

struct RunMeta {
    std::string engine = "external";
    double gcp = 0.0;
    std::uint64_t seed = 0;
};

/// n x 2 CSV with optional "dim1,dim2" header. Throws ValidationError when the
/// width is not 2.
EmbeddingRun parse_embedding_csv(const std::string& text, const RunMeta& meta);
EmbeddingRun load_external_embedding(const std::filesystem::path& path, const RunMeta& meta);

std::string format_embedding_csv(const EmbeddingRun& run);
/// {"engine","final_objective","gcp","iterations","seed"}, sorted keys.
std::string format_embedding_sidecar(const EmbeddingRun& run);

} // namespace ness
