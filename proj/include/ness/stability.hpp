#pragma once

#include "ness/dataset.hpp"
#include "ness/embed.hpp"
#include "ness/knn.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ness {

/// N embeddings of the same n points produced under different seeds.
class RunEnsemble {
public:
    /// Throws ArgumentError when runs is empty or the runs disagree on n.
    explicit RunEnsemble(std::vector<EmbeddingRun> runs);

    std::size_t size() const { return runs_.size(); }
    std::size_t n() const { return runs_.front().n(); }
    const std::vector<EmbeddingRun>& runs() const { return runs_; }
    std::vector<std::uint64_t> seeds() const;

private:
    std::vector<EmbeddingRun> runs_;
};

/// Runs the engine N times with seeds base_seed + 0..N-1, sharing the
/// distance matrix and affinities. Runs execute on up to `threads` workers;
/// the result does not depend on the worker count.
RunEnsemble collect_runs(const Embedder& engine, const DataMatrix& x, double gcp, std::size_t runs,
                         std::uint64_t base_seed, unsigned threads = 1,
                         std::shared_ptr<const DistanceMatrix> distances = nullptr);

/// Embedding-space euclidean k-NN graph of every run.
std::vector<KnnGraph> embedding_graphs(const RunEnsemble& ensemble, std::size_t k,
                                       unsigned threads = 1);

/// K[j,l]: number of runs in which l is among j's k nearest embedded
/// neighbors, max-symmetrized.
class NeighborCountMatrix {
public:
    NeighborCountMatrix(std::size_t n, std::size_t runs, std::size_t k,
                        std::vector<std::uint32_t> counts);

    std::size_t n() const { return n_; }
    std::size_t runs() const { return runs_; }
    std::size_t k() const { return k_; }
    std::uint32_t operator()(std::size_t j, std::size_t l) const { return counts_[j * n_ + l]; }
    std::span<const std::uint32_t> row(std::size_t j) const { return {counts_.data() + j * n_, n_}; }

private:
    std::size_t n_, runs_, k_;
    std::vector<std::uint32_t> counts_;
};

NeighborCountMatrix neighbor_count_matrix(std::span<const KnnGraph> graphs);
NeighborCountMatrix neighbor_count_matrix(const RunEnsemble& ensemble, std::size_t k,
                                          unsigned threads = 1);

/// Linear interpolation between order statistics ("type 7"). `sorted` must be
/// ascending and non-empty; lambda in [0, 1].
double quantile_type7(std::span<const double> sorted, double lambda);

/// S_j: lambda-quantile of row j's positive counts divided by N.
std::vector<double> local_stability(const NeighborCountMatrix& counts, double lambda = 0.75);

double global_stability(std::span<const double> local);

struct StabilityReport {
    std::vector<double> local;
    double global = 0.0;
    double lambda = 0.75;
    std::size_t k = 0;
    std::size_t runs = 0;
};

StabilityReport stability_report(const NeighborCountMatrix& counts, double lambda = 0.75);

/// 1/S_j, or log(1 + 100 log(1/S_j)) when `transform` is set.
std::vector<double> instability(std::span<const double> local, bool transform);

struct RarenessReport {
    Matrix similarity;          // W, N x N, unit diagonal
    std::vector<double> mean;   // m_i
    std::vector<double> variance;  // v_i (population)
    std::vector<double> rareness;  // R_i
    /// All R_i equal, so the rarest run carries no information.
    bool degenerate = false;
    std::size_t rarest = 0;
    std::size_t least_rare = 0;
};

inline constexpr double kRarenessEpsilon = 1e-12;

/// W(i,j) = median over points of shared-k-NN fraction between runs i and j;
/// R_i = 1 / (max(m_i, eps) * max(v_i, eps)). Requires N >= 3.
RarenessReport rareness_scores(std::span<const KnnGraph> graphs);
RarenessReport rareness_scores(const RunEnsemble& ensemble, std::size_t k, unsigned threads = 1);

enum class ScanRule { sequential, top5pct };
enum class ImprovementMode { relative, absolute };

std::string to_string(ScanRule rule);
ScanRule parse_scan_rule(const std::string& name);

/// Five equally spaced values from 10 to 10*log(n), rounded to integers,
/// clamped to n-1 and de-duplicated. Natural log unless `log10` is set.
std::vector<double> default_gcp_grid(std::size_t n, bool log10 = false);

/// Applies the sequential stop rule to the scores seen so far. Returns the
/// recommended index when the most recent score triggers a stop.
std::optional<std::size_t> sequential_stop(std::span<const double> global_scores,
                                           ImprovementMode mode = ImprovementMode::relative);

/// Smallest index whose score is within 5% of the best score.
std::size_t top5pct_choice(std::span<const double> global_scores);

struct GcpScanEntry {
    double gcp = 0.0;
    double global = 0.0;
    double wall_seconds = 0.0;
};

struct GcpScanTrace {
    std::vector<GcpScanEntry> entries;
    double recommended = 0.0;
    ScanRule rule = ScanRule::sequential;
    /// "stability", "no-improvement", "exhausted" or "full-scan".
    std::string stop_reason;
};

struct ScanOptions {
    std::size_t runs = 30;
    std::size_t k = 50;
    double lambda = 0.75;
    ScanRule rule = ScanRule::sequential;
    ImprovementMode improvement = ImprovementMode::relative;
    std::uint64_t base_seed = 0;
    unsigned threads = 1;
};

struct GcpScanResult {
    GcpScanTrace trace;
    /// One report and ensemble per evaluated gcp, aligned with trace.entries.
    std::vector<StabilityReport> reports;
    std::vector<RunEnsemble> ensembles;
    std::size_t recommended_index = 0;
};

/// Evaluates global stability over increasing gcps and recommends one.
GcpScanResult gcp_scan(const Embedder& engine, const DataMatrix& x, std::span<const double> gcps,
                       const ScanOptions& options);

std::string stability_json(const StabilityReport& report);
std::string rareness_json(const RarenessReport& report);
/// Wall times are left out unless `include_timings`, keeping the output reproducible.
std::string scan_json(const GcpScanTrace& trace, bool include_timings = false);
/// Single "local" column aligned with input row order.
std::string local_scores_csv(std::span<const double> local);

} // namespace ness
