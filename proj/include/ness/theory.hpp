#pragma once

#include "ness/dataset.hpp"
#include "ness/embed.hpp"
#include "ness/knn.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ness {

struct DistortionResult {
    /// Smallest ratio ||y_i - y_j|| / ||x_i - x_j|| over all pairs.
    double scale = 0.0;
    /// Largest ratio divided by the smallest.
    double distortion = 1.0;
    std::pair<std::size_t, std::size_t> argmin_pair{0, 0};
    std::pair<std::size_t, std::size_t> argmax_pair{0, 0};
};

/// Throws ValidationError naming the pair when two input points coincide.
DistortionResult distortion(const Matrix& x, const Matrix& y);

struct Phi0Embedding {
    Matrix coords;
    std::size_t segments = 0;
    double scale = 1.0;
    std::vector<std::size_t> segment_of;
};

/// Reference map of the discrete circle: cut into M arcs of n/M consecutive
/// points, translate each arc (no rotation) so its midpoint sits on the
/// corresponding vertex of the M-gon of arc midpoints magnified by M, then
/// scale everything by S0. The whole picture is rotated so the first vertex
/// lies at angle 0. Within an arc, distances are exactly S0 times the input
/// distances.
Phi0Embedding phi0_construction(std::size_t n, std::size_t segments, double scale);

/// Largest c with c S0 <= d <= S0 / c over all cross-arc pairs.
double phi0_separation_constant(const Phi0Embedding& phi0);

/// C(Y) = sum over ordered neighbor pairs (either direction in G) of log q_ij.
double objective_knn(const Matrix& y, const KnnGraph& graph);
Matrix objective_knn_gradient(const Matrix& y, const KnnGraph& graph);

/// Scale S0 from `candidates` maximizing objective_knn of the phi0 map.
std::pair<double, double> tune_phi0_scale(std::size_t n, std::size_t segments,
                                          const KnnGraph& graph,
                                          std::span<const double> candidates);

/// Connected components of the graph joining points at distance <= eps.
std::size_t count_components(const Matrix& y, double eps);

/// Indices sorted by polar angle of the first two input coordinates.
std::vector<std::size_t> cyclic_order(const Matrix& x);

/// Components of the eps-graph on y with eps = 3 x the median embedded
/// distance between circle-adjacent input points.
std::size_t fragmentation_components(const Matrix& x, const Matrix& y);

/// Neighbor count used per n: a fixed k or round(fraction * n).
struct NeighborRule {
    std::size_t fixed = 3;
    double fraction = 0.0;

    std::size_t for_n(std::size_t n) const;
};

struct TheoryRow {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    double distortion = 0.0;
    double scale = 0.0;
    std::size_t components = 0;
    double objective = 0.0;
};

struct TheorySummary {
    std::size_t n = 0;
    std::size_t k = 0;
    double median_distortion = 0.0;
    double median_scale = 0.0;
    double median_components = 0.0;
};

struct TheoryExperiment {
    std::vector<TheoryRow> rows;
    std::vector<TheorySummary> summary;
};

/// Embeds discrete_circle(n) with the kNN-affinity t-SNE for every n and
/// seed (base_seed + 0..seeds-1) and records distortion, scale and
/// fragmentation. Cells run on up to `threads` workers.
TheoryExperiment distortion_scaling_experiment(std::span<const std::size_t> ns,
                                               NeighborRule rule, std::size_t seeds_per_n,
                                               const OptimizerParams& params = {},
                                               std::uint64_t base_seed = 0,
                                               unsigned threads = 1);

std::string theory_rows_csv(std::span<const TheoryRow> rows);
std::string theory_summary_json(std::span<const TheorySummary> summary);
std::string theory_summary_csv(std::span<const TheorySummary> summary);

double median(std::vector<double> values);

} // namespace ness
