#pragma once

#include "ness/dataset.hpp"
#include "ness/embed.hpp"
#include "ness/stability.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ness {

/// Pearson correlation between upper-triangle euclidean distances of x and y.
/// Throws NumericError when either distance vector has zero variance.
double correlation_score(const Matrix& x, const Matrix& y);

/// Mean over points of |kNN_x(i) ∩ kNN_y(i)| / k (euclidean on both sides).
double concordance(const Matrix& x, const Matrix& y, std::size_t k);

/// Mean silhouette width; singleton clusters contribute 0. Throws
/// ArgumentError with fewer than 2 categories.
double silhouette(const Matrix& y, const LabelVector& labels);

/// Mean fraction of each point's k embedded neighbors sharing its label.
double neighbor_purity(const Matrix& y, const LabelVector& labels, std::size_t k);

/// Mean over points of sum_c p_c^2, with p_c the label proportions among the
/// point's k nearest embedded neighbors (self excluded).
double local_simpson(const Matrix& y, const LabelVector& labels, std::size_t k);

struct MetricsOptions {
    std::size_t concordance_k = 100;
    std::size_t purity_k = 50;
    std::size_t simpson_k = 50;
};

struct MetricsReport {
    double correlation = 0.0;
    double concordance = 0.0;
    std::optional<double> silhouette;
    std::optional<double> neighbor_purity;
    std::optional<double> local_simpson;
    MetricsOptions parameters;
};

/// Label metrics are computed iff labels are supplied. k values larger than
/// n - 1 are clamped to n - 1.
MetricsReport evaluate_metrics(const Matrix& x, const Matrix& y, const LabelVector* labels,
                               MetricsOptions options = {});

std::string metrics_json(const MetricsReport& report);

enum class DensityNormalization {
    /// Median over points of the per-point mean 30-NN distance.
    median_of_means,
    /// Median of all point-to-neighbor distances within 30-NN lists.
    median_of_neighbor_distances,
};

struct DensityRow {
    double percentile = 0.0;
    std::size_t count = 0;
    double mean_normalized_distance = 0.0;
};

/// For each p in (0, 100], the points whose stability lies in the upper p-th
/// percentile and their mean normalized distance to their 30 nearest
/// neighbors. Requires n >= 31.
std::vector<DensityRow> local_density_profile(
    const Matrix& x_reduced, std::span<const double> local, std::span<const double> percentiles,
    DensityNormalization normalization = DensityNormalization::median_of_means);

struct RemovalRow {
    double fraction = 0.0;
    std::size_t removed = 0;
    double delta_global_pct = 0.0;
    double delta_concordance_pct = 0.0;
    std::optional<double> delta_purity_pct;
};

struct RemovalOptions {
    double gcp = 30.0;
    std::size_t runs = 30;
    std::size_t k = 50;
    double lambda = 0.75;
    std::size_t concordance_k = 100;
    std::size_t purity_k = 50;
    std::uint64_t base_seed = 0;
    unsigned threads = 1;
};

/// Drops the floor(q n) least stable points (ties by index), reruns the
/// stability pipeline on the rest at the same gcp, and reports relative
/// changes against the baseline. Concordance and purity are averaged over the
/// runs of each ensemble; purity needs labels on x.
std::vector<RemovalRow> removal_experiment(const Embedder& engine, const DataMatrix& x,
                                           const RunEnsemble& baseline,
                                           std::span<const double> local,
                                           std::span<const double> fractions,
                                           const RemovalOptions& options);

/// Mid-ranks (1-based), ties share the mean rank.
std::vector<double> mid_ranks(std::span<const double> values);

/// Benjamini-Hochberg adjusted p-values, capped at 1.
std::vector<double> benjamini_hochberg(std::span<const double> p);

struct AssociationRow {
    std::size_t feature = 0;
    std::string name;
    bool applicable = true;
    double rho = 0.0;
    double p = 1.0;
    double p_adjusted = 1.0;
    int direction = 0;
};

/// Spearman correlation of each feature column with the stability scores,
/// two-sided t-approximation p-values and BH adjustment across applicable
/// features. Constant features are flagged not applicable.
std::vector<AssociationRow> feature_association(const Matrix& features,
                                                std::span<const double> local,
                                                const std::vector<std::string>& names = {});

std::string association_csv(std::span<const AssociationRow> rows);
std::string density_csv(std::span<const DensityRow> rows);
std::string removal_csv(std::span<const RemovalRow> rows);

} // namespace ness
