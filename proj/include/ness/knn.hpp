#pragma once

#include "ness/dataset.hpp"
#include "ness/matrix.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ness {

enum class Metric { euclidean, manhattan, cosine };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& name);

/// Distance between two rows. Cosine distance is 1 - cos(angle), clamped to >= 0.
double point_distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Symmetric n x n matrix of pairwise distances with an exactly zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix(Matrix values, Metric metric);

    std::size_t n() const { return values_.rows(); }
    Metric metric() const { return metric_; }
    double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
    const Matrix& values() const { return values_; }

private:
    Matrix values_;
    Metric metric_;
};

/// Throws ValidationError naming the row when a cosine row has zero norm.
DistanceMatrix pairwise_distances(const Matrix& points, Metric metric = Metric::euclidean,
                                  unsigned threads = 1);
DistanceMatrix pairwise_distances(const DataMatrix& x, Metric metric = Metric::euclidean,
                                  unsigned threads = 1);

/// k nearest neighbors of every point, self excluded. Each list is ordered by
/// ascending distance with ties broken by ascending index. Indices are 0-based.
class KnnGraph {
public:
    KnnGraph(std::size_t n, std::size_t k, Metric metric, std::vector<std::uint32_t> neighbors,
             std::vector<double> distances);

    std::size_t n() const { return n_; }
    std::size_t k() const { return k_; }
    Metric metric() const { return metric_; }

    std::span<const std::uint32_t> neighbors(std::size_t i) const {
        return {neighbors_.data() + i * k_, k_};
    }
    std::span<const double> distances(std::size_t i) const {
        return {distances_.data() + i * k_, k_};
    }

    bool operator==(const KnnGraph&) const = default;

private:
    std::size_t n_;
    std::size_t k_;
    Metric metric_;
    std::vector<std::uint32_t> neighbors_;
    std::vector<double> distances_;
};

/// Reference brute-force construction from a precomputed distance matrix.
KnnGraph knn_graph(const DistanceMatrix& d, std::size_t k, unsigned threads = 1);

/// Brute force over raw points without materializing the n x n matrix.
KnnGraph knn_graph(const Matrix& points, std::size_t k, Metric metric = Metric::euclidean,
                   unsigned threads = 1);

/// Exact euclidean k-NN through a k-d tree. Produces the same graph as the
/// brute-force path, including tie order.
KnnGraph knn_graph_kdtree(const Matrix& points, std::size_t k);

/// Edge list "point,rank,neighbor,distance" with 1-based point and rank indices.
std::string format_knn_csv(const KnnGraph& graph);

} // namespace ness
