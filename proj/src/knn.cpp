#include "ness/knn.hpp"

#include "ness/error.hpp"
#include "ness/io.hpp"
#include "ness/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <utility>

namespace ness {

std::string to_string(Metric metric) {
    switch (metric) {
    case Metric::euclidean: return "euclidean";
    case Metric::manhattan: return "manhattan";
    case Metric::cosine: return "cosine";
    }
    return "unknown";
}

Metric parse_metric(const std::string& name) {
    if (name == "euclidean") return Metric::euclidean;
    if (name == "manhattan") return Metric::manhattan;
    if (name == "cosine") return Metric::cosine;
    throw ArgumentError("unknown metric '" + name + "'");
}

double point_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    switch (metric) {
    case Metric::euclidean: {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double diff = a[j] - b[j];
            acc += diff * diff;
        }
        return std::sqrt(acc);
    }
    case Metric::manhattan: {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            acc += std::abs(a[j] - b[j]);
        }
        return acc;
    }
    case Metric::cosine: {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            dot += a[j] * b[j];
            na += a[j] * a[j];
            nb += b[j] * b[j];
        }
        return std::max(0.0, 1.0 - dot / (std::sqrt(na) * std::sqrt(nb)));
    }
    }
    return 0.0;
}

DistanceMatrix::DistanceMatrix(Matrix values, Metric metric)
    : values_(std::move(values)), metric_(metric) {
    if (values_.rows() != values_.cols()) {
        throw ValidationError("distance matrix must be square");
    }
}

namespace {

void check_cosine_rows(const Matrix& points) {
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double norm = 0.0;
        for (double v : points.row(i)) {
            norm += v * v;
        }
        if (norm == 0.0) {
            throw ValidationError("row " + std::to_string(i + 1) +
                                  " has zero norm; cosine distance undefined");
        }
    }
}

using Candidate = std::pair<double, std::uint32_t>;

} // namespace

DistanceMatrix pairwise_distances(const Matrix& points, Metric metric, unsigned threads) {
    if (metric == Metric::cosine) {
        check_cosine_rows(points);
    }
    const std::size_t n = points.rows();
    Matrix d(n, n);
    parallel_for(n, threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            d(i, j) = point_distance(points.row(i), points.row(j), metric);
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            d(i, j) = d(j, i);
        }
    }
    return DistanceMatrix(std::move(d), metric);
}

DistanceMatrix pairwise_distances(const DataMatrix& x, Metric metric, unsigned threads) {
    return pairwise_distances(x.values(), metric, threads);
}

KnnGraph::KnnGraph(std::size_t n, std::size_t k, Metric metric,
                   std::vector<std::uint32_t> neighbors, std::vector<double> distances)
    : n_(n), k_(k), metric_(metric), neighbors_(std::move(neighbors)),
      distances_(std::move(distances)) {
    if (neighbors_.size() != n * k || distances_.size() != n * k) {
        throw ValidationError("knn graph storage does not match n*k");
    }
}

namespace {

void check_k(std::size_t n, std::size_t k) {
    if (k < 1 || k + 1 > n) {
        throw ArgumentError("k must lie in [1, n-1]; got k=" + std::to_string(k) +
                            " with n=" + std::to_string(n));
    }
}

template <typename DistanceFn>
KnnGraph brute_force(std::size_t n, std::size_t k, Metric metric, unsigned threads,
                     DistanceFn&& dist) {
    check_k(n, k);
    std::vector<std::uint32_t> nbrs(n * k);
    std::vector<double> dists(n * k);
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<Candidate> cand;
        cand.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                cand.emplace_back(dist(i, j), static_cast<std::uint32_t>(j));
            }
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                          cand.end());
        for (std::size_t r = 0; r < k; ++r) {
            dists[i * k + r] = cand[r].first;
            nbrs[i * k + r] = cand[r].second;
        }
    });
    return KnnGraph(n, k, metric, std::move(nbrs), std::move(dists));
}

} // namespace

KnnGraph knn_graph(const DistanceMatrix& d, std::size_t k, unsigned threads) {
    return brute_force(d.n(), k, d.metric(), threads,
                       [&](std::size_t i, std::size_t j) { return d(i, j); });
}

KnnGraph knn_graph(const Matrix& points, std::size_t k, Metric metric, unsigned threads) {
    if (metric == Metric::cosine) {
        check_cosine_rows(points);
    }
    return brute_force(points.rows(), k, metric, threads, [&](std::size_t i, std::size_t j) {
        return point_distance(points.row(i), points.row(j), metric);
    });
}

namespace {

class KdTree {
public:
    explicit KdTree(const Matrix& points) : points_(points), order_(points.rows()) {
        std::iota(order_.begin(), order_.end(), 0u);
        nodes_.reserve(2 * points.rows() / kLeafSize + 2);
        build(0, order_.size());
    }

    void query(std::size_t i, std::size_t k, std::uint32_t* out_idx, double* out_dist) const {
        // Max-heap on (distance, index): top is the current worst accepted candidate.
        std::priority_queue<Candidate> heap;
        search(0, i, k, heap);
        for (std::size_t r = k; r-- > 0;) {
            out_dist[r] = heap.top().first;
            out_idx[r] = heap.top().second;
            heap.pop();
        }
    }

private:
    static constexpr std::size_t kLeafSize = 12;

    struct Node {
        std::size_t begin, end;
        std::vector<double> lo, hi;
        std::size_t left = 0, right = 0;
        bool leaf = true;
    };

    std::size_t build(std::size_t begin, std::size_t end) {
        const std::size_t dims = points_.cols();
        Node node{begin, end, std::vector<double>(dims, INFINITY),
                  std::vector<double>(dims, -INFINITY)};
        for (std::size_t t = begin; t < end; ++t) {
            auto p = points_.row(order_[t]);
            for (std::size_t d = 0; d < dims; ++d) {
                node.lo[d] = std::min(node.lo[d], p[d]);
                node.hi[d] = std::max(node.hi[d], p[d]);
            }
        }
        const std::size_t id = nodes_.size();
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) {
            return id;
        }
        std::size_t axis = 0;
        for (std::size_t d = 1; d < dims; ++d) {
            if (node.hi[d] - node.lo[d] > node.hi[axis] - node.lo[axis]) {
                axis = d;
            }
        }
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) {
                             return std::pair(points_(a, axis), a) < std::pair(points_(b, axis), b);
                         });
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        nodes_[id].leaf = false;
        return id;
    }

    double box_distance(const Node& node, std::span<const double> q) const {
        double acc = 0.0;
        for (std::size_t d = 0; d < q.size(); ++d) {
            double gap = 0.0;
            if (q[d] < node.lo[d]) gap = node.lo[d] - q[d];
            else if (q[d] > node.hi[d]) gap = q[d] - node.hi[d];
            acc += gap * gap;
        }
        return std::sqrt(acc);
    }

    void search(std::size_t id, std::size_t i, std::size_t k,
                std::priority_queue<Candidate>& heap) const {
        const Node& node = nodes_[id];
        auto q = points_.row(i);
        if (heap.size() == k && box_distance(node, q) > heap.top().first * (1.0 + 1e-12)) {
            return;
        }
        if (node.leaf) {
            for (std::size_t t = node.begin; t < node.end; ++t) {
                const std::uint32_t j = order_[t];
                if (j == i) {
                    continue;
                }
                Candidate c{point_distance(q, points_.row(j), Metric::euclidean), j};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            return;
        }
        const double dl = box_distance(nodes_[node.left], q);
        const double dr = box_distance(nodes_[node.right], q);
        if (dl <= dr) {
            search(node.left, i, k, heap);
            search(node.right, i, k, heap);
        } else {
            search(node.right, i, k, heap);
            search(node.left, i, k, heap);
        }
    }

    const Matrix& points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

} // namespace

KnnGraph knn_graph_kdtree(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows();
    check_k(n, k);
    KdTree tree(points);
    std::vector<std::uint32_t> nbrs(n * k);
    std::vector<double> dists(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        tree.query(i, k, nbrs.data() + i * k, dists.data() + i * k);
    }
    return KnnGraph(n, k, Metric::euclidean, std::move(nbrs), std::move(dists));
}

std::string format_knn_csv(const KnnGraph& graph) {
    std::string out = "point,rank,neighbor,distance\n";
    for (std::size_t i = 0; i < graph.n(); ++i) {
        auto nb = graph.neighbors(i);
        auto ds = graph.distances(i);
        for (std::size_t r = 0; r < graph.k(); ++r) {
            out += std::to_string(i + 1) + "," + std::to_string(r + 1) + "," +
                   std::to_string(nb[r] + 1) + "," + io::format_number(ds[r]) + "\n";
        }
    }
    return out;
}

} // namespace ness
