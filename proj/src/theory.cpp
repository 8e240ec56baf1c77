#include "ness/theory.hpp"

#include "ness/error.hpp"
#include "ness/io.hpp"
#include "ness/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ness {

double median(std::vector<double> values) {
    if (values.empty()) {
        throw ArgumentError("median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    return m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

DistortionResult distortion(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) {
        throw ArgumentError("input and embedding point counts differ");
    }
    if (x.rows() < 2) {
        throw ArgumentError("distortion needs at least 2 points");
    }
    DistortionResult result;
    double lo = INFINITY;
    double hi = -INFINITY;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = i + 1; j < x.rows(); ++j) {
            const double dx = point_distance(x.row(i), x.row(j), Metric::euclidean);
            if (dx == 0.0) {
                throw ValidationError("input points " + std::to_string(i + 1) + " and " +
                                      std::to_string(j + 1) + " coincide; ratio undefined");
            }
            const double ratio = point_distance(y.row(i), y.row(j), Metric::euclidean) / dx;
            if (ratio < lo) {
                lo = ratio;
                result.argmin_pair = {i, j};
            }
            if (ratio > hi) {
                hi = ratio;
                result.argmax_pair = {i, j};
            }
        }
    }
    result.scale = lo;
    result.distortion = lo > 0.0 ? hi / lo : INFINITY;
    return result;
}

Phi0Embedding phi0_construction(std::size_t n, std::size_t segments, double scale) {
    if (segments < 3) {
        throw ArgumentError("phi0 needs at least 3 segments");
    }
    if (n % segments != 0) {
        throw ArgumentError("segment count " + std::to_string(segments) + " does not divide n=" +
                            std::to_string(n));
    }
    if (!(scale > 0.0)) {
        throw ArgumentError("phi0 scale must be positive");
    }
    const auto circle = discrete_circle(n);
    const std::size_t per = n / segments;
    const double magnify = static_cast<double>(segments);
    Phi0Embedding out{Matrix(n, 2), segments, scale, std::vector<std::size_t>(n)};
    // Rows m*per .. (m+1)*per-1 carry angles 2 pi (m*per+1 .. (m+1)*per) / n.
    auto mid_angle = [&](std::size_t m) {
        const double first = static_cast<double>(m * per + 1);
        const double last = static_cast<double>((m + 1) * per);
        return std::numbers::pi * (first + last) / static_cast<double>(n);
    };
    // A global rotation puts the first vertex at angle 0.
    const double c0 = std::cos(mid_angle(0));
    const double s0 = std::sin(mid_angle(0));
    for (std::size_t m = 0; m < segments; ++m) {
        const double shift0 = (magnify - 1.0) * std::cos(mid_angle(m));
        const double shift1 = (magnify - 1.0) * std::sin(mid_angle(m));
        for (std::size_t r = m * per; r < (m + 1) * per; ++r) {
            const double u = circle.values()(r, 0) + shift0;
            const double v = circle.values()(r, 1) + shift1;
            out.coords(r, 0) = scale * (c0 * u + s0 * v);
            out.coords(r, 1) = scale * (c0 * v - s0 * u);
            out.segment_of[r] = m;
        }
    }
    return out;
}

double phi0_separation_constant(const Phi0Embedding& phi0) {
    const std::size_t n = phi0.coords.rows();
    double c = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (phi0.segment_of[i] == phi0.segment_of[j]) {
                continue;
            }
            const double d = point_distance(phi0.coords.row(i), phi0.coords.row(j),
                                            Metric::euclidean);
            c = std::min({c, d / phi0.scale, phi0.scale / d});
        }
    }
    return c;
}

double objective_knn(const Matrix& y, const KnnGraph& graph) {
    const auto p = tsne_affinities_knn(graph);
    // p holds 1/|E| on each of the |E| ordered neighbor pairs.
    const double edges = std::round(1.0 / p(0, graph.neighbors(0)[0]));
    return edges * objective(p, y);
}

Matrix objective_knn_gradient(const Matrix& y, const KnnGraph& graph) {
    const auto p = tsne_affinities_knn(graph);
    const double edges = std::round(1.0 / p(0, graph.neighbors(0)[0]));
    auto grad = objective_gradient(p, y);
    for (std::size_t t = 0; t < 2 * y.rows(); ++t) {
        grad.data()[t] *= edges;
    }
    return grad;
}

std::pair<double, double> tune_phi0_scale(std::size_t n, std::size_t segments,
                                          const KnnGraph& graph,
                                          std::span<const double> candidates) {
    if (candidates.empty()) {
        throw ArgumentError("no candidate scales");
    }
    double best_scale = candidates.front();
    double best = -INFINITY;
    for (double s : candidates) {
        const double c = objective_knn(phi0_construction(n, segments, s).coords, graph);
        if (c > best) {
            best = c;
            best_scale = s;
        }
    }
    return {best_scale, best};
}

std::size_t count_components(const Matrix& y, double eps) {
    const std::size_t n = y.rows();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    std::size_t components = n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (point_distance(y.row(i), y.row(j), Metric::euclidean) <= eps) {
                const auto a = find(i);
                const auto b = find(j);
                if (a != b) {
                    parent[std::max(a, b)] = std::min(a, b);
                    --components;
                }
            }
        }
    }
    return components;
}

std::vector<std::size_t> cyclic_order(const Matrix& x) {
    if (x.cols() < 2) {
        throw ArgumentError("cyclic order needs at least 2 coordinates");
    }
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> angle(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        angle[i] = std::atan2(x(i, 1), x(i, 0));
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return angle[a] < angle[b]; });
    return order;
}

std::size_t fragmentation_components(const Matrix& x, const Matrix& y) {
    const auto order = cyclic_order(x);
    const std::size_t n = order.size();
    std::vector<double> adjacent(n);
    for (std::size_t t = 0; t < n; ++t) {
        adjacent[t] = point_distance(y.row(order[t]), y.row(order[(t + 1) % n]),
                                     Metric::euclidean);
    }
    return count_components(y, 3.0 * median(std::move(adjacent)));
}

std::size_t NeighborRule::for_n(std::size_t n) const {
    if (fraction > 0.0) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(
                                            std::lround(fraction * static_cast<double>(n))));
    }
    return fixed;
}

TheoryExperiment distortion_scaling_experiment(std::span<const std::size_t> ns,
                                               NeighborRule rule, std::size_t seeds_per_n,
                                               const OptimizerParams& params,
                                               std::uint64_t base_seed, unsigned threads) {
    if (ns.empty() || seeds_per_n == 0) {
        throw ArgumentError("experiment needs at least one n and one seed");
    }
    for (auto n : ns) {
        const auto k = rule.for_n(n);
        if (n < 3 || k < 1 || k + 1 > n) {
            throw ArgumentError("invalid (n, k) = (" + std::to_string(n) + ", " +
                                std::to_string(k) + ")");
        }
    }
    TheoryExperiment out;
    out.rows.resize(ns.size() * seeds_per_n);
    parallel_for(out.rows.size(), threads, [&](std::size_t cell) {
        const std::size_t n = ns[cell / seeds_per_n];
        const std::uint64_t seed = base_seed + cell % seeds_per_n;
        const std::size_t k = rule.for_n(n);
        const auto x = discrete_circle(n);
        const auto run = run_engine(EngineKind::tsne_knn, x, static_cast<double>(k), seed, params);
        const auto dist = distortion(x.values(), run.coords);
        out.rows[cell] = {n,
                          seed,
                          k,
                          dist.distortion,
                          dist.scale,
                          fragmentation_components(x.values(), run.coords),
                          run.final_objective};
    });
    for (std::size_t a = 0; a < ns.size(); ++a) {
        std::vector<double> l, s, c;
        for (std::size_t t = 0; t < seeds_per_n; ++t) {
            const auto& row = out.rows[a * seeds_per_n + t];
            l.push_back(row.distortion);
            s.push_back(row.scale);
            c.push_back(static_cast<double>(row.components));
        }
        out.summary.push_back({ns[a], rule.for_n(ns[a]), median(l), median(s), median(c)});
    }
    return out;
}

std::string theory_rows_csv(std::span<const TheoryRow> rows) {
    std::string out = "n,seed,k,L,S,components,objective\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n) + "," + std::to_string(r.seed) + "," + std::to_string(r.k) +
               "," + io::format_number(r.distortion) + "," + io::format_number(r.scale) + "," +
               std::to_string(r.components) + "," + io::format_number(r.objective) + "\n";
    }
    return out;
}

std::string theory_summary_csv(std::span<const TheorySummary> summary) {
    std::string out = "n,k,median_L,median_S,median_components\n";
    for (const auto& s : summary) {
        out += std::to_string(s.n) + "," + std::to_string(s.k) + "," +
               io::format_number(s.median_distortion) + "," + io::format_number(s.median_scale) +
               "," + io::format_number(s.median_components) + "\n";
    }
    return out;
}

std::string theory_summary_json(std::span<const TheorySummary> summary) {
    auto arr = nlohmann::json::array();
    for (const auto& s : summary) {
        arr.push_back({{"n", s.n},
                       {"k", s.k},
                       {"median_L", io::round9(s.median_distortion)},
                       {"median_S", io::round9(s.median_scale)},
                       {"median_components", io::round9(s.median_components)}});
    }
    nlohmann::json j;
    j["summary"] = arr;
    return j.dump(2) + "\n";
}

} // namespace ness
