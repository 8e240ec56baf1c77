#include "ness/metrics.hpp"

#include "ness/error.hpp"
#include "ness/io.hpp"
#include "ness/knn.hpp"

#include "json.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ness {

namespace {

void check_same_n(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) {
        throw ArgumentError("point counts differ: " + std::to_string(x.rows()) + " vs " +
                            std::to_string(y.rows()));
    }
}

void check_k(std::size_t n, std::size_t k) {
    if (k < 1 || k + 1 > n) {
        throw ArgumentError("k must lie in [1, n-1]; got k=" + std::to_string(k) +
                            " with n=" + std::to_string(n));
    }
}

void check_labels(const Matrix& y, const LabelVector& labels) {
    if (labels.size() != y.rows()) {
        throw ArgumentError("label count does not match point count");
    }
}

KnnGraph euclidean_knn(const Matrix& points, std::size_t k) {
    return points.cols() <= 3 ? knn_graph_kdtree(points, k)
                              : knn_graph(points, k, Metric::euclidean);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw NumericError("correlation undefined for a constant vector");
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> upper_distances(const Matrix& x) {
    std::vector<double> out;
    out.reserve(x.rows() * (x.rows() - 1) / 2);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = i + 1; j < x.rows(); ++j) {
            out.push_back(point_distance(x.row(i), x.row(j), Metric::euclidean));
        }
    }
    return out;
}

} // namespace

double correlation_score(const Matrix& x, const Matrix& y) {
    check_same_n(x, y);
    if (x.rows() < 3) {
        throw ArgumentError("correlation score needs n >= 3");
    }
    return pearson(upper_distances(y), upper_distances(x));
}

double concordance(const Matrix& x, const Matrix& y, std::size_t k) {
    check_same_n(x, y);
    check_k(x.rows(), k);
    const auto gx = euclidean_knn(x, k);
    const auto gy = euclidean_knn(y, k);
    double total = 0.0;
    std::vector<std::uint32_t> a(k), b(k);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto nx = gx.neighbors(i);
        auto ny = gy.neighbors(i);
        a.assign(nx.begin(), nx.end());
        b.assign(ny.begin(), ny.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<std::uint32_t> shared;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
        total += static_cast<double>(shared.size()) / static_cast<double>(k);
    }
    return total / static_cast<double>(x.rows());
}

double silhouette(const Matrix& y, const LabelVector& labels) {
    check_labels(y, labels);
    const std::size_t n = y.rows();
    const std::size_t c = labels.categories().size();
    if (c < 2) {
        throw ArgumentError("silhouette needs at least 2 label categories");
    }
    const auto& code = labels.codes();
    std::vector<std::size_t> sizes(c, 0);
    for (auto v : code) {
        ++sizes[v];
    }
    double total = 0.0;
    std::vector<double> sums(c);
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[code[i]] == 1) {
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sums[code[j]] += point_distance(y.row(i), y.row(j), Metric::euclidean);
            }
        }
        const double a = sums[code[i]] / static_cast<double>(sizes[code[i]] - 1);
        double b = INFINITY;
        for (std::size_t cat = 0; cat < c; ++cat) {
            if (cat != code[i]) {
                b = std::min(b, sums[cat] / static_cast<double>(sizes[cat]));
            }
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

double neighbor_purity(const Matrix& y, const LabelVector& labels, std::size_t k) {
    check_labels(y, labels);
    check_k(y.rows(), k);
    const auto g = euclidean_knn(y, k);
    const auto& code = labels.codes();
    double total = 0.0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
        std::size_t same = 0;
        for (auto j : g.neighbors(i)) {
            same += code[j] == code[i];
        }
        total += static_cast<double>(same) / static_cast<double>(k);
    }
    return total / static_cast<double>(y.rows());
}

double local_simpson(const Matrix& y, const LabelVector& labels, std::size_t k) {
    check_labels(y, labels);
    check_k(y.rows(), k);
    const auto g = euclidean_knn(y, k);
    const auto& code = labels.codes();
    std::vector<std::size_t> counts(labels.categories().size());
    double total = 0.0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
        std::fill(counts.begin(), counts.end(), 0);
        for (auto j : g.neighbors(i)) {
            ++counts[code[j]];
        }
        double score = 0.0;
        for (auto cnt : counts) {
            const double frac = static_cast<double>(cnt) / static_cast<double>(k);
            score += frac * frac;
        }
        total += score;
    }
    return total / static_cast<double>(y.rows());
}

MetricsReport evaluate_metrics(const Matrix& x, const Matrix& y, const LabelVector* labels,
                               MetricsOptions options) {
    const std::size_t cap = y.rows() - 1;
    options.concordance_k = std::min(options.concordance_k, cap);
    options.purity_k = std::min(options.purity_k, cap);
    options.simpson_k = std::min(options.simpson_k, cap);
    MetricsReport report;
    report.parameters = options;
    report.correlation = correlation_score(x, y);
    report.concordance = concordance(x, y, options.concordance_k);
    if (labels) {
        report.silhouette = silhouette(y, *labels);
        report.neighbor_purity = neighbor_purity(y, *labels, options.purity_k);
        report.local_simpson = local_simpson(y, *labels, options.simpson_k);
    }
    return report;
}

std::string metrics_json(const MetricsReport& report) {
    nlohmann::json j;
    j["correlation"] = io::round9(report.correlation);
    j["concordance"] = io::round9(report.concordance);
    if (report.silhouette) j["silhouette"] = io::round9(*report.silhouette);
    if (report.neighbor_purity) j["neighbor_purity"] = io::round9(*report.neighbor_purity);
    if (report.local_simpson) j["local_simpson"] = io::round9(*report.local_simpson);
    j["parameters"] = {{"concordance_k", report.parameters.concordance_k},
                       {"purity_k", report.parameters.purity_k},
                       {"simpson_k", report.parameters.simpson_k}};
    return j.dump(2) + "\n";
}

std::vector<DensityRow> local_density_profile(const Matrix& x_reduced,
                                              std::span<const double> local,
                                              std::span<const double> percentiles,
                                              DensityNormalization normalization) {
    constexpr std::size_t kNeighbors = 30;
    const std::size_t n = x_reduced.rows();
    if (n <= kNeighbors) {
        throw ArgumentError("density profile needs more than 30 points, got " +
                            std::to_string(n));
    }
    if (local.size() != n) {
        throw ArgumentError("stability score count does not match point count");
    }
    const auto g = knn_graph(x_reduced, kNeighbors, Metric::euclidean);
    std::vector<double> mean_dist(n);
    std::vector<double> all_dists;
    all_dists.reserve(n * kNeighbors);
    for (std::size_t i = 0; i < n; ++i) {
        auto ds = g.distances(i);
        mean_dist[i] = std::accumulate(ds.begin(), ds.end(), 0.0) / kNeighbors;
        all_dists.insert(all_dists.end(), ds.begin(), ds.end());
    }
    std::vector<double> pool =
        normalization == DensityNormalization::median_of_means ? mean_dist : all_dists;
    std::sort(pool.begin(), pool.end());
    const double scale = quantile_type7(pool, 0.5);
    if (!(scale > 0.0)) {
        throw NumericError("median neighbor distance is zero; density undefined");
    }

    std::vector<double> sorted_s(local.begin(), local.end());
    std::sort(sorted_s.begin(), sorted_s.end());
    std::vector<DensityRow> rows;
    for (double p : percentiles) {
        if (!(p > 0.0) || p > 100.0) {
            throw ArgumentError("percentiles must lie in (0, 100]");
        }
        const double threshold = quantile_type7(sorted_s, 1.0 - p / 100.0);
        DensityRow row{p, 0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            if (local[i] >= threshold) {
                row.mean_normalized_distance += mean_dist[i] / scale;
                ++row.count;
            }
        }
        row.mean_normalized_distance /= static_cast<double>(row.count);
        rows.push_back(row);
    }
    return rows;
}

namespace {

struct EnsembleQuality {
    double global = 0.0;
    double concordance = 0.0;
    std::optional<double> purity;
};

EnsembleQuality ensemble_quality(const DataMatrix& x, const RunEnsemble& ensemble,
                                 const RemovalOptions& options) {
    const std::size_t cap = x.n() - 1;
    EnsembleQuality q;
    q.global = stability_report(
                   neighbor_count_matrix(ensemble, std::min(options.k, cap), options.threads),
                   options.lambda)
                   .global;
    double conc = 0.0, purity = 0.0;
    for (const auto& run : ensemble.runs()) {
        conc += concordance(x.values(), run.coords, std::min(options.concordance_k, cap));
        if (x.labels()) {
            purity += neighbor_purity(run.coords, *x.labels(), std::min(options.purity_k, cap));
        }
    }
    const double runs = static_cast<double>(ensemble.size());
    q.concordance = conc / runs;
    if (x.labels()) {
        q.purity = purity / runs;
    }
    return q;
}

double relative_pct(double after, double before) { return 100.0 * (after / before - 1.0); }

} // namespace

std::vector<RemovalRow> removal_experiment(const Embedder& engine, const DataMatrix& x,
                                           const RunEnsemble& baseline,
                                           std::span<const double> local,
                                           std::span<const double> fractions,
                                           const RemovalOptions& options) {
    const std::size_t n = x.n();
    if (local.size() != n || baseline.n() != n) {
        throw ArgumentError("baseline ensemble and stability scores must match the data");
    }
    for (double q : fractions) {
        if (!(q >= 0.0) || q > 0.5) {
            throw ArgumentError("removal fractions must lie in [0, 0.5]");
        }
        const auto keep = n - static_cast<std::size_t>(std::floor(q * static_cast<double>(n)));
        if (keep < 31) {
            throw ArgumentError("removal would leave fewer than 31 points");
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return local[a] < local[b]; });

    const auto base = ensemble_quality(x, baseline, options);
    std::vector<RemovalRow> rows;
    for (double q : fractions) {
        RemovalRow row;
        row.fraction = q;
        row.removed = static_cast<std::size_t>(std::floor(q * static_cast<double>(n)));
        if (row.removed == 0) {
            if (base.purity) row.delta_purity_pct = 0.0;
            rows.push_back(row);
            continue;
        }
        std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(row.removed),
                                      order.end());
        std::sort(kept.begin(), kept.end());
        const auto subset = x.select(kept);
        const auto ensemble = collect_runs(engine, subset, options.gcp, options.runs,
                                           options.base_seed, options.threads);
        const auto after = ensemble_quality(subset, ensemble, options);
        row.delta_global_pct = relative_pct(after.global, base.global);
        row.delta_concordance_pct = relative_pct(after.concordance, base.concordance);
        if (base.purity && after.purity) {
            row.delta_purity_pct = relative_pct(*after.purity, *base.purity);
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> mid_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

std::vector<double> benjamini_hochberg(std::span<const double> p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const double scaled = p[order[r]] * (static_cast<double>(m) / static_cast<double>(r + 1));
        running = std::min(running, scaled);
        adjusted[order[r]] = std::min(1.0, running);
    }
    return adjusted;
}

std::vector<AssociationRow> feature_association(const Matrix& features,
                                                std::span<const double> local,
                                                const std::vector<std::string>& names) {
    const std::size_t n = features.rows();
    const std::size_t m = features.cols();
    if (m < 1) {
        throw ArgumentError("feature matrix has no columns");
    }
    if (local.size() != n) {
        throw ArgumentError("stability score count does not match feature rows");
    }
    if (n < 3) {
        throw ArgumentError("association needs at least 3 points");
    }
    if (std::all_of(local.begin(), local.end(), [&](double v) { return v == local[0]; })) {
        throw ArgumentError("stability scores are constant; association undefined");
    }
    if (!names.empty() && names.size() != m) {
        throw ArgumentError("feature name count does not match columns");
    }
    const auto s_ranks = mid_ranks(local);
    const boost::math::students_t dist(static_cast<double>(n - 2));

    std::vector<AssociationRow> rows(m);
    std::vector<double> column(n);
    std::vector<double> family_p;
    std::vector<std::size_t> family;
    for (std::size_t f = 0; f < m; ++f) {
        auto& row = rows[f];
        row.feature = f;
        row.name = names.empty() ? "feature" + std::to_string(f + 1) : names[f];
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = features(i, f);
        }
        if (std::all_of(column.begin(), column.end(), [&](double v) { return v == column[0]; })) {
            row.applicable = false;
            row.rho = std::numeric_limits<double>::quiet_NaN();
            row.p = std::numeric_limits<double>::quiet_NaN();
            row.p_adjusted = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        row.rho = std::clamp(pearson(mid_ranks(column), s_ranks), -1.0, 1.0);
        const double denom = 1.0 - row.rho * row.rho;
        if (denom <= 0.0) {
            row.p = 0.0;
        } else {
            const double t = row.rho * std::sqrt(static_cast<double>(n - 2) / denom);
            row.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
        }
        row.direction = row.rho > 0.0 ? 1 : (row.rho < 0.0 ? -1 : 0);
        family.push_back(f);
        family_p.push_back(row.p);
    }
    const auto adjusted = benjamini_hochberg(family_p);
    for (std::size_t t = 0; t < family.size(); ++t) {
        rows[family[t]].p_adjusted = adjusted[t];
    }
    return rows;
}

std::string association_csv(std::span<const AssociationRow> rows) {
    std::string out = "feature,name,applicable,rho,p,p_adjusted,direction\n";
    for (const auto& r : rows) {
        out += std::to_string(r.feature + 1) + "," + r.name + "," + (r.applicable ? "1" : "0") +
               ",";
        if (r.applicable) {
            out += io::format_number(r.rho) + "," + io::format_number(r.p) + "," +
                   io::format_number(r.p_adjusted) + "," + std::to_string(r.direction);
        } else {
            out += ",,,";
        }
        out += "\n";
    }
    return out;
}

std::string density_csv(std::span<const DensityRow> rows) {
    std::string out = "percentile,count,mean_normalized_distance\n";
    for (const auto& r : rows) {
        out += io::format_number(r.percentile) + "," + std::to_string(r.count) + "," +
               io::format_number(r.mean_normalized_distance) + "\n";
    }
    return out;
}

std::string removal_csv(std::span<const RemovalRow> rows) {
    std::string out = "fraction,removed,delta_global_pct,delta_concordance_pct,delta_purity_pct\n";
    for (const auto& r : rows) {
        out += io::format_number(r.fraction) + "," + std::to_string(r.removed) + "," +
               io::format_number(r.delta_global_pct) + "," +
               io::format_number(r.delta_concordance_pct) + "," +
               (r.delta_purity_pct ? io::format_number(*r.delta_purity_pct) : "") + "\n";
    }
    return out;
}

} // namespace ness
