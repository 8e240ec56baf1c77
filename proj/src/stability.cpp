#include "ness/stability.hpp"

#include "ness/error.hpp"
#include "ness/io.hpp"
#include "ness/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace ness {

RunEnsemble::RunEnsemble(std::vector<EmbeddingRun> runs) : runs_(std::move(runs)) {
    if (runs_.empty()) {
        throw ArgumentError("an ensemble needs at least one run");
    }
    for (std::size_t i = 1; i < runs_.size(); ++i) {
        if (runs_[i].n() != runs_.front().n()) {
            throw ArgumentError("run " + std::to_string(i + 1) + " has " +
                                std::to_string(runs_[i].n()) + " points, expected " +
                                std::to_string(runs_.front().n()));
        }
    }
}

std::vector<std::uint64_t> RunEnsemble::seeds() const {
    std::vector<std::uint64_t> out;
    out.reserve(runs_.size());
    for (const auto& run : runs_) {
        out.push_back(run.seed);
    }
    return out;
}

RunEnsemble collect_runs(const Embedder& engine, const DataMatrix& x, double gcp, std::size_t runs,
                         std::uint64_t base_seed, unsigned threads,
                         std::shared_ptr<const DistanceMatrix> distances) {
    if (runs < 2) {
        throw ArgumentError("stability needs at least 2 runs, got " + std::to_string(runs));
    }
    engine.check_gcp(gcp, x.n());
    if (!distances) {
        distances = std::make_shared<const DistanceMatrix>(
            pairwise_distances(x, engine.metric(), threads));
    }
    auto factory = engine.prepare(x, distances, gcp);
    std::vector<EmbeddingRun> out(runs);
    parallel_for(runs, threads, [&](std::size_t r) {
        try {
            out[r] = factory(base_seed + r);
        } catch (const NumericError& e) {
            throw NumericError("run " + std::to_string(r + 1) + ": " + e.what());
        } catch (const ArgumentError& e) {
            throw ArgumentError("run " + std::to_string(r + 1) + ": " + e.what());
        }
    });
    return RunEnsemble(std::move(out));
}

std::vector<KnnGraph> embedding_graphs(const RunEnsemble& ensemble, std::size_t k,
                                       unsigned threads) {
    std::vector<std::optional<KnnGraph>> slots(ensemble.size());
    parallel_for(ensemble.size(), threads, [&](std::size_t r) {
        slots[r] = knn_graph_kdtree(ensemble.runs()[r].coords, k);
    });
    std::vector<KnnGraph> graphs;
    graphs.reserve(slots.size());
    for (auto& g : slots) {
        graphs.push_back(std::move(*g));
    }
    return graphs;
}

NeighborCountMatrix::NeighborCountMatrix(std::size_t n, std::size_t runs, std::size_t k,
                                         std::vector<std::uint32_t> counts)
    : n_(n), runs_(runs), k_(k), counts_(std::move(counts)) {
    if (counts_.size() != n * n) {
        throw ValidationError("neighbor count storage does not match n*n");
    }
}

NeighborCountMatrix neighbor_count_matrix(std::span<const KnnGraph> graphs) {
    if (graphs.empty()) {
        throw ArgumentError("neighbor counts need at least one graph");
    }
    const std::size_t n = graphs.front().n();
    const std::size_t k = graphs.front().k();
    std::vector<std::uint32_t> counts(n * n, 0);
    for (const auto& g : graphs) {
        if (g.n() != n || g.k() != k) {
            throw ArgumentError("all graphs must share n and k");
        }
        for (std::size_t j = 0; j < n; ++j) {
            for (auto l : g.neighbors(j)) {
                ++counts[j * n + l];
            }
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = j + 1; l < n; ++l) {
            const auto m = std::max(counts[j * n + l], counts[l * n + j]);
            counts[j * n + l] = m;
            counts[l * n + j] = m;
        }
    }
    return NeighborCountMatrix(n, graphs.size(), k, std::move(counts));
}

NeighborCountMatrix neighbor_count_matrix(const RunEnsemble& ensemble, std::size_t k,
                                          unsigned threads) {
    const auto graphs = embedding_graphs(ensemble, k, threads);
    return neighbor_count_matrix(graphs);
}

double quantile_type7(std::span<const double> sorted, double lambda) {
    if (sorted.empty()) {
        throw ArgumentError("quantile of an empty set");
    }
    const double h = static_cast<double>(sorted.size() - 1) * lambda;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> local_stability(const NeighborCountMatrix& counts, double lambda) {
    if (!(lambda > 0.0) || !(lambda < 1.0)) {
        throw ArgumentError("lambda must lie in (0, 1)");
    }
    const double runs = static_cast<double>(counts.runs());
    std::vector<double> out(counts.n());
    std::vector<double> row;
    for (std::size_t j = 0; j < counts.n(); ++j) {
        row.clear();
        for (auto c : counts.row(j)) {
            if (c > 0) {
                row.push_back(static_cast<double>(c) / runs);
            }
        }
        if (row.empty()) {
            throw ValidationError("row " + std::to_string(j + 1) + " has no positive counts");
        }
        std::sort(row.begin(), row.end());
        out[j] = quantile_type7(row, lambda);
    }
    return out;
}

double global_stability(std::span<const double> local) {
    if (local.empty()) {
        throw ArgumentError("global stability of an empty score set");
    }
    return std::accumulate(local.begin(), local.end(), 0.0) / static_cast<double>(local.size());
}

StabilityReport stability_report(const NeighborCountMatrix& counts, double lambda) {
    StabilityReport report;
    report.local = local_stability(counts, lambda);
    report.global = global_stability(report.local);
    report.lambda = lambda;
    report.k = counts.k();
    report.runs = counts.runs();
    return report;
}

std::vector<double> instability(std::span<const double> local, bool transform) {
    std::vector<double> out;
    out.reserve(local.size());
    for (std::size_t j = 0; j < local.size(); ++j) {
        const double s = local[j];
        if (!(s > 0.0) || s > 1.0) {
            throw ArgumentError("stability score " + io::format_number(s) + " at point " +
                                std::to_string(j + 1) + " outside (0, 1]");
        }
        out.push_back(transform ? std::log(1.0 + 100.0 * std::log(1.0 / s)) : 1.0 / s);
    }
    return out;
}

namespace {

double median_of(std::vector<double>& values) {
    const std::size_t m = values.size();
    std::sort(values.begin(), values.end());
    return m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

std::size_t shared_count(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    std::size_t shared = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++shared;
            ++i;
            ++j;
        }
    }
    return shared;
}

} // namespace

RarenessReport rareness_scores(std::span<const KnnGraph> graphs) {
    const std::size_t runs = graphs.size();
    if (runs < 3) {
        throw ArgumentError("rareness scores need at least 3 runs, got " + std::to_string(runs));
    }
    const std::size_t n = graphs.front().n();
    const std::size_t k = graphs.front().k();
    // Neighbor lists sorted by index for linear-time intersection.
    std::vector<std::vector<std::uint32_t>> sorted(runs, std::vector<std::uint32_t>(n * k));
    for (std::size_t r = 0; r < runs; ++r) {
        if (graphs[r].n() != n || graphs[r].k() != k) {
            throw ArgumentError("all graphs must share n and k");
        }
        for (std::size_t l = 0; l < n; ++l) {
            auto nb = graphs[r].neighbors(l);
            auto dst = sorted[r].begin() + static_cast<std::ptrdiff_t>(l * k);
            std::copy(nb.begin(), nb.end(), dst);
            std::sort(dst, dst + static_cast<std::ptrdiff_t>(k));
        }
    }

    RarenessReport report;
    report.similarity = Matrix(runs, runs);
    std::vector<double> fractions(n);
    for (std::size_t i = 0; i < runs; ++i) {
        report.similarity(i, i) = 1.0;
        for (std::size_t j = i + 1; j < runs; ++j) {
            for (std::size_t l = 0; l < n; ++l) {
                const std::span<const std::uint32_t> a(sorted[i].data() + l * k, k);
                const std::span<const std::uint32_t> b(sorted[j].data() + l * k, k);
                fractions[l] = static_cast<double>(shared_count(a, b)) / static_cast<double>(k);
            }
            const double w = median_of(fractions);
            report.similarity(i, j) = w;
            report.similarity(j, i) = w;
        }
    }

    const double others = static_cast<double>(runs - 1);
    for (std::size_t i = 0; i < runs; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < runs; ++j) {
            if (j != i) mean += report.similarity(j, i);
        }
        mean /= others;
        double var = 0.0;
        for (std::size_t j = 0; j < runs; ++j) {
            if (j != i) {
                const double dev = report.similarity(j, i) - mean;
                var += dev * dev;
            }
        }
        var /= others;
        report.mean.push_back(mean);
        report.variance.push_back(var);
        report.rareness.push_back(1.0 / (std::max(mean, kRarenessEpsilon) *
                                         std::max(var, kRarenessEpsilon)));
    }
    const auto& r = report.rareness;
    report.rarest = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    report.least_rare = static_cast<std::size_t>(std::min_element(r.begin(), r.end()) - r.begin());
    report.degenerate = std::all_of(r.begin(), r.end(), [&](double v) { return v == r.front(); });
    return report;
}

RarenessReport rareness_scores(const RunEnsemble& ensemble, std::size_t k, unsigned threads) {
    if (ensemble.size() < 3) {
        throw ArgumentError("rareness scores need at least 3 runs, got " +
                            std::to_string(ensemble.size()));
    }
    const auto graphs = embedding_graphs(ensemble, k, threads);
    return rareness_scores(graphs);
}

std::string to_string(ScanRule rule) {
    return rule == ScanRule::sequential ? "sequential" : "top5pct";
}

ScanRule parse_scan_rule(const std::string& name) {
    if (name == "sequential") return ScanRule::sequential;
    if (name == "top5pct") return ScanRule::top5pct;
    throw ArgumentError("unknown rule '" + name + "' (expected sequential or top5pct)");
}

std::vector<double> default_gcp_grid(std::size_t n, bool log10) {
    if (n < 3) {
        throw ArgumentError("default grid needs n >= 3");
    }
    const double nn = static_cast<double>(n);
    const double hi = std::max(10.0, 10.0 * (log10 ? std::log10(nn) : std::log(nn)));
    const double cap = nn - 1.0;
    std::vector<double> grid;
    for (int i = 0; i < 5; ++i) {
        const double v = std::min(cap, std::round(10.0 + (hi - 10.0) * i / 4.0));
        if (grid.empty() || v > grid.back()) {
            grid.push_back(v);
        }
    }
    return grid;
}

std::optional<std::size_t> sequential_stop(std::span<const double> gs, ImprovementMode mode) {
    constexpr double kStableEnough = 0.9;
    constexpr double kMinGain = 0.05;
    if (gs.empty()) {
        return std::nullopt;
    }
    const std::size_t i = gs.size() - 1;
    if (i > 0) {
        const double gain = mode == ImprovementMode::relative ? gs[i] / gs[i - 1] - 1.0
                                                              : gs[i] - gs[i - 1];
        if (gain < kMinGain) {
            return i - 1;
        }
    }
    if (gs[i] > kStableEnough) {
        return i;
    }
    return std::nullopt;
}

std::size_t top5pct_choice(std::span<const double> gs) {
    if (gs.empty()) {
        throw ArgumentError("no scores to choose from");
    }
    const double best = *std::max_element(gs.begin(), gs.end());
    const double threshold = 0.95 * best;
    for (std::size_t i = 0; i < gs.size(); ++i) {
        if (gs[i] >= threshold) {
            return i;
        }
    }
    return gs.size() - 1;
}

GcpScanResult gcp_scan(const Embedder& engine, const DataMatrix& x, std::span<const double> gcps,
                       const ScanOptions& options) {
    if (gcps.empty()) {
        throw ArgumentError("gcp list is empty");
    }
    for (std::size_t i = 0; i < gcps.size(); ++i) {
        engine.check_gcp(gcps[i], x.n());
        if (i > 0 && !(gcps[i] > gcps[i - 1])) {
            throw ArgumentError("gcps must be strictly increasing");
        }
    }
    if (options.k < 1 || options.k + 1 > x.n()) {
        throw ArgumentError("k must lie in [1, n-1]");
    }
    auto distances = std::make_shared<const DistanceMatrix>(
        pairwise_distances(x, engine.metric(), options.threads));

    GcpScanResult result;
    result.trace.rule = options.rule;
    std::vector<double> scores;
    std::optional<std::size_t> stop;
    for (double gcp : gcps) {
        const auto start = std::chrono::steady_clock::now();
        auto ensemble = collect_runs(engine, x, gcp, options.runs, options.base_seed,
                                     options.threads, distances);
        auto report = stability_report(neighbor_count_matrix(ensemble, options.k, options.threads),
                                       options.lambda);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        result.trace.entries.push_back({gcp, report.global, elapsed.count()});
        scores.push_back(report.global);
        result.reports.push_back(std::move(report));
        result.ensembles.push_back(std::move(ensemble));
        if (options.rule == ScanRule::sequential) {
            stop = sequential_stop(scores, options.improvement);
            if (stop) {
                break;
            }
        }
    }
    if (options.rule == ScanRule::sequential) {
        if (stop) {
            result.recommended_index = *stop;
            result.trace.stop_reason =
                *stop + 1 == scores.size() ? "stability" : "no-improvement";
        } else {
            result.recommended_index = scores.size() - 1;
            result.trace.stop_reason = "exhausted";
        }
    } else {
        result.recommended_index = top5pct_choice(scores);
        result.trace.stop_reason = "full-scan";
    }
    result.trace.recommended = result.trace.entries[result.recommended_index].gcp;
    return result;
}

namespace {

nlohmann::json rounded(std::span<const double> values) {
    auto arr = nlohmann::json::array();
    for (double v : values) {
        arr.push_back(io::round9(v));
    }
    return arr;
}

} // namespace

std::string stability_json(const StabilityReport& report) {
    nlohmann::json j;
    j["local"] = rounded(report.local);
    j["global"] = io::round9(report.global);
    j["lambda"] = io::round9(report.lambda);
    j["k"] = report.k;
    j["N"] = report.runs;
    return j.dump(2) + "\n";
}

std::string rareness_json(const RarenessReport& report) {
    nlohmann::json j;
    auto w = nlohmann::json::array();
    for (std::size_t i = 0; i < report.similarity.rows(); ++i) {
        w.push_back(rounded(report.similarity.row(i)));
    }
    j["W"] = w;
    j["m"] = rounded(report.mean);
    j["v"] = rounded(report.variance);
    j["R"] = rounded(report.rareness);
    j["degenerate"] = report.degenerate;
    j["rarest"] = report.rarest + 1;
    j["least_rare"] = report.least_rare + 1;
    return j.dump(2) + "\n";
}

std::string scan_json(const GcpScanTrace& trace, bool include_timings) {
    nlohmann::json j;
    auto entries = nlohmann::json::array();
    for (const auto& e : trace.entries) {
        nlohmann::json row;
        row["gcp"] = io::round9(e.gcp);
        row["global"] = io::round9(e.global);
        if (include_timings) {
            row["wall_seconds"] = io::round9(e.wall_seconds);
        }
        entries.push_back(row);
    }
    j["entries"] = entries;
    j["recommended"] = io::round9(trace.recommended);
    j["rule"] = to_string(trace.rule);
    j["stop_reason"] = trace.stop_reason;
    return j.dump(2) + "\n";
}

std::string local_scores_csv(std::span<const double> local) {
    std::string out = "local\n";
    for (double v : local) {
        out += io::format_number(v) + "\n";
    }
    return out;
}

} // namespace ness
