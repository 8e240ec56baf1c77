#include "doctest.h"

#include "ness/error.hpp"
#include "ness/metrics.hpp"

#include "json.hpp"

#include <cmath>
#include <numeric>
#include <algorithm>
#include <random>

using namespace ness;

namespace {

Matrix line_points(std::vector<double> xs) {
    Matrix m(xs.size(), 2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        m(i, 0) = xs[i];
    }
    return m;
}

Matrix gaussian(std::size_t n, std::size_t p, std::mt19937& gen, double sd = 1.0) {
    std::normal_distribution<double> g(0.0, sd);
    Matrix m(n, p);
    for (std::size_t t = 0; t < n * p; ++t) {
        m.data()[t] = g(gen);
    }
    return m;
}

Matrix rigid(const Matrix& y, double angle, double scale) {
    Matrix out(y.rows(), 2);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        out(i, 0) = scale * (std::cos(angle) * y(i, 0) - std::sin(angle) * y(i, 1)) + 3.0;
        out(i, 1) = scale * (std::sin(angle) * y(i, 0) + std::cos(angle) * y(i, 1)) - 1.0;
    }
    return out;
}

// Two-sided Student t tail by Simpson integration of the density.
double t_two_sided(double t, double df) {
    const double c = std::tgamma((df + 1) / 2) / (std::sqrt(df * M_PI) * std::tgamma(df / 2));
    auto f = [&](double u) { return c * std::pow(1.0 + u * u / df, -(df + 1) / 2); };
    const int panels = 200000;
    const double h = std::abs(t) / panels;
    double s = f(0.0) + f(std::abs(t));
    for (int i = 1; i < panels; ++i) {
        s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    }
    return 1.0 - 2.0 * s * h / 3.0;
}

} // namespace

TEST_CASE("silhouette") {
    const auto y = line_points({0, 1, 10, 11});
    const LabelVector ab({"A", "A", "B", "B"});
    CHECK(silhouette(y, ab) == doctest::Approx(0.8997).epsilon(1e-4));
    const double hand = ((10.5 - 1.0) / 10.5 + (9.5 - 1.0) / 9.5) * 2.0 / 4.0;
    CHECK(std::abs(silhouette(y, ab) - hand) < 1e-6);
    CHECK(silhouette(y, LabelVector({"B", "B", "A", "A"})) == silhouette(y, ab));

    const auto twin = line_points({0, 1, 2, 0, 1, 2});
    // Each point: a = mean over its two clustermates, b = mean over the 3 copies.
    CHECK(silhouette(twin, LabelVector({"a", "a", "a", "b", "b", "b"})) ==
          doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    const auto far = line_points({0, 1e-6, 1e6, 1e6 + 1e-6});
    CHECK(silhouette(far, ab) == doctest::Approx(1.0).epsilon(1e-9));

    // A singleton contributes 0: the other three points give the mean.
    const auto s = silhouette(line_points({0, 1, 10, 50}), LabelVector({"A", "A", "B", "C"}));
    const double a0 = 1.0 - 1.0 / 10.0;
    const double a1 = 1.0 - 1.0 / 9.0;
    CHECK(s == doctest::Approx((a0 + a1) / 4.0));
    CHECK_THROWS_AS(silhouette(y, LabelVector({"A", "A", "A", "A"})), ArgumentError);

    std::mt19937 gen(4);
    const auto pts = gaussian(60, 2, gen);
    std::vector<std::string> lab;
    for (int i = 0; i < 60; ++i) {
        lab.push_back(i % 3 == 0 ? "x" : (i % 3 == 1 ? "y" : "z"));
    }
    const double v = silhouette(pts, LabelVector(lab));
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
    CHECK(silhouette(rigid(pts, 0.7, 1.0), LabelVector(lab)) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("correlation score") {
    std::mt19937 gen(8);
    const auto x = gaussian(30, 2, gen);
    Matrix twice = x;
    for (std::size_t t = 0; t < 60; ++t) {
        twice.data()[t] *= 2.0;
    }
    CHECK(std::abs(correlation_score(x, twice) - 1.0) < 1e-9);
    CHECK(std::abs(correlation_score(x, rigid(x, 1.1, 5.0)) - 1.0) < 1e-9);

    // Hand oracle on 4 points.
    const Matrix a(4, 2, std::vector<double>{0, 0, 1, 0, 0, 2, 3, 3});
    const Matrix b(4, 2, std::vector<double>{0, 0, 2, 1, -1, 1, 1, 4});
    std::vector<double> da, db;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            da.push_back(std::hypot(a(i, 0) - a(j, 0), a(i, 1) - a(j, 1)));
            db.push_back(std::hypot(b(i, 0) - b(j, 0), b(i, 1) - b(j, 1)));
        }
    }
    const double ma = std::accumulate(da.begin(), da.end(), 0.0) / 6;
    const double mb = std::accumulate(db.begin(), db.end(), 0.0) / 6;
    double sab = 0, saa = 0, sbb = 0;
    for (int t = 0; t < 6; ++t) {
        sab += (da[t] - ma) * (db[t] - mb);
        saa += (da[t] - ma) * (da[t] - ma);
        sbb += (db[t] - mb) * (db[t] - mb);
    }
    CHECK(correlation_score(a, b) == doctest::Approx(sab / std::sqrt(saa * sbb)).epsilon(1e-12));

    // Distances (1, 3, 2) against (4, 2, 2).
    CHECK(correlation_score(line_points({0, 1, 3}), line_points({0, 4, 2})) ==
          doctest::Approx(-std::sqrt(3.0) / 2.0));
    CHECK_THROWS_AS(correlation_score(x, Matrix(30, 2)), NumericError);
    CHECK_THROWS_AS(correlation_score(Matrix(2, 2), Matrix(2, 2)), ArgumentError);
}

TEST_CASE("concordance") {
    std::mt19937 gen(3);
    const auto x = gaussian(200, 5, gen);
    CHECK(concordance(x, x, 10) == 1.0);
    CHECK(concordance(x, x, 199) == 1.0);
    const auto y = gaussian(80, 2, gen);
    CHECK(concordance(y, rigid(y, 2.0, 0.25), 7) == 1.0);

    const std::size_t n = 300, k = 30;
    const auto base = gaussian(n, 2, gen);
    std::vector<double> vals;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), gen);
        vals.push_back(concordance(base, base.select_rows(perm), k));
    }
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / 20;
    const double chance = static_cast<double>(k) / (n - 1);
    // Per point the overlap is hypergeometric; 300 points average it down.
    const double sd = std::sqrt(chance * (1 - chance) * (n - 1 - k) / (n - 2) / k / n);
    CHECK(std::abs(mean - chance) < 3 * sd + 0.01);
    CHECK_THROWS_AS(concordance(x, x, 200), ArgumentError);
}

TEST_CASE("label neighborhoods on an alternating chain") {
    const auto y = line_points({0, 1, 2, 3, 4, 5, 6, 7});
    const LabelVector alt({"A", "B", "A", "B", "A", "B", "A", "B"});
    // Ends: one same-label neighbor at distance 2; interior: both neighbors opposite.
    CHECK(neighbor_purity(y, alt, 2) == doctest::Approx(1.0 / 8.0));
    CHECK(local_simpson(y, alt, 2) == doctest::Approx((6 * 1.0 + 2 * 0.5) / 8.0));
    const LabelVector same(std::vector<std::string>(8, "A"));
    CHECK(neighbor_purity(y, same, 3) == 1.0);
    CHECK(local_simpson(y, same, 3) == 1.0);

    std::mt19937 gen(6);
    const auto pts = gaussian(100, 2, gen);
    std::vector<std::string> lab;
    for (int i = 0; i < 100; ++i) {
        lab.push_back(std::to_string(i % 4));
    }
    const LabelVector labels(lab);
    const double s = local_simpson(pts, labels, 10);
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
    CHECK(neighbor_purity(rigid(pts, 0.3, 1.0), labels, 10) ==
          doctest::Approx(neighbor_purity(pts, labels, 10)));
}

TEST_CASE("metrics report") {
    std::mt19937 gen(12);
    const auto x = gaussian(40, 3, gen);
    const auto y = gaussian(40, 2, gen);
    const auto plain = evaluate_metrics(x, y, nullptr);
    CHECK_FALSE(plain.silhouette);
    CHECK_FALSE(plain.neighbor_purity);
    CHECK_FALSE(plain.local_simpson);
    auto j = nlohmann::json::parse(metrics_json(plain));
    CHECK(j.contains("correlation"));
    CHECK(j.contains("concordance"));
    CHECK_FALSE(j.contains("silhouette"));
    CHECK(j["parameters"]["concordance_k"] == 39);

    std::vector<std::string> lab;
    for (int i = 0; i < 40; ++i) {
        lab.push_back(i < 20 ? "a" : "b");
    }
    const LabelVector labels(lab);
    const auto full = evaluate_metrics(x, y, &labels);
    j = nlohmann::json::parse(metrics_json(full));
    for (const char* key :
         {"correlation", "concordance", "silhouette", "neighbor_purity", "local_simpson"}) {
        CHECK(j.contains(key));
    }
    // Clamped k = n - 1 sees the whole set.
    CHECK(full.concordance == 1.0);
}

TEST_CASE("density profile") {
    std::mt19937 gen(21);
    const auto uniform = gaussian(300, 2, gen);
    std::vector<double> flat(300, 0.8);
    const std::vector<double> pct{100};
    const auto all = local_density_profile(uniform, flat, pct);
    CHECK(all[0].count == 300);
    CHECK(all[0].mean_normalized_distance == doctest::Approx(1.0).epsilon(0.15));

    // Dense cluster with high S, sparse cluster with low S.
    Matrix mix(200, 2);
    std::normal_distribution<double> g;
    std::vector<double> s(200);
    for (std::size_t i = 0; i < 200; ++i) {
        const bool dense = i < 100;
        mix(i, 0) = (dense ? 0.1 : 1.0) * g(gen) + (dense ? 0.0 : 10.0);
        mix(i, 1) = (dense ? 0.1 : 1.0) * g(gen);
        s[i] = dense ? 0.9 : 0.3;
    }
    const std::vector<double> steps{10, 25, 50, 75, 100};
    for (auto norm : {DensityNormalization::median_of_means,
                      DensityNormalization::median_of_neighbor_distances}) {
        const auto prof = local_density_profile(mix, s, steps, norm);
        for (std::size_t t = 1; t < prof.size(); ++t) {
            CHECK(prof[t].mean_normalized_distance >=
                  prof[t - 1].mean_normalized_distance - 1e-12);
        }
        CHECK(prof.back().mean_normalized_distance > 2.0 * prof.front().mean_normalized_distance);
    }
    CHECK_THROWS_AS(local_density_profile(gaussian(30, 2, gen), std::vector<double>(30, 1.0), pct),
                    ArgumentError);
    const std::vector<double> bad{0};
    CHECK_THROWS_AS(local_density_profile(uniform, flat, bad), ArgumentError);
}

TEST_CASE("removal experiment bookkeeping") {
    const auto x = generate_curve(60, 3, 0.1, 5);
    OptimizerParams quick;
    quick.iterations = 300;
    const TsneEmbedder engine(EngineKind::tsne_perplexity, quick);
    RemovalOptions opt;
    opt.gcp = 8;
    opt.runs = 3;
    opt.k = 5;
    opt.concordance_k = 10;
    opt.purity_k = 5;
    const auto baseline = collect_runs(engine, x, opt.gcp, opt.runs, opt.base_seed);
    const auto rep = stability_report(neighbor_count_matrix(baseline, opt.k), opt.lambda);
    const std::vector<double> fractions{0.0, 0.2};
    const auto rows = removal_experiment(engine, x, baseline, rep.local, fractions, opt);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].removed == 0);
    CHECK(rows[0].delta_global_pct == 0.0);
    CHECK(rows[0].delta_concordance_pct == 0.0);
    REQUIRE(rows[0].delta_purity_pct);
    CHECK(*rows[0].delta_purity_pct == 0.0);
    CHECK(rows[1].removed == 12);
    CHECK(std::isfinite(rows[1].delta_concordance_pct));
    CHECK(removal_csv(rows).rfind("fraction,removed,delta_global_pct", 0) == 0);

    const std::vector<double> too_many{0.5};
    CHECK_THROWS_AS(removal_experiment(engine, x, baseline, rep.local, too_many, opt),
                    ArgumentError);
}

TEST_CASE("ranks and multiple testing") {
    const std::vector<double> v{3, 1, 3, 2};
    CHECK(mid_ranks(v) == std::vector<double>{3.5, 1, 3.5, 2});

    const std::vector<double> p{0.01, 0.04, 0.03, 0.005};
    const auto adj = benjamini_hochberg(p);
    CHECK(adj[0] == doctest::Approx(0.02));
    CHECK(adj[1] == doctest::Approx(0.04));
    CHECK(adj[2] == doctest::Approx(0.04));
    CHECK(adj[3] == doctest::Approx(0.02));

    std::mt19937 gen(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> raw(1 + trial % 25);
        for (auto& r : raw) {
            r = u(gen) < 0.2 ? u(gen) * 1e-3 : u(gen);
        }
        const auto a = benjamini_hochberg(raw);
        std::vector<std::size_t> order(raw.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto i, auto j) { return raw[i] < raw[j]; });
        for (std::size_t t = 0; t < raw.size(); ++t) {
            CHECK(a[t] >= raw[t]);
            CHECK(a[t] <= 1.0);
            if (t > 0) {
                CHECK(a[order[t]] >= a[order[t - 1]]);
            }
        }
    }
}

TEST_CASE("feature association") {
    // n = 6, no ties: Spearman from rank differences.
    const std::vector<double> s{0.2, 0.9, 0.4, 0.7, 0.5, 0.1};
    const Matrix f(6, 3, std::vector<double>{
                             1, 50, 5,  //
                             5, 10, 3,  //
                             2, 40, 9,  //
                             4, 20, 1,  //
                             3, 30, 7,  //
                             0, 60, 2});
    const auto rows = feature_association(f, s, {"up", "down", "mixed"});
    const auto rs = mid_ranks(s);
    std::vector<double> p_raw;
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> col(6);
        for (std::size_t i = 0; i < 6; ++i) {
            col[i] = f(i, c);
        }
        const auto rc = mid_ranks(col);
        double d2 = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            d2 += (rs[i] - rc[i]) * (rs[i] - rc[i]);
        }
        const double rho = 1.0 - 6.0 * d2 / (6.0 * 35.0);
        CHECK(rows[c].rho == doctest::Approx(rho).epsilon(1e-12));
        if (std::abs(rho) < 1.0) {
            const double t = rho * std::sqrt(4.0 / (1.0 - rho * rho));
            p_raw.push_back(t_two_sided(t, 4.0));
            CHECK(rows[c].p == doctest::Approx(p_raw.back()).epsilon(1e-7));
        } else {
            p_raw.push_back(0.0);
            CHECK(rows[c].p == 0.0);
        }
    }
    CHECK(rows[0].rho == 1.0);
    CHECK(rows[0].direction == 1);
    CHECK(rows[1].rho == -1.0);
    CHECK(rows[1].direction == -1);
    CHECK(rows[2].name == "mixed");
    // BH over the three raw p-values, by hand.
    std::vector<std::size_t> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p_raw[a] < p_raw[b]; });
    std::vector<double> adj(3);
    double running = 1.0;
    for (int t = 2; t >= 0; --t) {
        running = std::min(running, p_raw[order[t]] * 3.0 / (t + 1));
        adj[order[t]] = running;
    }
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(rows[c].p_adjusted == doctest::Approx(adj[c]).epsilon(1e-7));
    }

    const Matrix with_const(6, 2, std::vector<double>{1, 7, 2, 7, 3, 7, 4, 7, 5, 7, 6, 7});
    const auto rc = feature_association(with_const, s);
    CHECK(rc[0].applicable);
    CHECK_FALSE(rc[1].applicable);
    CHECK(rc[0].p_adjusted == doctest::Approx(rc[0].p));
    CHECK(association_csv(rc).find("2,feature2,0,,,,") != std::string::npos);
    CHECK_THROWS_AS(feature_association(f, std::vector<double>(6, 0.5)), ArgumentError);
}
