#include "doctest.h"

#include "ness/dataset.hpp"
#include "ness/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

using namespace ness;

namespace {

// Arclength of (t, sin t) from 0 to x by composite Simpson with many panels.
double arclength_oracle(double x) {
    const int panels = 20000;
    const double h = x / panels;
    auto f = [](double t) { return std::sqrt(1.0 + std::cos(t) * std::cos(t)); };
    double sum = f(0.0) + f(x);
    for (int i = 1; i < panels; ++i) {
        sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
    }
    return sum * h / 3.0;
}

Matrix from_eigen(const Eigen::MatrixXd& a) {
    Matrix m(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            m(i, j) = a(i, j);
        }
    }
    return m;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd a(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            a(i, j) = m(i, j);
        }
    }
    return a;
}

// Matrix with prescribed singular values from random orthonormal factors.
Matrix with_spectrum(std::size_t n, std::size_t p, const std::vector<double>& sigma,
                     unsigned seed) {
    std::srand(seed);
    Eigen::MatrixXd u = Eigen::MatrixXd::Random(n, sigma.size()).householderQr().householderQ() *
                        Eigen::MatrixXd::Identity(n, sigma.size());
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(p, sigma.size()).householderQr().householderQ() *
                        Eigen::MatrixXd::Identity(p, sigma.size());
    Eigen::VectorXd s(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        s(i) = sigma[i];
    }
    return from_eigen(u * s.asDiagonal() * v.transpose());
}

} // namespace

TEST_CASE("csv parsing") {
    auto x = parse_matrix_csv("0,0\n1,0\n0,1\n");
    CHECK(x.n() == 3);
    CHECK(x.p() == 2);
    CHECK(x.values()(1, 0) == 1.0);
    CHECK_FALSE(x.labels());

    auto y = parse_matrix_csv("x,y,lab\n0,1,a\n2,3,b\n4,5,a\n", {.label_column = "lab"});
    CHECK(y.p() == 2);
    REQUIRE(y.labels());
    CHECK(y.labels()->labels() == std::vector<std::string>{"a", "b", "a"});
    CHECK(y.labels()->categories() == std::vector<std::string>{"a", "b"});
    CHECK(y.values()(2, 1) == 5.0);

    CHECK_THROWS_AS(parse_matrix_csv("0,0\nNaN,1\n"), ValidationError);
    CHECK_THROWS_AS(parse_matrix_csv("0,0\n1,inf\n"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_matrix_csv("0,0\n1,0\n2\n"), doctest::Contains("line 3"),
                         ParseError);
    CHECK_THROWS_WITH_AS(parse_matrix_csv("a,b\n0,0\n1,zz\n"), doctest::Contains("line 3"),
                         ParseError);
    CHECK_THROWS_AS(parse_matrix_csv("0,0\n1,1\n", {.label_column = "lab"}), ParseError);
    CHECK_THROWS_AS(parse_matrix_csv("x,y\n0,0\n1,1\n", {.label_column = "lab"}), ParseError);
    CHECK_THROWS(parse_matrix_csv("0,0\n"));
}

TEST_CASE("csv round trip keeps nine significant digits") {
    Matrix m(2, 2, std::vector<double>{0.123456789, -1e-7, 3.0, 12345.6789});
    const auto text = format_matrix_csv(m, {"a", "b"});
    CHECK(text == "a,b\n0.123456789,-1e-07\n3,12345.6789\n");
    CHECK(parse_matrix_csv(text).values() == m);
}

TEST_CASE("curve sampling") {
    SUBCASE("labels balanced") {
        const auto x = generate_curve(2000, 2, 0.0, 7);
        REQUIRE(x.labels());
        std::map<std::string, int> count;
        for (const auto& l : x.labels()->labels()) {
            ++count[l];
        }
        CHECK(count.size() == 5);
        for (const auto& [label, c] : count) {
            CHECK(c == 400);
        }
    }
    SUBCASE("segments have equal arclength") {
        const auto x = generate_curve(500, 4, 0.0, 3);
        const double total = arclength_oracle(2.0 * std::numbers::pi);
        CHECK(curve_length() == doctest::Approx(total).epsilon(1e-10));
        for (std::size_t i = 0; i < x.n(); ++i) {
            const double t = x.values()(i, 0);
            CHECK(x.values()(i, 1) == doctest::Approx(std::sin(t)).epsilon(1e-9));
            CHECK(x.values()(i, 2) == 0.0);
            CHECK(x.values()(i, 3) == 0.0);
            const double frac = 5.0 * arclength_oracle(t) / total;
            if (std::abs(frac - std::round(frac)) < 1e-7) {
                continue;
            }
            const int expected = std::min(5, static_cast<int>(std::floor(frac)) + 1);
            CHECK(x.labels()->labels()[i] == std::to_string(expected));
        }
    }
    SUBCASE("labels monotone along the curve") {
        const auto x = generate_curve(10, 2, 0.0, 11);
        std::vector<std::pair<double, int>> order;
        for (std::size_t i = 0; i < x.n(); ++i) {
            order.emplace_back(x.values()(i, 0), std::stoi(x.labels()->labels()[i]));
        }
        std::sort(order.begin(), order.end());
        for (std::size_t i = 1; i < order.size(); ++i) {
            CHECK(order[i - 1].second <= order[i].second);
        }
    }
    SUBCASE("determinism and errors") {
        CHECK(generate_curve(100, 3, 0.2, 5).values() == generate_curve(100, 3, 0.2, 5).values());
        CHECK_FALSE(generate_curve(100, 3, 0.2, 5).values() ==
                    generate_curve(100, 3, 0.2, 6).values());
        CHECK_THROWS_AS(generate_curve(9, 2, 0.0, 1), ArgumentError);
        CHECK_THROWS_AS(generate_curve(100, 1, 0.0, 1), ArgumentError);
        CHECK_THROWS_AS(generate_curve(100, 2, -1.0, 1), ArgumentError);
    }
}

TEST_CASE("circles") {
    const auto c = generate_circle(2000, 9);
    CHECK(c.n() == 2000);
    for (std::size_t i = 0; i < c.n(); ++i) {
        CHECK(std::hypot(c.values()(i, 0), c.values()(i, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(generate_circle(50, 1).values() == generate_circle(50, 1).values());
    CHECK_THROWS_AS(generate_circle(2, 1), ArgumentError);
    CHECK_THROWS_AS(discrete_circle(2), ArgumentError);

    const auto d = discrete_circle(4);
    const double expected[4][2] = {{0, 1}, {-1, 0}, {0, -1}, {1, 0}};
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(d.values()(i, 0) - expected[i][0]) < 1e-12);
        CHECK(std::abs(d.values()(i, 1) - expected[i][1]) < 1e-12);
    }
    CHECK(std::hypot(d.values()(0, 0) - d.values()(1, 0), d.values()(0, 1) - d.values()(1, 1)) ==
          doctest::Approx(1.4142136).epsilon(1e-7));

    for (std::size_t n : {3u, 7u, 64u, 501u}) {
        const auto p = discrete_circle(n);
        const double chord = 2.0 * std::sin(std::numbers::pi / static_cast<double>(n));
        const double a = 2.0 * std::numbers::pi / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            CHECK(std::hypot(p.values()(i, 0) - p.values()(j, 0),
                             p.values()(i, 1) - p.values()(j, 1)) ==
                  doctest::Approx(chord).epsilon(1e-12));
            // Rotating point i by 2 pi / n lands on point j.
            const double rx = std::cos(a) * p.values()(i, 0) - std::sin(a) * p.values()(i, 1);
            const double ry = std::sin(a) * p.values()(i, 0) + std::cos(a) * p.values()(i, 1);
            CHECK(std::abs(rx - p.values()(j, 0)) < 1e-12);
            CHECK(std::abs(ry - p.values()(j, 1)) < 1e-12);
        }
    }
}

TEST_CASE("svd denoising") {
    SUBCASE("rank one input is kept") {
        Matrix m(6, 3);
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                m(i, j) = (i + 1.0) * (j + 2.0);
            }
        }
        const auto r = denoise_svd(DataMatrix(m));
        CHECK(r.rank == 1);
        CHECK(r.status == DenoiseStatus::thresholded);
        for (std::size_t t = 0; t < m.values().size(); ++t) {
            CHECK(std::abs(r.data.values().values()[t] - m.values()[t]) < 1e-9);
        }
    }
    SUBCASE("prescribed spectrum") {
        const auto m = with_spectrum(8, 3, {10.0, 5.0, 0.01}, 4);
        const auto r = denoise_svd(DataMatrix(m), 0.01);
        CHECK(r.rank == 2);
        REQUIRE(r.singular_values.size() == 3);
        CHECK(r.singular_values[0] == doctest::Approx(10.0));
        CHECK(r.singular_values[2] == doctest::Approx(0.01));
        Eigen::JacobiSVD<Eigen::MatrixXd> check(to_eigen(r.data.values()));
        CHECK(check.singularValues()(2) < 1e-9);
        const double err = (to_eigen(m) - to_eigen(r.data.values())).norm();
        CHECK(err == doctest::Approx(0.01).epsilon(1e-8));
    }
    SUBCASE("tail energy") {
        const auto m = with_spectrum(12, 5, {9.0, 8.5, 3.0, 0.5, 0.4}, 8);
        const auto r = denoise_svd(DataMatrix(m), 0.01);
        // Gaps 9/8.5, 8.5/3, 3/0.5, 0.5/0.4 all exceed 1.01: the largest r wins.
        CHECK(r.rank == 4);
        const double err = (to_eigen(m) - to_eigen(r.data.values())).norm();
        CHECK(std::abs(err - 0.4) < 1e-8);
    }
    SUBCASE("flat spectrum is returned unchanged") {
        const auto m = with_spectrum(5, 3, {2.0, 2.0, 2.0}, 2);
        const auto r = denoise_svd(DataMatrix(m));
        CHECK(r.status == DenoiseStatus::no_threshold);
        CHECK(r.data.values() == m);
    }
    SUBCASE("zero matrix") {
        const auto r = denoise_svd(DataMatrix(Matrix(4, 2)));
        CHECK(r.status == DenoiseStatus::degenerate);
        CHECK(r.rank == 0);
        CHECK(r.data.values() == Matrix(4, 2));
    }
    CHECK_THROWS_AS(denoise_svd(DataMatrix(Matrix(4, 2, 1.0)), 0.0), ArgumentError);
}

TEST_CASE("data matrix validation") {
    CHECK_THROWS(DataMatrix(Matrix(1, 2)));
    CHECK_THROWS(DataMatrix(Matrix(3, 0)));
    CHECK_THROWS(DataMatrix(Matrix(3, 2), LabelVector({"a", "b"})));
    const DataMatrix x(Matrix(3, 1, std::vector<double>{1, 2, 3}), LabelVector({"b", "a", "b"}));
    const std::vector<std::size_t> idx{2, 1};
    const auto s = x.select(idx);
    CHECK(s.values()(0, 0) == 3.0);
    CHECK(s.labels()->labels() == std::vector<std::string>{"b", "a"});
    CHECK(x.labels()->codes() == std::vector<std::size_t>{1, 0, 1});
}
