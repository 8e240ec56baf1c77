#pragma once

// Nested-loop reference for the stability quantities, written directly from
// the definitions without touching the library's graph or quantile code.

#include "ness/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct Result {
    std::vector<std::vector<unsigned>> counts;  // symmetrized K
    std::vector<double> local;
    double global = 0.0;
    std::vector<std::vector<double>> similarity;  // W (only for N >= 3)
    std::vector<double> rareness;
};

inline std::vector<std::vector<std::size_t>> knn(const ness::Matrix& y, std::size_t k) {
    const std::size_t n = y.rows();
    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            double s = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) {
                const double d = y(i, c) - y(j, c);
                s += d * d;
            }
            cand.emplace_back(std::sqrt(s), j);
        }
        std::sort(cand.begin(), cand.end());
        for (std::size_t r = 0; r < k; ++r) {
            out[i].push_back(cand[r].second);
        }
    }
    return out;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : (v[m / 2 - 1] + v[m / 2]) / 2.0;
}

inline Result stability(const std::vector<ness::Matrix>& runs, std::size_t k, double lambda) {
    const std::size_t n = runs.front().rows();
    const std::size_t big_n = runs.size();
    std::vector<std::vector<std::vector<std::size_t>>> lists;
    for (const auto& y : runs) {
        lists.push_back(knn(y, k));
    }
    Result res;
    std::vector<std::vector<unsigned>> raw(n, std::vector<unsigned>(n, 0));
    for (const auto& l : lists) {
        for (std::size_t j = 0; j < n; ++j) {
            for (auto m : l[j]) {
                ++raw[j][m];
            }
        }
    }
    res.counts.assign(n, std::vector<unsigned>(n, 0));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = 0; m < n; ++m) {
            res.counts[j][m] = std::max(raw[j][m], raw[m][j]);
        }
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> pos;
        for (std::size_t m = 0; m < n; ++m) {
            if (res.counts[j][m] > 0) {
                pos.push_back(static_cast<double>(res.counts[j][m]) / static_cast<double>(big_n));
            }
        }
        std::sort(pos.begin(), pos.end());
        const double h = (static_cast<double>(pos.size()) - 1.0) * lambda;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const double s = lo + 1 < pos.size() ? pos[lo] + (h - lo) * (pos[lo + 1] - pos[lo])
                                             : pos[lo];
        res.local.push_back(s);
        total += s;
    }
    res.global = total / static_cast<double>(n);

    if (big_n >= 3) {
        res.similarity.assign(big_n, std::vector<double>(big_n, 1.0));
        for (std::size_t a = 0; a < big_n; ++a) {
            for (std::size_t b = 0; b < big_n; ++b) {
                if (a == b) {
                    continue;
                }
                std::vector<double> frac;
                for (std::size_t i = 0; i < n; ++i) {
                    std::size_t shared = 0;
                    for (auto u : lists[a][i]) {
                        for (auto v : lists[b][i]) {
                            shared += u == v;
                        }
                    }
                    frac.push_back(static_cast<double>(shared) / static_cast<double>(k));
                }
                res.similarity[a][b] = median(frac);
            }
        }
        for (std::size_t a = 0; a < big_n; ++a) {
            double m = 0.0;
            for (std::size_t b = 0; b < big_n; ++b) {
                if (b != a) {
                    m += res.similarity[a][b];
                }
            }
            m /= static_cast<double>(big_n - 1);
            double v = 0.0;
            for (std::size_t b = 0; b < big_n; ++b) {
                if (b != a) {
                    v += (res.similarity[a][b] - m) * (res.similarity[a][b] - m);
                }
            }
            v /= static_cast<double>(big_n - 1);
            res.rareness.push_back(1.0 / (std::max(m, 1e-12) * std::max(v, 1e-12)));
        }
    }
    return res;
}

} // namespace oracle
