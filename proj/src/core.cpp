#include "ness/error.hpp"
#include "ness/matrix.hpp"
#include "ness/rng.hpp"

#include <cmath>
#include <string>

namespace ness {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw ArgumentError("matrix value count " + std::to_string(data_.size()) +
                            " does not match shape " + std::to_string(rows) + "x" +
                            std::to_string(cols));
    }
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        auto src = row(indices[r]);
        auto dst = out.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    // Rejection sampling keeps the result unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = 0;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

} // namespace ness
