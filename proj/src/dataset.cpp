#include "ness/dataset.hpp"

#include "ness/error.hpp"
#include "ness/io.hpp"
#include "ness/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

namespace ness {

LabelVector::LabelVector(std::vector<std::string> labels) : labels_(std::move(labels)) {
    std::set<std::string> distinct(labels_.begin(), labels_.end());
    categories_.assign(distinct.begin(), distinct.end());
    codes_.reserve(labels_.size());
    for (const auto& label : labels_) {
        auto it = std::lower_bound(categories_.begin(), categories_.end(), label);
        codes_.push_back(static_cast<std::size_t>(it - categories_.begin()));
    }
}

LabelVector LabelVector::select(std::span<const std::size_t> indices) const {
    std::vector<std::string> out;
    out.reserve(indices.size());
    for (auto i : indices) {
        out.push_back(labels_[i]);
    }
    return LabelVector(std::move(out));
}

DataMatrix::DataMatrix(Matrix values, std::optional<LabelVector> labels,
                       std::vector<std::string> row_ids)
    : values_(std::move(values)), labels_(std::move(labels)), row_ids_(std::move(row_ids)) {
    if (values_.rows() < 2) {
        throw ValidationError("data matrix needs at least 2 rows, got " +
                              std::to_string(values_.rows()));
    }
    if (values_.cols() < 1) {
        throw ValidationError("data matrix needs at least 1 column");
    }
    for (std::size_t i = 0; i < values_.rows(); ++i) {
        for (std::size_t j = 0; j < values_.cols(); ++j) {
            if (!std::isfinite(values_(i, j))) {
                throw ValidationError("non-finite value at row " + std::to_string(i + 1) +
                                      ", column " + std::to_string(j + 1));
            }
        }
    }
    if (labels_ && labels_->size() != values_.rows()) {
        throw ValidationError("label count " + std::to_string(labels_->size()) +
                              " does not match row count " + std::to_string(values_.rows()));
    }
    if (!row_ids_.empty() && row_ids_.size() != values_.rows()) {
        throw ValidationError("row id count does not match row count");
    }
}

DataMatrix DataMatrix::select(std::span<const std::size_t> indices) const {
    std::optional<LabelVector> labels;
    if (labels_) {
        labels = labels_->select(indices);
    }
    std::vector<std::string> ids;
    if (!row_ids_.empty()) {
        for (auto i : indices) {
            ids.push_back(row_ids_[i]);
        }
    }
    return DataMatrix(values_.select_rows(indices), std::move(labels), std::move(ids));
}

DataMatrix parse_matrix_csv(const std::string& text, const CsvOptions& options) {
    auto lines = io::split_lines(text);
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    if (lines.empty()) {
        throw ParseError("empty CSV input");
    }

    auto first = io::split_csv_line(lines.front());
    const bool has_header = std::any_of(first.begin(), first.end(), [](const std::string& cell) {
        return !io::parse_double(cell).has_value();
    });

    std::optional<std::size_t> label_col;
    if (options.label_column) {
        if (!has_header) {
            throw ParseError("label column '" + *options.label_column +
                             "' requested but the CSV has no header");
        }
        for (std::size_t j = 0; j < first.size(); ++j) {
            if (first[j] == *options.label_column) {
                label_col = j;
            }
        }
        if (!label_col) {
            throw ParseError("label column '" + *options.label_column + "' not found in header");
        }
    }

    const std::size_t width = first.size();
    const std::size_t numeric_width = width - (label_col ? 1 : 0);
    std::vector<double> values;
    std::vector<std::string> labels;
    std::size_t rows = 0;
    for (std::size_t li = has_header ? 1 : 0; li < lines.size(); ++li) {
        const auto line_no = std::to_string(li + 1);
        if (lines[li].empty()) {
            throw ParseError("line " + line_no + ": empty row");
        }
        auto cells = io::split_csv_line(lines[li]);
        if (cells.size() != width) {
            throw ParseError("line " + line_no + ": expected " + std::to_string(width) +
                             " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < width; ++j) {
            if (label_col && j == *label_col) {
                labels.push_back(cells[j]);
                continue;
            }
            auto v = io::parse_double(cells[j]);
            if (!v) {
                throw ParseError("line " + line_no + ": cannot parse '" + cells[j] + "' as a number");
            }
            if (!std::isfinite(*v)) {
                throw ValidationError("line " + line_no + ": non-finite value '" + cells[j] + "'");
            }
            values.push_back(*v);
        }
        ++rows;
    }
    std::optional<LabelVector> label_vec;
    if (label_col) {
        label_vec = LabelVector(std::move(labels));
    }
    return DataMatrix(Matrix(rows, numeric_width, std::move(values)), std::move(label_vec));
}

DataMatrix load_matrix(const std::filesystem::path& path, const CsvOptions& options) {
    return parse_matrix_csv(io::read_file(path), options);
}

std::string format_matrix_csv(const Matrix& values, const std::vector<std::string>& header,
                              const LabelVector* labels, const std::string& label_name) {
    std::string out;
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            out += (j ? "," : "") + header[j];
        }
        if (labels) {
            out += "," + label_name;
        }
        out += '\n';
    }
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t j = 0; j < values.cols(); ++j) {
            if (j) {
                out += ',';
            }
            out += io::format_number(values(i, j));
        }
        if (labels) {
            out += "," + labels->labels()[i];
        }
        out += '\n';
    }
    return out;
}

namespace {

constexpr double kCurveTMax = 2.0 * std::numbers::pi;
constexpr std::size_t kCurveTable = 4096;

double speed(double t) { return std::sqrt(1.0 + std::cos(t) * std::cos(t)); }

double simpson(double a, double b) {
    return (b - a) / 6.0 * (speed(a) + 4.0 * speed(0.5 * (a + b)) + speed(b));
}

// Cumulative arclength at kCurveTable + 1 equally spaced parameter knots; each
// interval integrated with 8 Simpson panels.
const std::vector<double>& arclength_table() {
    static const std::vector<double> table = [] {
        std::vector<double> s(kCurveTable + 1, 0.0);
        const double h = kCurveTMax / kCurveTable;
        for (std::size_t i = 0; i < kCurveTable; ++i) {
            const double a = h * static_cast<double>(i);
            double acc = 0.0;
            for (int panel = 0; panel < 8; ++panel) {
                acc += simpson(a + h * panel / 8.0, a + h * (panel + 1) / 8.0);
            }
            s[i + 1] = s[i] + acc;
        }
        return s;
    }();
    return table;
}

// Parameter t at which the arc has arclength s.
double curve_parameter(double s) {
    const auto& table = arclength_table();
    const double h = kCurveTMax / kCurveTable;
    auto it = std::upper_bound(table.begin(), table.end(), s);
    std::size_t j = it == table.begin() ? 0 : static_cast<std::size_t>(it - table.begin()) - 1;
    j = std::min(j, kCurveTable - 1);
    const double t0 = h * static_cast<double>(j);
    double t = t0 + (s - table[j]) / speed(t0);
    for (int iter = 0; iter < 20; ++iter) {
        double acc = 0.0;
        for (int panel = 0; panel < 4; ++panel) {
            acc += simpson(t0 + (t - t0) * panel / 4.0, t0 + (t - t0) * (panel + 1) / 4.0);
        }
        const double step = (table[j] + acc - s) / speed(t);
        t -= step;
        if (std::abs(step) < 1e-15) {
            break;
        }
    }
    return t;
}

} // namespace

double curve_length() { return arclength_table().back(); }

std::pair<double, double> curve_point(double s) {
    const double t = curve_parameter(s);
    return {t, std::sin(t)};
}

DataMatrix generate_curve(std::size_t n, std::size_t ambient_dim, double noise_sd,
                          std::uint64_t seed) {
    if (n < 10) {
        throw ArgumentError("generate_curve needs n >= 10, got " + std::to_string(n));
    }
    if (ambient_dim < 2) {
        throw ArgumentError("generate_curve needs ambient_dim >= 2");
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw ArgumentError("noise_sd must be finite and >= 0");
    }
    constexpr std::size_t kSegments = 5;
    Rng rng(seed);
    const double length = curve_length();
    const double seg_len = length / kSegments;
    Matrix values(n, ambient_dim);
    std::vector<std::string> labels;
    labels.reserve(n);
    std::size_t row = 0;
    for (std::size_t seg = 0; seg < kSegments; ++seg) {
        const std::size_t count = n / kSegments + (seg < n % kSegments ? 1 : 0);
        for (std::size_t c = 0; c < count; ++c, ++row) {
            const double s = seg_len * (static_cast<double>(seg) + rng.uniform());
            auto [x, y] = curve_point(s);
            values(row, 0) = x;
            values(row, 1) = y;
            labels.push_back(std::to_string(seg + 1));
        }
    }
    if (noise_sd > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < ambient_dim; ++j) {
                values(i, j) += noise_sd * rng.normal();
            }
        }
    }
    return DataMatrix(std::move(values), LabelVector(std::move(labels)));
}

DataMatrix generate_circle(std::size_t n, std::uint64_t seed) {
    if (n < 3) {
        throw ArgumentError("generate_circle needs n >= 3, got " + std::to_string(n));
    }
    Rng rng(seed);
    Matrix values(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        values(i, 0) = std::cos(angle);
        values(i, 1) = std::sin(angle);
    }
    return DataMatrix(std::move(values));
}

DataMatrix discrete_circle(std::size_t n) {
    if (n < 3) {
        throw ArgumentError("discrete_circle needs n >= 3, got " + std::to_string(n));
    }
    Matrix values(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double angle =
            2.0 * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n);
        values(i, 0) = std::cos(angle);
        values(i, 1) = std::sin(angle);
    }
    return DataMatrix(std::move(values));
}

DenoiseResult denoise_svd(const DataMatrix& x, double c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw ArgumentError("denoise constant c must be > 0");
    }
    const auto n = static_cast<Eigen::Index>(x.n());
    const auto p = static_cast<Eigen::Index>(x.p());
    Eigen::MatrixXd a(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            a(i, j) = x.values()(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sigma = svd.singularValues();
    const auto m = sigma.size();

    DenoiseResult result{x, static_cast<std::size_t>(m), DenoiseStatus::no_threshold, {}};
    const double tol = (m > 0 ? sigma(0) : 0.0) * static_cast<double>(std::max(n, p)) *
                       std::numeric_limits<double>::epsilon();
    for (Eigen::Index r = 0; r < m; ++r) {
        if (sigma(r) <= tol) {
            sigma(r) = 0.0;
        }
        result.singular_values.push_back(sigma(r));
    }
    if (m == 0 || sigma(0) == 0.0) {
        result.data = DataMatrix(Matrix(x.n(), x.p()), x.labels(), x.row_ids());
        result.rank = 0;
        result.status = DenoiseStatus::degenerate;
        return result;
    }

    Eigen::Index r_max = 0;
    for (Eigen::Index r = 1; r < m; ++r) {
        const double hi = sigma(r - 1);
        const double lo = sigma(r);
        if (hi == 0.0) {
            break;
        }
        if (lo == 0.0 || hi / lo > 1.0 + c) {
            r_max = r;
        }
    }
    if (r_max == 0) {
        return result;
    }
    const Eigen::MatrixXd recon = svd.matrixU().leftCols(r_max) *
                                  sigma.head(r_max).asDiagonal() *
                                  svd.matrixV().leftCols(r_max).transpose();
    Matrix out(x.n(), x.p());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = recon(i, j);
        }
    }
    result.data = DataMatrix(std::move(out), x.labels(), x.row_ids());
    result.rank = static_cast<std::size_t>(r_max);
    result.status = DenoiseStatus::thresholded;
    return result;
}

} // namespace ness
