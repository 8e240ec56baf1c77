#pragma once

#include "ness/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ness {

/// Categorical label per point plus the sorted set of distinct categories.
class LabelVector {
public:
    LabelVector() = default;
    explicit LabelVector(std::vector<std::string> labels);

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<std::string>& categories() const { return categories_; }
    /// Category index (into categories()) of every point.
    const std::vector<std::size_t>& codes() const { return codes_; }

    LabelVector select(std::span<const std::size_t> indices) const;

private:
    std::vector<std::string> labels_;
    std::vector<std::string> categories_;
    std::vector<std::size_t> codes_;
};

/// n x p matrix of points with optional row ids and labels.
///
/// Construction validates n >= 2, p >= 1, finite entries and label length.
class DataMatrix {
public:
    explicit DataMatrix(Matrix values, std::optional<LabelVector> labels = std::nullopt,
                        std::vector<std::string> row_ids = {});

    std::size_t n() const { return values_.rows(); }
    std::size_t p() const { return values_.cols(); }
    const Matrix& values() const { return values_; }
    const std::optional<LabelVector>& labels() const { return labels_; }
    const std::vector<std::string>& row_ids() const { return row_ids_; }

    DataMatrix select(std::span<const std::size_t> indices) const;

private:
    Matrix values_;
    std::optional<LabelVector> labels_;
    std::vector<std::string> row_ids_;
};

struct CsvOptions {
    /// Column holding categorical labels; removed from the numeric block.
    std::optional<std::string> label_column;
};

/// Parses a dense CSV matrix. A header is detected when the first row has a
/// non-numeric cell. Throws ParseError (naming the line) on ragged or
/// unparseable rows and ValidationError on non-finite values.
DataMatrix parse_matrix_csv(const std::string& text, const CsvOptions& options = {});
DataMatrix load_matrix(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes values with 9 significant digits; header optional, labels appended
/// as a trailing column named `label_name` when present.
std::string format_matrix_csv(const Matrix& values, const std::vector<std::string>& header = {},
                              const LabelVector* labels = nullptr,
                              const std::string& label_name = "label");

/// Points sampled uniformly in arclength (stratified so every one of the five
/// equal-length segments receives n/5 points, remainder to the first segments)
/// along a unit-speed sine arc (t, sin t), t in [0, 2pi], zero-padded to
/// ambient_dim, plus isotropic Gaussian noise. Labels "1".."5" by segment.
DataMatrix generate_curve(std::size_t n, std::size_t ambient_dim, double noise_sd,
                          std::uint64_t seed);

/// Arclength of the sine arc used by generate_curve.
double curve_length();

/// Point of the sine arc at arclength s (noise-free, 2-D part only).
std::pair<double, double> curve_point(double s);

/// n points with i.i.d. uniform angles on the unit circle.
DataMatrix generate_circle(std::size_t n, std::uint64_t seed);

/// (cos(2 pi i / n), sin(2 pi i / n)) for i = 1..n.
DataMatrix discrete_circle(std::size_t n);

enum class DenoiseStatus { thresholded, no_threshold, degenerate };

struct DenoiseResult {
    DataMatrix data;
    /// Retained rank; equals min(n, p) when no threshold qualified.
    std::size_t rank = 0;
    DenoiseStatus status = DenoiseStatus::thresholded;
    std::vector<double> singular_values;
};

/// Singular-value hard thresholding: keeps the largest r with
/// sigma_r / sigma_{r+1} > 1 + c.
DenoiseResult denoise_svd(const DataMatrix& x, double c = 0.01);

} // namespace ness
