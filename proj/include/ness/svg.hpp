#pragma once

#include "ness/matrix.hpp"

#include <optional>
#include <span>
#include <string>

namespace ness {

struct ChartLabels {
    std::string title;
    std::string x_label;
    std::string y_label;
};

/// Polyline with markers; the point at `highlight` (if any) is drawn larger
/// in a second color and annotated with its x value.
std::string line_chart_svg(std::span<const double> x, std::span<const double> y,
                           std::optional<std::size_t> highlight, const ChartLabels& labels);

/// Scatter of the first two columns; `codes` picks a palette color per point.
std::string scatter_svg(const Matrix& points, std::span<const std::size_t> codes,
                        const ChartLabels& labels);

std::string xml_escape(const std::string& text);

} // namespace ness
