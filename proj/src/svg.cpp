#include "ness/svg.hpp"

#include "ness/error.hpp"
#include "ness/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace ness {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Range {
    double lo, hi;

    static Range of(std::span<const double> v) {
        auto [a, b] = std::minmax_element(v.begin(), v.end());
        double lo = *a, hi = *b;
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        return {lo - pad, hi + pad};
    }
    double to_x(double v) const { return kLeft + (v - lo) / (hi - lo) * (kWidth - kLeft - kRight); }
    double to_y(double v) const {
        return kHeight - kBottom - (v - lo) / (hi - lo) * (kHeight - kTop - kBottom);
    }
};

std::string header(const ChartLabels& labels) {
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                    "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
                    "viewBox=\"0 0 640 480\">\n"
                    "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + xml_escape(labels.title) + "</text>\n";
    s += "<text x=\"" + fmt((kLeft + kWidth - kRight) / 2) + "\" y=\"" + fmt(kHeight - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         xml_escape(labels.x_label) + "</text>\n";
    s += "<text x=\"18\" y=\"" + fmt((kTop + kHeight - kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 " + fmt((kTop + kHeight - kBottom) / 2) + ")\">" +
         xml_escape(labels.y_label) + "</text>\n";
    return s;
}

std::string axes(const Range& rx, const Range& ry) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    std::string s = "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
    s += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x1) + "\" y2=\"" +
         fmt(y0) + "\"/>\n";
    s += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x0) + "\" y2=\"" +
         fmt(y1) + "\"/>\n</g>\n";
    s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double vx = rx.lo + (rx.hi - rx.lo) * t / 4.0;
        const double vy = ry.lo + (ry.hi - ry.lo) * t / 4.0;
        s += "<text x=\"" + fmt(rx.to_x(vx)) + "\" y=\"" + fmt(y0 + 16) +
             "\" text-anchor=\"middle\">" + io::format_number(std::round(vx * 1000) / 1000) +
             "</text>\n";
        s += "<text x=\"" + fmt(x0 - 6) + "\" y=\"" + fmt(ry.to_y(vy) + 4) +
             "\" text-anchor=\"end\">" + io::format_number(std::round(vy * 1000) / 1000) +
             "</text>\n";
    }
    return s + "</g>\n";
}

} // namespace

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string line_chart_svg(std::span<const double> x, std::span<const double> y,
                           std::optional<std::size_t> highlight, const ChartLabels& labels) {
    if (x.size() != y.size() || x.empty()) {
        throw ArgumentError("line chart needs equally sized, non-empty series");
    }
    if (highlight && *highlight >= x.size()) {
        throw ArgumentError("highlight index out of range");
    }
    const auto rx = Range::of(x);
    const auto ry = Range::of(y);
    std::string s = header(labels) + axes(rx, ry);
    s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += (i ? " " : "") + fmt(rx.to_x(x[i])) + "," + fmt(ry.to_y(y[i]));
    }
    s += "\"/>\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += "<circle cx=\"" + fmt(rx.to_x(x[i])) + "\" cy=\"" + fmt(ry.to_y(y[i])) +
             "\" r=\"4\" fill=\"#1f77b4\"/>\n";
    }
    if (highlight) {
        const double cx = rx.to_x(x[*highlight]);
        const double cy = ry.to_y(y[*highlight]);
        s += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) +
             "\" r=\"7\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2.5\"/>\n";
        s += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(cy - 12) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
             "fill=\"#d62728\">recommended " + io::format_number(x[*highlight]) + "</text>\n";
    }
    return s + "</svg>\n";
}

std::string scatter_svg(const Matrix& points, std::span<const std::size_t> codes,
                        const ChartLabels& labels) {
    if (points.cols() < 2 || points.rows() == 0) {
        throw ArgumentError("scatter needs at least one point with 2 coordinates");
    }
    if (!codes.empty() && codes.size() != points.rows()) {
        throw ArgumentError("color codes do not match point count");
    }
    std::vector<double> xs(points.rows()), ys(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        xs[i] = points(i, 0);
        ys[i] = points(i, 1);
    }
    const auto rx = Range::of(xs);
    const auto ry = Range::of(ys);
    std::string s = header(labels) + axes(rx, ry);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const char* color = kPalette[codes.empty() ? 0 : codes[i] % kPalette.size()];
        s += "<circle cx=\"" + fmt(rx.to_x(xs[i])) + "\" cy=\"" + fmt(ry.to_y(ys[i])) +
             "\" r=\"2.5\" fill=\"" + color + "\" fill-opacity=\"0.8\"/>\n";
    }
    return s + "</svg>\n";
}

} // namespace ness
