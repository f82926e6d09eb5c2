#include "concurrence/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "concurrence/errors.hpp"
#include "concurrence/report_io.hpp"

namespace concurrence {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 140;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Scale {
    double lo, hi;
    int pix_lo, pix_hi;
    double map(double v) const {
        const double f = (hi > lo) ? (v - lo) / (hi - lo) : 0.5;
        return pix_lo + f * (pix_hi - pix_lo);
    }
};

void axis_range(std::vector<double> values, double& lo, double& hi) {
    lo = *std::min_element(values.begin(), values.end());
    hi = *std::max_element(values.begin(), values.end());
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
}

std::string svg_header(const std::string& title) {
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
           std::to_string(kWidth) + " " + std::to_string(kHeight) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + title + "</text>\n";
    return out;
}

std::string axes(const Scale& sx, const Scale& sy, const std::string& x_label,
                 const std::string& y_label) {
    std::string out;
    out += "<line x1=\"" + num(sx.pix_lo) + "\" y1=\"" + num(sy.pix_lo) + "\" x2=\"" +
           num(sx.pix_hi) + "\" y2=\"" + num(sy.pix_lo) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + num(sx.pix_lo) + "\" y1=\"" + num(sy.pix_lo) + "\" x2=\"" +
           num(sx.pix_lo) + "\" y2=\"" + num(sy.pix_hi) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = sx.lo + (sx.hi - sx.lo) * i / 4.0;
        const double px = sx.map(fx);
        out += "<line x1=\"" + num(px) + "\" y1=\"" + num(sy.pix_lo) + "\" x2=\"" + num(px) +
               "\" y2=\"" + num(sy.pix_lo + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(px) + "\" y=\"" + num(sy.pix_lo + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               num(fx) + "</text>\n";
        const double fy = sy.lo + (sy.hi - sy.lo) * i / 4.0;
        const double py = sy.map(fy);
        out += "<line x1=\"" + num(sx.pix_lo - 5) + "\" y1=\"" + num(py) + "\" x2=\"" +
               num(sx.pix_lo) + "\" y2=\"" + num(py) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(sx.pix_lo - 8) + "\" y=\"" + num(py + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(fy) +
               "</text>\n";
    }
    out += "<text x=\"" + std::to_string((kMarginLeft + kWidth - kMarginRight) / 2) + "\" y=\"" +
           std::to_string(kHeight - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + x_label +
           "</text>\n";
    out += "<text x=\"18\" y=\"" + std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " +
           std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) + ")\">" + y_label +
           "</text>\n";
    return out;
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<LineSeries>& series) {
    std::vector<double> all_x, all_y;
    for (const auto& s : series) {
        all_x.insert(all_x.end(), s.xs.begin(), s.xs.end());
        all_y.insert(all_y.end(), s.ys.begin(), s.ys.end());
    }
    if (all_x.empty()) throw DataError("write_line_plot: no data points");

    Scale sx{0, 0, kMarginLeft, kWidth - kMarginRight};
    Scale sy{0, 0, kHeight - kMarginBottom, kMarginTop};
    axis_range(all_x, sx.lo, sx.hi);
    axis_range(all_y, sy.lo, sy.hi);

    std::string svg = svg_header(title);
    svg += axes(sx, sy, x_label, y_label);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % 8];
        std::string points;
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            points += num(sx.map(s.xs[i])) + "," + num(sy.map(s.ys[i])) + " ";
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            svg += "<circle cx=\"" + num(sx.map(s.xs[i])) + "\" cy=\"" + num(sy.map(s.ys[i])) +
                   "\" r=\"3\" fill=\"" + color + "\"/>\n";
        const int ly = kMarginTop + 16 + static_cast<int>(si) * 18;
        svg += "<line x1=\"" + std::to_string(kWidth - kMarginRight + 10) + "\" y1=\"" +
               std::to_string(ly - 4) + "\" x2=\"" + std::to_string(kWidth - kMarginRight + 30) +
               "\" y2=\"" + std::to_string(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + std::to_string(kWidth - kMarginRight + 35) + "\" y=\"" +
               std::to_string(ly) + "\" font-family=\"sans-serif\" font-size=\"12\">" + s.label +
               "</text>\n";
    }
    svg += "</svg>\n";
    write_text_file(svg, path);
}

void write_histogram(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::vector<double>& values, int bins) {
    if (values.empty()) throw DataError("write_histogram: no values");
    if (bins < 1) throw DataError("write_histogram: bins must be >= 1");
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (const double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    const int max_count = *std::max_element(counts.begin(), counts.end());

    Scale sx{lo, hi, kMarginLeft, kWidth - kMarginRight};
    Scale sy{0, static_cast<double>(max_count) * 1.05, kHeight - kMarginBottom, kMarginTop};

    std::string svg = svg_header(title);
    svg += axes(sx, sy, x_label, "count");
    for (int b = 0; b < bins; ++b) {
        const double x0 = sx.map(lo + (hi - lo) * b / bins);
        const double x1 = sx.map(lo + (hi - lo) * (b + 1) / bins);
        const double y0 = sy.map(0.0);
        const double y1 = sy.map(counts[static_cast<std::size_t>(b)]);
        svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) +
               "\" height=\"" + num(y0 - y1) + "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
    }
    svg += "</svg>\n";
    write_text_file(svg, path);
}

}  // namespace concurrence
