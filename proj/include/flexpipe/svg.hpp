#pragma once

// Self-contained SVG bar chart with an optional horizontal reference line.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "flexpipe/records.hpp"

namespace flexpipe {

struct Bar {
    std::string label;
    double value = 0;
    bool valid = true;  ///< invalid bars are drawn as an empty slot marked "n/a"
};

struct ReferenceLine {
    std::string label;
    double value = 0;
};

struct BarChart {
    std::string title;
    std::string y_label;
    std::vector<Bar> bars;
    std::optional<ReferenceLine> reference;
};

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline void write_svg(std::ostream& os, const BarChart& chart) {
    constexpr double kWidth = 640, kHeight = 400;
    constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double top = chart.reference ? chart.reference->value : 0.0;
    for (const auto& b : chart.bars)
        if (b.valid) top = std::max(top, b.value);
    if (!(top > 0)) top = 1;
    top *= 1.1;
    const auto y = [&](double v) { return kTop + plot_h * (1 - v / top); };
    const auto num = [](double v) { return format_double(std::round(v * 100) / 100); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << xml_escape(chart.title) << "</text>\n";
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
       << kTop + plot_h << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = top * i / 4;
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">" << num(v)
           << "</text>\n";
    }
    os << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << kTop + plot_h / 2 << ")\">" << xml_escape(chart.y_label) << "</text>\n";

    const double slot = chart.bars.empty() ? plot_w : plot_w / static_cast<double>(chart.bars.size());
    for (std::size_t i = 0; i < chart.bars.size(); ++i) {
        const auto& b = chart.bars[i];
        const double x = kLeft + slot * static_cast<double>(i) + slot * 0.2;
        const double cx = x + slot * 0.3;
        if (b.valid) {
            os << "<rect x=\"" << x << "\" y=\"" << y(b.value) << "\" width=\"" << slot * 0.6 << "\" height=\""
               << kTop + plot_h - y(b.value) << "\" fill=\"#4c78a8\"><title>" << xml_escape(b.label) << ": "
               << num(b.value) << "</title></rect>\n";
            os << "<text x=\"" << cx << "\" y=\"" << y(b.value) - 4 << "\" text-anchor=\"middle\">" << num(b.value)
               << "</text>\n";
        } else {
            os << "<text x=\"" << cx << "\" y=\"" << kTop + plot_h - 6 << "\" text-anchor=\"middle\" fill=\"gray\">"
               << "n/a</text>\n";
        }
        os << "<text x=\"" << cx << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
           << xml_escape(b.label) << "</text>\n";
    }
    if (chart.reference) {
        const double ry = y(chart.reference->value);
        os << "<line x1=\"" << kLeft << "\" y1=\"" << ry << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << ry
           << "\" stroke=\"#e45756\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n";
        os << "<text x=\"" << kLeft + plot_w << "\" y=\"" << ry - 6 << "\" text-anchor=\"end\" fill=\"#e45756\">"
           << xml_escape(chart.reference->label) << " " << num(chart.reference->value) << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace flexpipe
