#include "gyrodiff/plot.hpp"

#include "gyrodiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace gyrodiff::plot {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

// Rounded tick step giving about five intervals.
double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double f : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= f * mag) {
            return f * mag;
        }
    }
    return 10.0 * mag;
}

} // namespace

std::string render_svg(const Chart& chart) {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = 0.0, y_hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : chart.series) {
        for (double x : s.x) {
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
        }
        for (double y : s.y) {
            if (std::isfinite(y)) {
                y_lo = std::min(y_lo, y);
                y_hi = std::max(y_hi, y);
            }
        }
    }
    if (!std::isfinite(x_lo)) {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    if (x_hi <= x_lo) {
        x_hi = x_lo + 1.0;
    }
    if (!(y_hi > y_lo)) {
        y_hi = y_lo + 1.0;
    }
    const double y_step = nice_step(y_hi - y_lo);
    y_hi = std::ceil(y_hi / y_step) * y_step;

    const double left = 70, right = 170, top = 40, bottom = 55;
    const double pw = chart.width - left - right, ph = chart.height - top - bottom;
    auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\""
        << chart.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(chart.title) << "</text>\n";

    for (double y = y_lo; y <= y_hi + 1e-9 * y_step; y += y_step) {
        svg << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(py(y))
            << "\" y2=\"" << num(py(y)) << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(y) + 4)
            << "\" text-anchor=\"end\">" << num(y) << "</text>\n";
    }
    const double x_step = nice_step(x_hi - x_lo);
    for (double x = std::ceil(x_lo / x_step) * x_step; x <= x_hi + 1e-9 * x_step; x += x_step) {
        svg << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + ph + 18)
            << "\" text-anchor=\"middle\">" << num(x) << "</text>\n";
    }
    svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
        << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(chart.height - 12)
        << "\" text-anchor=\"middle\">" << escape(chart.x_label) << "</text>\n";
    svg << "<text transform=\"translate(18," << num(top + ph / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(chart.y_label) << "</text>\n";

    for (std::size_t i = 0; i < chart.series.size(); ++i) {
        const auto& s = chart.series[i];
        const char* color = kPalette[i % std::size(kPalette)];
        if (s.horizontal && !s.y.empty()) {
            svg << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\""
                << num(py(s.y[0])) << "\" y2=\"" << num(py(s.y[0])) << "\" stroke=\"" << color
                << "\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n";
        } else {
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                svg << num(px(s.x[k])) << ',' << num(py(s.y[k])) << ' ';
            }
            svg << "\"/>\n";
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                svg << "<circle cx=\"" << num(px(s.x[k])) << "\" cy=\"" << num(py(s.y[k]))
                    << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            }
        }
        const double ly = top + 14 + 20.0 * static_cast<double>(i);
        svg << "<line x1=\"" << num(left + pw + 12) << "\" x2=\"" << num(left + pw + 36)
            << "\" y1=\"" << num(ly - 4) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly) << "\">"
            << escape(s.label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

Chart comparison_chart(const pipeline::EvalReport& report) {
    Chart chart{"CRMSE by method", "duration [s]", "CRMSE [deg]", {}};
    Series classical{"classical", {}, {}};
    for (const auto& r : report.rows_for("classical")) {
        classical.x.push_back(r.duration_s);
        classical.y.push_back(r.crmse_deg);
    }
    chart.series.push_back(classical);
    for (const char* method : {"baseline", "denoiser_aided"}) {
        const auto rows = report.rows_for(method);
        if (!rows.empty()) {
            chart.series.push_back({method, {rows.front().duration_s}, {rows.front().crmse_deg}, true});
        }
    }
    return chart;
}

Chart sweep_chart(const pipeline::EvalReport& report) {
    Chart chart{"Validation CRMSE by t_back", "t_back", "CRMSE [deg]", {}};
    Series s{"denoiser_aided", {}, {}};
    for (const auto& r : report.rows) {
        if (r.t_back) {
            s.x.push_back(*r.t_back);
            s.y.push_back(r.crmse_deg);
        }
    }
    chart.series.push_back(s);
    return chart;
}

Chart ablation_chart(const pipeline::EvalReport& report) {
    Chart chart{"CRMSE by normalization scope", "scope (0 per_sequence, 1 per_sample)",
                "CRMSE [deg]", {}};
    for (const char* split : {"train", "val"}) {
        Series s{split, {}, {}};
        for (const auto& r : report.rows) {
            if (r.split == split && r.scope) {
                s.x.push_back(*r.scope == NormScope::per_sequence ? 0.0 : 1.0);
                s.y.push_back(r.crmse_deg);
            }
        }
        chart.series.push_back(s);
    }
    return chart;
}

Chart chart_for(const pipeline::EvalReport& report) {
    if (report.name == "method_comparison") {
        return comparison_chart(report);
    }
    if (report.name == "tback_sweep") {
        return sweep_chart(report);
    }
    if (report.name == "normalization_ablation") {
        return ablation_chart(report);
    }
    throw FormatError("no chart for report '" + report.name + "'");
}

} // namespace gyrodiff::plot
