// Minimal SVG line charts for evaluation reports.
#pragma once

#include "gyrodiff/pipeline.hpp"

#include <string>
#include <vector>

namespace gyrodiff::plot {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool horizontal = false; ///< draw y[0] as a line across the full x range
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 720;
    int height = 440;
};

std::string render_svg(const Chart& chart);

/// Classical CRMSE against duration with the learned methods as horizontal
/// lines.
Chart comparison_chart(const pipeline::EvalReport& report);

/// Validation CRMSE against t_back.
Chart sweep_chart(const pipeline::EvalReport& report);

/// Train / validation CRMSE per normalization scope.
Chart ablation_chart(const pipeline::EvalReport& report);

/// Picks the chart matching report.name. Throws FormatError for unknown names.
Chart chart_for(const pipeline::EvalReport& report);

} // namespace gyrodiff::plot
