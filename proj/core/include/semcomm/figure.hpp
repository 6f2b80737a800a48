// Self-contained SVG line charts for sweep results; no rendering
// dependencies. The plot data itself is always exported as CSV so the
// figures can be regenerated or re-styled without rerunning a sweep.
#pragma once

#include <string>
#include <vector>

namespace semcomm {

struct SweepResult;

struct FigureSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Generic two-axis line chart with markers, ticks, and a legend.
std::string render_line_chart_svg(const std::string& title,
                                  const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<FigureSeries>& series);

// x, ssl_psnr_db, sl_psnr_db, gap_percent rows for the sweep grid.
std::string sweep_plot_csv(const SweepResult& result);

// PSNR-vs-grid chart for both models with the gap annotated per point.
std::string render_sweep_figure(const SweepResult& result);

}  // namespace semcomm
