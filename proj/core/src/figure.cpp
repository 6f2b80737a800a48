#include "semcomm/figure.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "semcomm/experiments.hpp"

namespace semcomm {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 30.0;
constexpr double kMarginTop = 48.0;
constexpr double kMarginBottom = 64.0;

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) {
    throw std::runtime_error("double formatting failed");
  }
  return std::string(buf, ptr);
}

// Compact tick label: trims the shortest round-trip form to something
// readable on an axis.
std::string tick_label(double v) {
  if (v == 0.0) return "0";
  if (std::fabs(v) >= 1000.0 && v == std::floor(v) &&
      std::fabs(v) < 1.0e15) {
    return fmt(v);
  }
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Scale {
  double lo = 0.0, hi = 1.0, px0 = 0.0, px1 = 1.0;
  double operator()(double v) const {
    return px0 + (v - lo) / (hi - lo) * (px1 - px0);
  }
};

// Tick step of the form {1, 2, 2.5, 5} * 10^k giving 4..8 ticks.
double nice_step(double span) {
  if (span <= 0.0) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

std::vector<double> ticks_for(double lo, double hi) {
  const double step = nice_step(hi - lo);
  std::vector<double> ticks;
  double t = std::ceil(lo / step) * step;
  for (; t <= hi + step * 1e-9; t += step) {
    // Snap values like 0.30000000000000004 back onto the grid.
    ticks.push_back(std::round(t / step) * step);
  }
  return ticks;
}

void escape_into(std::ostringstream& os, const std::string& text) {
  for (char c : text) {
    switch (c) {
      case '&': os << "&amp;"; break;
      case '<': os << "&lt;"; break;
      case '>': os << "&gt;"; break;
      default: os << c;
    }
  }
}

}  // namespace

std::string render_line_chart_svg(const std::string& title,
                                  const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<FigureSeries>& series) {
  if (series.empty()) {
    throw std::invalid_argument("chart needs at least one series");
  }
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw std::invalid_argument("series \"" + s.label +
                                  "\" needs matching nonempty x and y");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_lo = x_hi = s.x[i];
        y_lo = y_hi = s.y[i];
        first = false;
      }
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  }
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  const double y_pad = (y_hi == y_lo) ? 1.0 : (y_hi - y_lo) * 0.08;
  y_lo -= y_pad;
  y_hi += y_pad;

  const Scale sx{x_lo, x_hi, kMarginLeft, kWidth - kMarginRight};
  const Scale sy{y_lo, y_hi, kHeight - kMarginBottom, kMarginTop};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
     << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2
     << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"16\" font-weight=\"bold\">";
  escape_into(os, title);
  os << "</text>\n";

  for (double t : ticks_for(x_lo, x_hi)) {
    const double px = sx(t);
    os << "<line x1=\"" << px << "\" y1=\"" << sy.px0 << "\" x2=\"" << px
       << "\" y2=\"" << sy.px1
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << px << "\" y=\"" << kHeight - kMarginBottom + 20
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\">"
       << tick_label(t) << "</text>\n";
  }
  for (double t : ticks_for(y_lo, y_hi)) {
    const double py = sy(t);
    os << "<line x1=\"" << kMarginLeft << "\" y1=\"" << py << "\" x2=\""
       << kWidth - kMarginRight << "\" y2=\"" << py
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
       << tick_label(t) << "</text>\n";
  }

  os << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom
     << "\" x2=\"" << kWidth - kMarginRight << "\" y2=\""
     << kHeight - kMarginBottom << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  os << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
     << kMarginLeft << "\" y2=\"" << kHeight - kMarginBottom
     << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";

  os << "<text x=\"" << (kMarginLeft + kWidth - kMarginRight) / 2 << "\" y=\""
     << kHeight - 16
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">";
  escape_into(os, x_label);
  os << "</text>\n";
  os << "<text x=\"20\" y=\"" << (kMarginTop + kHeight - kMarginBottom) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        "transform=\"rotate(-90 20 "
     << (kMarginTop + kHeight - kMarginBottom) / 2 << ")\">";
  escape_into(os, y_label);
  os << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kSeriesColors[si % 4];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i])
         << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kMarginTop + 8 + 18.0 * static_cast<double>(si);
    os << "<line x1=\"" << kWidth - kMarginRight - 150 << "\" y1=\"" << ly
       << "\" x2=\"" << kWidth - kMarginRight - 126 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kWidth - kMarginRight - 120 << "\" y=\"" << ly + 4
       << "\" font-family=\"sans-serif\" font-size=\"12\">";
    escape_into(os, s.label);
    os << "</text>\n";
  }

  os << "</svg>\n";
  return os.str();
}

std::string sweep_plot_csv(const SweepResult& result) {
  const std::string x_name =
      result.kind == "nasar" ? "nasar" : "sample_count";
  std::string out = x_name + ",ssl_psnr_db,sl_psnr_db,gap_percent\n";
  for (const auto& p : result.points) {
    out += fmt(p.grid_value) + "," + fmt(p.ssl.mean_psnr_db) + "," +
           fmt(p.sl.mean_psnr_db) + "," + fmt(p.gap_percent) + "\n";
  }
  return out;
}

std::string render_sweep_figure(const SweepResult& result) {
  if (result.points.empty()) {
    throw std::invalid_argument("sweep result has no points");
  }
  FigureSeries ssl{"self-supervised", {}, {}};
  FigureSeries sl{"label-supervised", {}, {}};
  for (const auto& p : result.points) {
    ssl.x.push_back(p.grid_value);
    ssl.y.push_back(p.ssl.mean_psnr_db);
    sl.x.push_back(p.grid_value);
    sl.y.push_back(p.sl.mean_psnr_db);
  }
  const bool nasar = result.kind == "nasar";
  std::string svg = render_line_chart_svg(
      nasar ? "Reconstruction PSNR vs channel noise ratio"
            : "Reconstruction PSNR vs training set size",
      nasar ? "noise-to-signal amplitude ratio" : "training samples",
      "mean PSNR (dB)", {ssl, sl});

  // Append the per-point gap as a footnote row inside the SVG.
  std::ostringstream note;
  note << "<text x=\"" << kMarginLeft << "\" y=\"" << kHeight - 2
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555555\">"
       << "gap %:";
  for (const auto& p : result.points) {
    note << "  " << tick_label(p.grid_value) << ": "
         << tick_label(std::round(p.gap_percent * 100.0) / 100.0);
  }
  note << "</text>\n</svg>\n";
  const std::string closing = "</svg>\n";
  svg.replace(svg.size() - closing.size(), closing.size(), note.str());
  return svg;
}

}  // namespace semcomm
