#include "artrd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace artrd {

namespace {

constexpr double kWidth = 800.0, kHeight = 500.0;
constexpr double kLeft = 70.0, kRight = 30.0, kTop = 40.0, kBottom = 55.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Frame {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

  void fit(const std::vector<std::pair<double, double>>& pts) {
    for (const auto& [x, y] : pts) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }

  void finalize() {
    if (x_max - x_min < 1e-12) {
      x_min -= 1.0;
      x_max += 1.0;
    }
    if (y_max - y_min < 1e-12) {
      y_min -= 1.0;
      y_max += 1.0;
    }
    const double pad = 0.04 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
  }

  double px(double x) const {
    return kLeft + (x - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y - y_min) / (y_max - y_min) * (kHeight - kTop - kBottom);
  }
};

Frame make_frame(const std::vector<SvgSeries>& series) {
  Frame f;
  f.x_min = f.y_min = std::numeric_limits<double>::infinity();
  f.x_max = f.y_max = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& s : series)
    if (!s.points.empty()) {
      f.fit(s.points);
      any = true;
    }
  if (!any) f = Frame{};
  f.finalize();
  return f;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
}

void draw_axes(std::ostringstream& out, const Frame& f, const std::string& x_label,
               const std::string& y_label) {
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
      << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
      << "\" stroke=\"black\"/>\n<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\""
      << kLeft << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double tx = f.x_min + (f.x_max - f.x_min) * i / 5.0;
    const double ty = f.y_min + (f.y_max - f.y_min) * i / 5.0;
    out << "<line x1=\"" << f.px(tx) << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
        << f.px(tx) << "\" y2=\"" << kHeight - kBottom + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << f.px(tx) << "\" y=\"" << kHeight - kBottom + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(tx)
        << "</text>\n"
        << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << f.py(ty) << "\" x2=\"" << kLeft
        << "\" y2=\"" << f.py(ty) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kLeft - 8 << "\" y=\"" << f.py(ty) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ty)
        << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
      << "</text>\n"
      << "<text x=\"18\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << (kTop + kHeight - kBottom) / 2 << ")\">" << y_label
      << "</text>\n";
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series) {
  const Frame f = make_frame(series);
  std::ostringstream out;
  open_svg(out, title);
  draw_axes(out, f, x_label, y_label);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];
    if (series[s].points.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : series[s].points) out << f.px(x) << ',' << f.py(y) << ' ';
      out << "\"/>\n";
    }
    const double ly = kTop + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << kWidth - kRight - 150 << "\" y1=\"" << ly << "\" x2=\""
        << kWidth - kRight - 130 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n<text x=\"" << kWidth - kRight - 124 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].name << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_scatter(const std::string& title, const std::string& x_label,
                        const std::string& y_label,
                        const std::vector<std::pair<double, double>>& points) {
  const Frame f = make_frame({SvgSeries{"", points}});
  std::ostringstream out;
  open_svg(out, title);
  draw_axes(out, f, x_label, y_label);
  for (const auto& [x, y] : points)
    out << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(y)
        << "\" r=\"4\" fill=\"#1f77b4\" fill-opacity=\"0.8\"/>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace artrd
