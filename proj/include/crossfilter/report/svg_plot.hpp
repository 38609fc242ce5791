#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crossfilter/core/error.hpp"

namespace crossfilter::report {

/// Bare-bones static SVG chart: line series over a shared x axis, plus an
/// optional filled band series drawn from the x axis (used for the
/// pseudo-curated count area under the metric curves).
class SvgChart {
 public:
  SvgChart(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add_line(const std::string& name, const std::vector<double>& xs,
                const std::vector<double>& ys, const std::string& color) {
    series_.push_back({name, xs, ys, color, false});
  }

  void add_band(const std::string& name, const std::vector<double>& xs,
                const std::vector<double>& ys, const std::string& color) {
    series_.push_back({name, xs, ys, color, true});
  }

  void write(const std::string& path) const {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series_) {
      for (double x : s.xs) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
      }
      for (double y : s.ys) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
      if (s.band) ymin = std::min(ymin, 0.0);
    }
    if (xmin > xmax) {
      xmin = 0;
      xmax = 1;
    }
    if (ymin > ymax) {
      ymin = 0;
      ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pad_y = 0.05 * (ymax - ymin);
    ymin -= pad_y;
    ymax += pad_y;

    const double W = 720, H = 420, L = 70, R = 20, T = 40, B = 50;
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title_
        << "</text>\n";

    for (int i = 0; i <= 4; ++i) {
      const double gy = ymin + (ymax - ymin) * i / 4.0;
      svg << "<line x1='" << L << "' y1='" << py(gy) << "' x2='" << W - R << "' y2='" << py(gy)
          << "' stroke='#dddddd'/>\n"
          << "<text x='" << L - 6 << "' y='" << py(gy) + 4
          << "' text-anchor='end' font-size='11'>" << format_num(gy) << "</text>\n";
      const double gx = xmin + (xmax - xmin) * i / 4.0;
      svg << "<text x='" << px(gx) << "' y='" << H - B + 16
          << "' text-anchor='middle' font-size='11'>" << format_num(gx) << "</text>\n";
    }
    svg << "<line x1='" << L << "' y1='" << py(ymin) << "' x2='" << W - R << "' y2='" << py(ymin)
        << "' stroke='black'/>\n"
        << "<line x1='" << L << "' y1='" << py(ymin) << "' x2='" << L << "' y2='" << T
        << "' stroke='black'/>\n"
        << "<text x='" << (W + L - R) / 2 << "' y='" << H - 12
        << "' text-anchor='middle' font-size='12'>" << x_label_ << "</text>\n"
        << "<text x='16' y='" << (H - B + T) / 2
        << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 " << (H - B + T) / 2
        << ")'>" << y_label_ << "</text>\n";

    double legend_y = T + 4;
    for (const auto& s : series_) {
      if (s.xs.empty()) continue;
      std::ostringstream pts;
      for (std::size_t i = 0; i < s.xs.size(); ++i)
        pts << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
      if (s.band) {
        svg << "<polygon points='" << px(s.xs.front()) << ',' << py(std::max(0.0, ymin)) << ' '
            << pts.str() << px(s.xs.back()) << ',' << py(std::max(0.0, ymin)) << "' fill='"
            << s.color << "' fill-opacity='0.35' stroke='none'/>\n";
      } else {
        svg << "<polyline points='" << pts.str() << "' fill='none' stroke='" << s.color
            << "' stroke-width='1.6'/>\n";
      }
      svg << "<rect x='" << W - R - 150 << "' y='" << legend_y << "' width='12' height='12' fill='"
          << s.color << "'/>\n"
          << "<text x='" << W - R - 134 << "' y='" << legend_y + 10 << "' font-size='11'>"
          << s.name << "</text>\n";
      legend_y += 16;
    }
    svg << "</svg>\n";

    std::ofstream f(path);
    require(f.good(), Errc::io_error, "cannot open for write: " + path);
    f << svg.str();
  }

 private:
  struct Series {
    std::string name;
    std::vector<double> xs, ys;
    std::string color;
    bool band;
  };

  static std::string format_num(double v) {
    std::ostringstream os;
    if (std::abs(v) >= 1000 || (std::abs(v) < 0.01 && v != 0)) os.precision(2);
    else os.precision(4);
    os << v;
    return os.str();
  }

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
};

}  // namespace crossfilter::report
