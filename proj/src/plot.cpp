//
// Copyright 2026 The dplsvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dplsvi/bench.hpp"

namespace dplsvi::bench {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 240.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                    "#bcbd22", "#17becf"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

// Rounds up to 1, 2 or 5 times a power of ten.
double nice_ceiling(double x) {
  if (x <= 0.0) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(x)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * p >= x) return m * p;
  }
  return 10.0 * p;
}

std::string tick_label(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

void write_plot_svg(std::ostream& out, const std::vector<AggregateCurve>& curves,
                    const std::string& title) {
  if (curves.empty()) throw std::invalid_argument("nothing to plot");
  std::size_t episodes = 0;
  double y_max = 0.0;
  for (const auto& c : curves) {
    episodes = std::max(episodes, c.mean_cumulative_regret.size());
    for (std::size_t k = 0; k < c.mean_cumulative_regret.size(); ++k) {
      if (c.count[k] == 0) continue;
      y_max = std::max(y_max, c.mean_cumulative_regret[k] + c.std_cumulative_regret[k]);
    }
  }
  const double x_max = nice_ceiling(static_cast<double>(std::max<std::size_t>(episodes, 1)));
  y_max = nice_ceiling(y_max);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double episode) { return kLeft + plot_w * episode / x_max; };
  auto py = [&](double value) { return kTop + plot_h * (1.0 - value / y_max); };

  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << escape(title) << "</text>\n";

  // Axes, ticks and grid.
  out << "<g font-family=\"sans-serif\" font-size=\"11\" stroke-width=\"1\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_max * i / 5.0;
    const double yv = y_max * i / 5.0;
    out << "<line x1=\"" << px(xv) << "\" y1=\"" << kTop << "\" x2=\"" << px(xv)
        << "\" y2=\"" << kTop + plot_h << "\" stroke=\"#eeeeee\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << py(yv) << "\" x2=\""
        << kLeft + plot_w << "\" y2=\"" << py(yv) << "\" stroke=\"#eeeeee\"/>\n";
    out << "<text x=\"" << px(xv) << "\" y=\"" << kTop + plot_h + 16
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
  }
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">episode</text>\n";
  out << "<text x=\"20\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << kTop + plot_h / 2
      << ")\">cumulative regret</text>\n";
  out << "</g>\n";

  // Long curves are thinned to keep the file small.
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const char* color = kPalette[ci % std::size(kPalette)];
    std::vector<std::size_t> idx;
    const std::size_t n = c.mean_cumulative_regret.size();
    const std::size_t stride = std::max<std::size_t>(1, n / 400);
    for (std::size_t k = 0; k < n; k += stride) {
      if (c.count[k] > 0) idx.push_back(k);
    }
    if (n > 0 && c.count[n - 1] > 0 && (idx.empty() || idx.back() != n - 1)) {
      idx.push_back(n - 1);
    }
    if (idx.empty()) continue;

    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (std::size_t k : idx) {
      out << px(k + 1.0) << ','
          << py(c.mean_cumulative_regret[k] + c.std_cumulative_regret[k]) << ' ';
    }
    for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
      const double lower = std::max(0.0, c.mean_cumulative_regret[*it] -
                                             c.std_cumulative_regret[*it]);
      out << px(*it + 1.0) << ',' << py(lower) << ' ';
    }
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k : idx) {
      out << px(k + 1.0) << ',' << py(c.mean_cumulative_regret[k]) << ' ';
    }
    out << "\"/>\n";

    const double ly = kTop + 10 + 20.0 * ci;
    const double lx = kLeft + plot_w + 15;
    out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 20
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text class=\"legend\" x=\"" << lx + 26 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(c.algorithm)
        << (c.partial ? " (partial)" : "") << "</text>\n";
  }
  out << "</svg>\n";
}

void emit_plot(const std::vector<AggregateCurve>& curves, const std::string& path,
               const std::string& title) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_plot_svg(out, curves, title);
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace dplsvi::bench
