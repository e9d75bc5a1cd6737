#include "nucleifuse/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nucleifuse/dataset.hpp"

namespace nucleifuse::plot {
namespace {

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::vector<std::string>& x_labels,
                          const std::vector<Series>& series, const std::string& y_label) {
  constexpr double W = 720, H = 420, left = 70, right = 150, top = 40, bottom = 70;
  const double pw = W - left - right, ph = H - top - bottom;

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& s : series) {
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  lo = std::min(lo, 0.0);
  if (hi <= lo) hi = lo + 1.0;

  const std::size_t n = x_labels.size();
  auto xpos = [&](std::size_t i) { return left + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : pw / 2); };
  auto ypos = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(ypos(v) + 4) << "\" text-anchor=\"end\">" << fmt(v)
       << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    os << "<text x=\"" << fmt(xpos(i)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
       << escape(x_labels[i]) << "</text>\n";
  }
  os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % kPalette.size()];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < std::min(n, series[s].y.size()); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      os << fmt(xpos(i)) << ',' << fmt(ypos(series[s].y[i])) << ' ';
    }
    os << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(s);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
       << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly + 4 << "\">" << escape(series[s].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string selection_svg(const classify::SelectionTable& table) {
  std::vector<Series> series;
  for (std::size_t c = 0; c < table.classifiers.size(); ++c) {
    Series s{table.classifiers[c], {}};
    for (std::size_t d = 0; d < table.descriptors.size(); ++d) s.y.push_back(table.loss(d, c));
    series.push_back(std::move(s));
  }
  return line_plot_svg("Cross-validated loss per classifier", table.descriptors, series, "cross-entropy");
}

std::string histograms_svg(const std::string& title, const ensemble::ProbabilityHistogram& hist) {
  constexpr double panel_w = 300, panel_h = 200, gap = 40, top = 40;
  const double W = 2 * panel_w + 3 * gap, H = top + 2 * (panel_h + gap) + 10;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";

  const auto names = dataset::kClassNames;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double x0 = gap + static_cast<double>(c % 2) * (panel_w + gap);
    const double y0 = top + static_cast<double>(c / 2) * (panel_h + gap);
    double peak = 0.0;
    for (std::size_t b = 0; b < hist.bins; ++b) peak = std::max(peak, hist.counts(c, b));
    if (peak <= 0.0) peak = 1.0;

    os << "<text x=\"" << x0 + panel_w / 2 << "\" y=\"" << y0 + 12 << "\" text-anchor=\"middle\">"
       << escape(std::string(names[c])) << "</text>\n";
    const double plot_top = y0 + 18, plot_h = panel_h - 30;
    const double bw = panel_w / static_cast<double>(hist.bins);
    for (std::size_t b = 0; b < hist.bins; ++b) {
      const double h = plot_h * hist.counts(c, b) / peak;
      os << "<rect x=\"" << fmt(x0 + bw * static_cast<double>(b)) << "\" y=\"" << fmt(plot_top + plot_h - h)
         << "\" width=\"" << fmt(bw * 0.9) << "\" height=\"" << fmt(h) << "\" fill=\"" << kPalette[c] << "\"/>\n";
    }
    os << "<line x1=\"" << x0 << "\" y1=\"" << plot_top + plot_h << "\" x2=\"" << x0 + panel_w << "\" y2=\""
       << plot_top + plot_h << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x0 << "\" y=\"" << plot_top + plot_h + 14 << "\">0</text>\n";
    os << "<text x=\"" << x0 + panel_w << "\" y=\"" << plot_top + plot_h + 14 << "\" text-anchor=\"end\">1</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace nucleifuse::plot
