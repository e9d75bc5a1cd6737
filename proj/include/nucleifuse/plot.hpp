#pragma once

#include <string>
#include <vector>

#include "nucleifuse/ensemble.hpp"

namespace nucleifuse::plot {

struct Series {
  std::string name;
  std::vector<double> y;  // one value per x label
};

// Category x axis, one polyline per series.
std::string line_plot_svg(const std::string& title, const std::vector<std::string>& x_labels,
                          const std::vector<Series>& series, const std::string& y_label);

std::string selection_svg(const classify::SelectionTable& table);

// One bar panel per class.
std::string histograms_svg(const std::string& title, const ensemble::ProbabilityHistogram& hist);

}  // namespace nucleifuse::plot
