#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tankfdi::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

/// Vertical marker line, e.g. a detection instant.
struct Marker {
  double x = 0.0;
  std::string label;
  std::string id;
};

struct Chart {
  std::string title;
  std::string x_label = "t [s]";
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
  std::vector<Marker> markers;
  int width = 720;
  int height = 420;
  std::size_t max_points = 2000;  ///< per series, evenly strided
};

std::string render(const Chart& chart);
void write(const Chart& chart, const std::filesystem::path& path);

/// Fixed-width %.17g formatting used across all emitted files.
std::string number(double v);

}  // namespace tankfdi::svg
