#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gasduino {

struct ChartOptions {
  int width = 80;    // total columns, label gutter included
  int height = 20;   // total rows
  double guide_low = 50.0;
  double guide_high = 150.0;
};

// Renders (t, ppm) points as a fixed-size character plot. The y axis always
// spans [0, max(200, data max)] so both guide lines stay visible; points are
// drawn as '*' over '-' guides. Returns height lines of exactly width chars.
inline std::string render_chart(std::span<const std::pair<double, double>> points,
                                const ChartOptions& options = {}) {
  const int gutter = 8;  // "%6.0f |"
  const int rows = options.height;
  const int plot_cols = options.width - gutter;

  double max_ppm = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  if (!points.empty()) {
    t_min = t_max = points.front().first;
    for (const auto& [t, ppm] : points) {
      max_ppm = std::max(max_ppm, ppm);
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
    }
  }
  const double y_max = std::max(200.0, std::ceil(max_ppm / 50.0) * 50.0);

  const auto row_for = [&](double value) {
    const double frac = 1.0 - value / y_max;
    const int row = static_cast<int>(std::lround(frac * (rows - 1)));
    return std::clamp(row, 0, rows - 1);
  };

  std::vector<std::string> grid(rows, std::string(options.width, ' '));
  for (std::string& line : grid) line[gutter - 1] = '|';

  const auto label = [&](int row, double value) {
    char text[16];
    std::snprintf(text, sizeof(text), "%6.0f", value);
    grid[row].replace(0, 6, text, 6);
  };
  label(0, y_max);
  label(rows - 1, 0.0);

  for (double guide : {options.guide_low, options.guide_high}) {
    if (guide <= 0.0 || guide > y_max) continue;
    const int row = row_for(guide);
    for (int col = gutter; col < options.width; ++col) grid[row][col] = '-';
    label(row, guide);
  }

  const double t_span = t_max - t_min;
  for (const auto& [t, ppm] : points) {
    const double frac = t_span > 0.0 ? (t - t_min) / t_span : 0.0;
    const int col = gutter + static_cast<int>(std::lround(frac * (plot_cols - 1)));
    grid[row_for(ppm)][std::clamp(col, gutter, options.width - 1)] = '*';
  }

  std::string out;
  out.reserve(static_cast<std::size_t>(rows) * (options.width + 1));
  for (const std::string& line : grid) {
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace gasduino
