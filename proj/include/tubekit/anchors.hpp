#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubekit/geometry.hpp"

namespace tubekit {

/// Layout of the dense anchor-cuboid set: one square feature grid per entry
/// of grid_sizes, with a matching per-grid scale. Anchors at a cell share its
/// center; one anchor per aspect ratio, plus an optional square anchor at the
/// geometric-mean scale of this grid and the next.
struct AnchorConfig {
  double image_width = 0.0;
  double image_height = 0.0;
  std::vector<int> grid_sizes;     // cells per side, strictly decreasing
  std::vector<double> scales;      // one per grid, fraction of image size
  std::vector<double> aspect_ratios = {1.0};  // w/h
  bool extra_square_anchor = false;
  int k = 1;

  int anchors_per_cell() const {
    return static_cast<int>(aspect_ratios.size()) +
           (extra_square_anchor ? 1 : 0);
  }

  int total_anchors() const {
    int n = 0;
    for (int g : grid_sizes) {
      n += g * g * anchors_per_cell();
    }
    return n;
  }

  void validate() const {
    if (image_width <= 0.0 || image_height <= 0.0) {
      throw std::invalid_argument("AnchorConfig: non-positive image size");
    }
    if (grid_sizes.empty() || grid_sizes.size() != scales.size()) {
      throw std::invalid_argument("AnchorConfig: grids and scales mismatch");
    }
    for (std::size_t i = 1; i < grid_sizes.size(); ++i) {
      if (grid_sizes[i] >= grid_sizes[i - 1]) {
        throw std::invalid_argument(
            "AnchorConfig: grid sizes must be strictly decreasing");
      }
    }
    for (double s : scales) {
      if (s <= 0.0 || s > 1.0) {
        throw std::invalid_argument("AnchorConfig: scales must be in (0,1]");
      }
    }
    for (double r : aspect_ratios) {
      if (r <= 0.0) {
        throw std::invalid_argument("AnchorConfig: non-positive aspect ratio");
      }
    }
    if (k < 1) {
      throw std::invalid_argument("AnchorConfig: k must be >= 1");
    }
  }

  /// The conventional multibox default: ratios {1, 2, 1/2, 3, 1/3} and the
  /// extra square anchor per cell.
  static AnchorConfig multibox_default(double width, double height,
                                       std::vector<int> grids,
                                       std::vector<double> scales, int k) {
    AnchorConfig cfg;
    cfg.image_width = width;
    cfg.image_height = height;
    cfg.grid_sizes = std::move(grids);
    cfg.scales = std::move(scales);
    cfg.aspect_ratios = {1.0, 2.0, 0.5, 3.0, 1.0 / 3.0};
    cfg.extra_square_anchor = true;
    cfg.k = k;
    return cfg;
  }
};

/// One anchor cuboid: a box with fixed spatial extent across the K frames of
/// a sequence, generated at a specific grid cell.
struct AnchorCuboid {
  Box box;
  int source_grid = 0;
  int row = 0;
  int col = 0;

  Tubelet as_tubelet(int start_frame, int k) const {
    return Tubelet{start_frame, std::vector<Box>(static_cast<std::size_t>(k), box)};
  }
};

namespace detail {

inline Box clip_to_image(Box b, double w, double h) {
  b.x1 = std::clamp(b.x1, 0.0, w);
  b.y1 = std::clamp(b.y1, 0.0, h);
  b.x2 = std::clamp(b.x2, 0.0, w);
  b.y2 = std::clamp(b.y2, 0.0, h);
  return b;
}

}  // namespace detail

/// Generates the dense anchor set in a fixed order: grid-major, then row,
/// col, ratio (extra square anchor last within a cell). Regeneration from the
/// same config is bit-identical.
inline std::vector<AnchorCuboid> generate_anchors(const AnchorConfig& cfg) {
  cfg.validate();
  std::vector<AnchorCuboid> anchors;
  anchors.reserve(static_cast<std::size_t>(cfg.total_anchors()));
  // A single image-size scalar keeps anchor areas aspect-free; equals the
  // side length for square images.
  const double image_size = std::sqrt(cfg.image_width * cfg.image_height);
  for (std::size_t g = 0; g < cfg.grid_sizes.size(); ++g) {
    const int cells = cfg.grid_sizes[g];
    const double cell_w = cfg.image_width / cells;
    const double cell_h = cfg.image_height / cells;
    const double base = cfg.scales[g] * image_size;
    // Scale of the extra square anchor: geometric mean with the next grid's
    // scale, with 1.0 past the coarsest grid.
    const double next_scale =
        (g + 1 < cfg.scales.size()) ? cfg.scales[g + 1] : 1.0;
    const double extra = std::sqrt(cfg.scales[g] * next_scale) * image_size;
    for (int row = 0; row < cells; ++row) {
      for (int col = 0; col < cells; ++col) {
        const double cx = (col + 0.5) * cell_w;
        const double cy = (row + 0.5) * cell_h;
        for (double ratio : cfg.aspect_ratios) {
          const double w = base * std::sqrt(ratio);
          const double h = base / std::sqrt(ratio);
          anchors.push_back(AnchorCuboid{
              detail::clip_to_image(Box::from_center(cx, cy, w, h),
                                    cfg.image_width, cfg.image_height),
              static_cast<int>(g), row, col});
        }
        if (cfg.extra_square_anchor) {
          anchors.push_back(AnchorCuboid{
              detail::clip_to_image(Box::from_center(cx, cy, extra, extra),
                                    cfg.image_width, cfg.image_height),
              static_cast<int>(g), row, col});
        }
      }
    }
  }
  return anchors;
}

/// Recall of the anchor set against ground-truth tubelets: per class and
/// threshold, the fraction of tubelets whose best anchor overlap reaches the
/// threshold. Classes without tubelets are excluded from the mean.
struct RecallTable {
  std::vector<int> classes;
  std::vector<double> thresholds;
  // values[c][t] for classes[c], thresholds[t]
  std::vector<std::vector<double>> values;
  std::vector<double> mean;  // unweighted over classes with tubelets
};

/// Best anchor overlap for one ground-truth tubelet (anchors replicated over
/// the tubelet's own frame range).
inline double best_anchor_overlap(const std::vector<AnchorCuboid>& anchors,
                                  const Tubelet& gt) {
  double best = 0.0;
  for (const AnchorCuboid& a : anchors) {
    double sum = 0.0;
    for (const Box& b : gt.boxes) {
      sum += iou(a.box, b);
    }
    best = std::max(best, sum / static_cast<double>(gt.boxes.size()));
  }
  return best;
}

inline RecallTable anchor_recall(
    const std::vector<AnchorCuboid>& anchors,
    const std::vector<std::pair<int, std::vector<Tubelet>>>& gt_by_class,
    const std::vector<double>& thresholds) {
  RecallTable table;
  table.thresholds = thresholds;
  table.mean.assign(thresholds.size(), 0.0);
  int classes_with_data = 0;
  for (const auto& [label, tubelets] : gt_by_class) {
    if (tubelets.empty()) {
      continue;
    }
    table.classes.push_back(label);
    std::vector<double> row(thresholds.size(), 0.0);
    for (const Tubelet& gt : tubelets) {
      const double best = best_anchor_overlap(anchors, gt);
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        if (best >= thresholds[t]) {
          row[t] += 1.0;
        }
      }
    }
    for (double& v : row) {
      v /= static_cast<double>(tubelets.size());
    }
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      table.mean[t] += row[t];
    }
    table.values.push_back(std::move(row));
    ++classes_with_data;
  }
  if (classes_with_data > 0) {
    for (double& v : table.mean) {
      v /= static_cast<double>(classes_with_data);
    }
  }
  return table;
}

}  // namespace tubekit
