#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tubekit {

/// Axis-aligned rectangle in continuous pixel coordinates, corners (x1,y1)-(x2,y2).
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x1 <= x2 && y1 <= y2;
  }

  static Box from_center(double cx, double cy, double w, double h) {
    return Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  }

  friend bool operator==(const Box& a, const Box& b) {
    return a.x1 == b.x1 && a.y1 == b.y1 && a.x2 == b.x2 && a.y2 == b.y2;
  }
};

/// A fixed-length sequence of per-frame boxes starting at start_frame.
struct Tubelet {
  int start_frame = 0;
  std::vector<Box> boxes;

  int length() const { return static_cast<int>(boxes.size()); }
  int end_frame() const { return start_frame + length() - 1; }
  bool covers(int frame) const {
    return frame >= start_frame && frame <= end_frame();
  }
  const Box& box_at(int frame) const { return boxes[frame - start_frame]; }
};

/// A variable-length box sequence with one class label and one score.
struct ActionTube {
  int start_frame = 0;
  std::vector<Box> boxes;
  int label = 0;
  double score = 0.0;

  int length() const { return static_cast<int>(boxes.size()); }
  int end_frame() const { return start_frame + length() - 1; }
  bool covers(int frame) const {
    return frame >= start_frame && frame <= end_frame();
  }
  const Box& box_at(int frame) const { return boxes[frame - start_frame]; }
};

/// Intersection-over-union of two boxes. Zero-area inputs are legal: the
/// 0/0 case is defined as 0.
inline double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  if (iw <= 0.0) {
    return 0.0;
  }
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ih <= 0.0) {
    return 0.0;
  }
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) {
    return 0.0;
  }
  return inter / uni;
}

/// Mean per-frame IoU of two tubelets covering the same frame range.
inline double tubelet_overlap(const Tubelet& a, const Tubelet& b) {
  if (a.start_frame != b.start_frame || a.length() != b.length()) {
    throw std::invalid_argument("tubelet_overlap: frame ranges differ");
  }
  if (a.boxes.empty()) {
    throw std::invalid_argument("tubelet_overlap: empty tubelet");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < a.boxes.size(); ++k) {
    sum += iou(a.boxes[k], b.boxes[k]);
  }
  return sum / static_cast<double>(a.boxes.size());
}

/// Mean IoU over the frames two tubelets both cover. The caller guarantees a
/// non-empty temporal intersection; an empty one is a linking logic bug.
inline double link_tubelet_overlap(const Tubelet& last_of_link,
                                   const Tubelet& t) {
  const int lo = std::max(last_of_link.start_frame, t.start_frame);
  const int hi = std::min(last_of_link.end_frame(), t.end_frame());
  if (lo > hi) {
    throw std::invalid_argument(
        "link_tubelet_overlap: empty temporal intersection");
  }
  double sum = 0.0;
  for (int f = lo; f <= hi; ++f) {
    sum += iou(last_of_link.box_at(f), t.box_at(f));
  }
  return sum / static_cast<double>(hi - lo + 1);
}

/// Spatio-temporal overlap between two tubes: per-frame IoU summed over the
/// temporal union of the two frame spans, divided by the union size. Frames
/// covered by only one tube contribute zero.
inline double tube_overlap(const ActionTube& a, const ActionTube& b) {
  const int ilo = std::max(a.start_frame, b.start_frame);
  const int ihi = std::min(a.end_frame(), b.end_frame());
  const int union_size = a.length() + b.length() -
                         std::max(0, ihi - ilo + 1);
  if (union_size <= 0) {
    return 0.0;
  }
  double sum = 0.0;
  for (int f = ilo; f <= ihi; ++f) {
    sum += iou(a.box_at(f), b.box_at(f));
  }
  return sum / static_cast<double>(union_size);
}

/// Mean IoU between a tube's box and the box of the same track n frames
/// later, averaged over all frame pairs inside the tube. High values mean
/// slow motion. Empty when the tube has no frame pair at distance n.
inline std::optional<double> motion_overlap(const ActionTube& gt, int n) {
  if (n < 0) {
    throw std::invalid_argument("motion_overlap: n must be >= 0");
  }
  if (n == 0) {
    return 1.0;
  }
  if (gt.length() <= n) {
    return std::nullopt;
  }
  double sum = 0.0;
  const int pairs = gt.length() - n;
  for (int k = 0; k < pairs; ++k) {
    sum += iou(gt.boxes[k], gt.boxes[k + n]);
  }
  return sum / static_cast<double>(pairs);
}

}  // namespace tubekit
