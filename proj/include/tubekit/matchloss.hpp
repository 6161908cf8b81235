#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tubekit/anchors.hpp"
#include "tubekit/geometry.hpp"

namespace tubekit {

constexpr double kMatchThreshold = 0.5;
constexpr double kHardNegativeRatio = 3.0;

/// Ground-truth assignment for one training sequence: anchors matched to
/// their single best-overlapping ground truth, everything else negative.
struct Assignment {
  struct Positive {
    int anchor = 0;
    int gt = 0;
    int label = 0;
  };
  std::vector<Positive> positives;
  std::vector<int> negatives;

  int n_pos() const { return static_cast<int>(positives.size()); }
};

/// Assigns each anchor with best tubelet overlap >= threshold to its
/// highest-overlap ground truth (ties to the lowest ground-truth index).
inline Assignment assign(const std::vector<AnchorCuboid>& anchors,
                         const std::vector<Tubelet>& gt_tubelets,
                         const std::vector<int>& gt_labels,
                         double threshold = kMatchThreshold) {
  if (gt_tubelets.size() != gt_labels.size()) {
    throw std::invalid_argument("assign: tubelets/labels size mismatch");
  }
  Assignment asg;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    double best = 0.0;
    int best_gt = -1;
    for (std::size_t j = 0; j < gt_tubelets.size(); ++j) {
      double sum = 0.0;
      for (const Box& b : gt_tubelets[j].boxes) {
        sum += iou(anchors[i].box, b);
      }
      const double ov = sum / static_cast<double>(gt_tubelets[j].boxes.size());
      if (ov > best) {
        best = ov;
        best_gt = static_cast<int>(j);
      }
    }
    if (best_gt >= 0 && best >= threshold) {
      asg.positives.push_back(
          {static_cast<int>(i), best_gt, gt_labels[best_gt]});
    } else {
      asg.negatives.push_back(static_cast<int>(i));
    }
  }
  return asg;
}

/// Per-frame regression offsets against one anchor: center offsets normalized
/// by the anchor size and log size ratios, 4 values per frame.
struct RegressionTarget {
  std::vector<double> values;  // (tx, ty, tw, th) per frame
};

inline RegressionTarget encode(const AnchorCuboid& anchor, const Tubelet& gt) {
  const double aw = anchor.box.width();
  const double ah = anchor.box.height();
  if (aw <= 0.0 || ah <= 0.0) {
    throw std::invalid_argument("encode: degenerate anchor");
  }
  RegressionTarget target;
  target.values.reserve(gt.boxes.size() * 4);
  for (const Box& g : gt.boxes) {
    if (g.width() <= 0.0 || g.height() <= 0.0) {
      throw std::invalid_argument("encode: non-positive ground-truth box size");
    }
    target.values.push_back((g.cx() - anchor.box.cx()) / aw);
    target.values.push_back((g.cy() - anchor.box.cy()) / ah);
    target.values.push_back(std::log(g.width() / aw));
    target.values.push_back(std::log(g.height() / ah));
  }
  return target;
}

inline Tubelet decode(const AnchorCuboid& anchor,
                      const RegressionTarget& target, int start_frame) {
  if (target.values.size() % 4 != 0) {
    throw std::invalid_argument("decode: target size not a multiple of 4");
  }
  const double aw = anchor.box.width();
  const double ah = anchor.box.height();
  Tubelet out;
  out.start_frame = start_frame;
  for (std::size_t k = 0; k * 4 < target.values.size(); ++k) {
    const double* t = &target.values[k * 4];
    const double cx = t[0] * aw + anchor.box.cx();
    const double cy = t[1] * ah + anchor.box.cy();
    const double w = std::exp(t[2]) * aw;
    const double h = std::exp(t[3]) * ah;
    out.boxes.push_back(Box::from_center(cx, cy, w, h));
  }
  return out;
}

/// Smooth-L1: quadratic inside the unit interval, linear outside.
inline double smooth_l1(double d) {
  const double ad = std::abs(d);
  return ad < 1.0 ? 0.5 * d * d : ad - 0.5;
}

inline double smooth_l1_grad(double d) {
  if (std::abs(d) < 1.0) {
    return d;
  }
  return d > 0.0 ? 1.0 : -1.0;
}

/// Raw head outputs for one sequence: per-anchor class logits and 4K
/// regression values.
struct Predictions {
  int num_classes = 0;  // foreground classes C; logits carry C+1 entries
  int k = 1;
  std::vector<double> logits;       // n_anchors x (C+1)
  std::vector<double> regressions;  // n_anchors x 4K

  int n_anchors() const {
    return num_classes > 0
               ? static_cast<int>(logits.size()) / (num_classes + 1)
               : 0;
  }
  const double* logits_of(int anchor) const {
    return &logits[static_cast<std::size_t>(anchor) * (num_classes + 1)];
  }
  const double* regression_of(int anchor) const {
    return &regressions[static_cast<std::size_t>(anchor) * 4 * k];
  }
};

/// Numerically stabilized softmax over C+1 logits.
inline std::vector<double> softmax(const double* logits, int n) {
  const double peak = *std::max_element(logits, logits + n);
  std::vector<double> p(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int c = 0; c < n; ++c) {
    p[c] = std::exp(logits[c] - peak);
    sum += p[c];
  }
  for (double& v : p) {
    v /= sum;
  }
  return p;
}

struct ConfidenceLoss {
  double value = 0.0;
  std::vector<double> dlogits;  // same shape as Predictions::logits
  int negatives_kept = 0;
};

/// Softmax cross-entropy over positives (true class) plus the hardest
/// negatives (background class), keeping ceil(ratio * n_pos) negatives ranked
/// by their background cross-entropy.
inline ConfidenceLoss confidence_loss(const Predictions& pred,
                                      const Assignment& asg,
                                      double hnm_ratio = kHardNegativeRatio) {
  if (hnm_ratio <= 0.0) {
    throw std::invalid_argument("confidence_loss: hnm_ratio must be > 0");
  }
  ConfidenceLoss out;
  out.dlogits.assign(pred.logits.size(), 0.0);
  if (asg.n_pos() == 0) {
    return out;
  }
  const int nc = pred.num_classes + 1;
  for (const Assignment::Positive& p : asg.positives) {
    const std::vector<double> prob = softmax(pred.logits_of(p.anchor), nc);
    out.value -= std::log(std::max(prob[p.label], 1e-300));
    double* g = &out.dlogits[static_cast<std::size_t>(p.anchor) * nc];
    for (int c = 0; c < nc; ++c) {
      g[c] += prob[c] - (c == p.label ? 1.0 : 0.0);
    }
  }
  // Rank negatives by background cross-entropy, hardest first. A stable sort
  // keeps the summed loss invariant under anchor reordering.
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(asg.negatives.size());
  for (int i : asg.negatives) {
    const std::vector<double> prob = softmax(pred.logits_of(i), nc);
    ranked.emplace_back(-std::log(std::max(prob[0], 1e-300)), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const auto keep = std::min(
      ranked.size(),
      static_cast<std::size_t>(std::ceil(hnm_ratio * asg.n_pos())));
  for (std::size_t n = 0; n < keep; ++n) {
    const int i = ranked[n].second;
    out.value += ranked[n].first;
    const std::vector<double> prob = softmax(pred.logits_of(i), nc);
    double* g = &out.dlogits[static_cast<std::size_t>(i) * nc];
    for (int c = 0; c < nc; ++c) {
      g[c] += prob[c] - (c == 0 ? 1.0 : 0.0);
    }
  }
  out.negatives_kept = static_cast<int>(keep);
  return out;
}

struct RegressionLoss {
  double value = 0.0;
  std::vector<double> dregressions;  // same shape as Predictions::regressions
};

/// Smooth-L1 over all positive anchors, coordinates and frames, averaged over
/// the K frames. Targets are indexed parallel to the assignment's positives.
inline RegressionLoss regression_loss(
    const Predictions& pred, const Assignment& asg,
    const std::vector<RegressionTarget>& targets) {
  if (targets.size() != asg.positives.size()) {
    throw std::invalid_argument("regression_loss: targets/positives mismatch");
  }
  RegressionLoss out;
  out.dregressions.assign(pred.regressions.size(), 0.0);
  const int dims = 4 * pred.k;
  for (std::size_t p = 0; p < asg.positives.size(); ++p) {
    const int anchor = asg.positives[p].anchor;
    const double* r = pred.regression_of(anchor);
    const std::vector<double>& t = targets[p].values;
    if (static_cast<int>(t.size()) != dims) {
      throw std::invalid_argument("regression_loss: target dimension mismatch");
    }
    double* g =
        &out.dregressions[static_cast<std::size_t>(anchor) * dims];
    for (int d = 0; d < dims; ++d) {
      const double diff = r[d] - t[d];
      out.value += smooth_l1(diff);
      g[d] += smooth_l1_grad(diff);
    }
  }
  out.value /= pred.k;
  for (double& v : out.dregressions) {
    v /= pred.k;
  }
  return out;
}

struct TotalLoss {
  double value = 0.0;
  double confidence = 0.0;  // unnormalized
  double regression = 0.0;  // unnormalized
  std::vector<double> dlogits;
  std::vector<double> dregressions;
};

/// (confidence + regression) / N with N the number of positive assignments.
/// Sequences without positives contribute nothing.
inline TotalLoss total_loss(const Predictions& pred, const Assignment& asg,
                            const std::vector<RegressionTarget>& targets,
                            double hnm_ratio = kHardNegativeRatio) {
  TotalLoss out;
  out.dlogits.assign(pred.logits.size(), 0.0);
  out.dregressions.assign(pred.regressions.size(), 0.0);
  if (asg.n_pos() == 0) {
    return out;
  }
  const ConfidenceLoss conf = confidence_loss(pred, asg, hnm_ratio);
  const RegressionLoss reg = regression_loss(pred, asg, targets);
  const double n = asg.n_pos();
  out.confidence = conf.value;
  out.regression = reg.value;
  out.value = (conf.value + reg.value) / n;
  for (std::size_t i = 0; i < out.dlogits.size(); ++i) {
    out.dlogits[i] = conf.dlogits[i] / n;
  }
  for (std::size_t i = 0; i < out.dregressions.size(); ++i) {
    out.dregressions[i] = reg.dregressions[i] / n;
  }
  return out;
}

}  // namespace tubekit
