#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "tubekit/geometry.hpp"
#include "tubekit/linker.hpp"

namespace tubekit {

// ---------------------------------------------------------------------------
// Generic average precision over scored items grouped by frame or video.

/// A scored detection of one class: group identifies the frame or video it
/// may match ground truth in, index points into the caller's geometry store.
struct ScoredItem {
  std::int64_t group = 0;
  double score = 0.0;
  std::size_t index = 0;
};

struct GtItem {
  std::int64_t group = 0;
  std::size_t index = 0;
};

using OverlapFn = std::function<double(std::size_t, std::size_t)>;

/// Result of the greedy score-ordered matching sweep for one class.
struct MatchSweep {
  std::vector<std::size_t> order;  // detection indices, descending score
  std::vector<bool> tp;
  std::vector<int> matched_gt;  // position in the gts vector, -1 if none
  std::size_t num_gt = 0;
};

/// Sorts detections by descending score and greedily matches each one to the
/// best still-unmatched ground truth of its group, a hit when the overlap
/// reaches the threshold.
inline MatchSweep greedy_match(const std::vector<ScoredItem>& dets,
                               const std::vector<GtItem>& gts,
                               const OverlapFn& overlap, double threshold) {
  MatchSweep sweep;
  sweep.num_gt = gts.size();
  sweep.order.resize(dets.size());
  std::iota(sweep.order.begin(), sweep.order.end(), std::size_t{0});
  std::stable_sort(sweep.order.begin(), sweep.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });
  std::vector<bool> gt_taken(gts.size(), false);
  sweep.tp.assign(dets.size(), false);
  sweep.matched_gt.assign(dets.size(), -1);
  for (std::size_t pos = 0; pos < sweep.order.size(); ++pos) {
    const ScoredItem& det = dets[sweep.order[pos]];
    double best = 0.0;
    int best_gt = -1;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (gt_taken[j] || gts[j].group != det.group) {
        continue;
      }
      const double ov = overlap(det.index, gts[j].index);
      if (ov > best) {
        best = ov;
        best_gt = static_cast<int>(j);
      }
    }
    if (best_gt >= 0 && best >= threshold) {
      gt_taken[best_gt] = true;
      sweep.tp[pos] = true;
      sweep.matched_gt[pos] = best_gt;
    }
  }
  return sweep;
}

enum class ApInterpolation { every_point, eleven_point };

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double score = 0.0;
};

inline std::vector<PrPoint> pr_curve(const MatchSweep& sweep,
                                     const std::vector<ScoredItem>& dets) {
  std::vector<PrPoint> curve;
  curve.reserve(sweep.order.size());
  double tp = 0.0;
  for (std::size_t pos = 0; pos < sweep.order.size(); ++pos) {
    if (sweep.tp[pos]) {
      tp += 1.0;
    }
    curve.push_back(PrPoint{
        sweep.num_gt > 0 ? tp / static_cast<double>(sweep.num_gt) : 0.0,
        tp / static_cast<double>(pos + 1), dets[sweep.order[pos]].score});
  }
  return curve;
}

/// Area under the precision-recall curve. Every-point interpolation by
/// default; the 11-point PASCAL-2007 variant is available for comparison.
inline double ap_from_sweep(
    const MatchSweep& sweep,
    ApInterpolation interp = ApInterpolation::every_point) {
  if (sweep.num_gt == 0) {
    throw std::invalid_argument("ap_from_sweep: no ground truth");
  }
  const std::size_t n = sweep.order.size();
  std::vector<double> recall(n), precision(n);
  double tp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sweep.tp[i]) {
      tp += 1.0;
    }
    recall[i] = tp / static_cast<double>(sweep.num_gt);
    precision[i] = tp / static_cast<double>(i + 1);
  }
  if (interp == ApInterpolation::eleven_point) {
    double sum = 0.0;
    for (int step = 0; step <= 10; ++step) {
      const double r = step / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (recall[i] >= r) {
          best = std::max(best, precision[i]);
        }
      }
      sum += best;
    }
    return sum / 11.0;
  }
  // Monotone precision envelope, integrated over recall steps.
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

inline double average_precision(
    const std::vector<ScoredItem>& dets, const std::vector<GtItem>& gts,
    const OverlapFn& overlap, double threshold,
    ApInterpolation interp = ApInterpolation::every_point) {
  return ap_from_sweep(greedy_match(dets, gts, overlap, threshold), interp);
}

// ---------------------------------------------------------------------------
// Dataset-level records.

struct FrameDetRecord {
  int video = 0;
  int frame = 0;
  int label = 0;
  double score = 0.0;
  Box box;
};

struct FrameGtRecord {
  int video = 0;
  int frame = 0;
  int label = 0;
  Box box;
};

struct TubeRecord {
  int video = 0;
  ActionTube tube;
};

/// A detected tubelet with its full score vector, for score-quality metrics.
struct TubeletRecord {
  int video = 0;
  Tubelet tubelet;
  std::vector<double> scores;  // C+1
};

namespace detail {

inline std::int64_t frame_group(int video, int frame) {
  return (static_cast<std::int64_t>(video) << 32) |
         static_cast<std::uint32_t>(frame);
}

inline std::vector<int> sorted_labels(const std::set<int>& s) {
  return std::vector<int>(s.begin(), s.end());
}

}  // namespace detail

struct PerClassValue {
  int label = 0;
  double value = 0.0;
};

struct MapResult {
  std::vector<PerClassValue> per_class;  // classes with ground truth only
  double mean = 0.0;
};

/// Frame-level mAP: per-frame box IoU as the matching criterion.
inline MapResult frame_map(
    const std::vector<FrameDetRecord>& dets,
    const std::vector<FrameGtRecord>& gts, double threshold,
    ApInterpolation interp = ApInterpolation::every_point) {
  std::set<int> labels;
  for (const FrameGtRecord& g : gts) {
    labels.insert(g.label);
  }
  MapResult result;
  for (int label : detail::sorted_labels(labels)) {
    std::vector<ScoredItem> cls_dets;
    std::vector<GtItem> cls_gts;
    std::vector<const Box*> det_boxes, gt_boxes;
    for (const FrameDetRecord& d : dets) {
      if (d.label == label) {
        cls_dets.push_back(ScoredItem{detail::frame_group(d.video, d.frame),
                                      d.score, det_boxes.size()});
        det_boxes.push_back(&d.box);
      }
    }
    for (const FrameGtRecord& g : gts) {
      if (g.label == label) {
        cls_gts.push_back(
            GtItem{detail::frame_group(g.video, g.frame), gt_boxes.size()});
        gt_boxes.push_back(&g.box);
      }
    }
    const double ap = average_precision(
        cls_dets, cls_gts,
        [&](std::size_t d, std::size_t g) {
          return iou(*det_boxes[d], *gt_boxes[g]);
        },
        threshold, interp);
    result.per_class.push_back(PerClassValue{label, ap});
    result.mean += ap;
  }
  if (!result.per_class.empty()) {
    result.mean /= static_cast<double>(result.per_class.size());
  }
  return result;
}

/// Video-level mAP: spatio-temporal tube overlap as the matching criterion.
inline MapResult video_map(
    const std::vector<TubeRecord>& dets, const std::vector<TubeRecord>& gts,
    double threshold,
    ApInterpolation interp = ApInterpolation::every_point) {
  std::set<int> labels;
  for (const TubeRecord& g : gts) {
    labels.insert(g.tube.label);
  }
  MapResult result;
  for (int label : detail::sorted_labels(labels)) {
    std::vector<ScoredItem> cls_dets;
    std::vector<GtItem> cls_gts;
    std::vector<const ActionTube*> det_tubes, gt_tubes;
    for (const TubeRecord& d : dets) {
      if (d.tube.label == label) {
        cls_dets.push_back(
            ScoredItem{d.video, d.tube.score, det_tubes.size()});
        det_tubes.push_back(&d.tube);
      }
    }
    for (const TubeRecord& g : gts) {
      if (g.tube.label == label) {
        cls_gts.push_back(GtItem{g.video, gt_tubes.size()});
        gt_tubes.push_back(&g.tube);
      }
    }
    const double ap = average_precision(
        cls_dets, cls_gts,
        [&](std::size_t d, std::size_t g) {
          return tube_overlap(*det_tubes[d], *gt_tubes[g]);
        },
        threshold, interp);
    result.per_class.push_back(PerClassValue{label, ap});
    result.mean += ap;
  }
  if (!result.per_class.empty()) {
    result.mean /= static_cast<double>(result.per_class.size());
  }
  return result;
}

/// Mean over the ten thresholds 0.50, 0.55, ..., 0.95.
inline double video_map_avg(
    const std::vector<TubeRecord>& dets, const std::vector<TubeRecord>& gts,
    ApInterpolation interp = ApInterpolation::every_point) {
  double sum = 0.0;
  for (int i = 0; i < 10; ++i) {
    sum += video_map(dets, gts, 0.5 + 0.05 * i, interp).mean;
  }
  return sum / 10.0;
}

// ---------------------------------------------------------------------------
// MABO.

/// Mean (over classes) of the average best overlap achieved for each ground
/// truth, scores ignored. Ground truths are matched against detections of
/// their own class in the same group.
struct MaboInputs {
  std::vector<ScoredItem> dets;  // scores unused
  std::vector<GtItem> gts;
  OverlapFn overlap;
};

inline double average_best_overlap(const MaboInputs& in) {
  if (in.gts.empty()) {
    throw std::invalid_argument("average_best_overlap: no ground truth");
  }
  double sum = 0.0;
  for (const GtItem& g : in.gts) {
    double best = 0.0;
    for (const ScoredItem& d : in.dets) {
      if (d.group == g.group) {
        best = std::max(best, in.overlap(d.index, g.index));
      }
    }
    sum += best;
  }
  return sum / static_cast<double>(in.gts.size());
}

inline double mabo_frames(const std::vector<FrameDetRecord>& dets,
                          const std::vector<FrameGtRecord>& gts) {
  std::set<int> labels;
  for (const FrameGtRecord& g : gts) {
    labels.insert(g.label);
  }
  double sum = 0.0;
  for (int label : detail::sorted_labels(labels)) {
    MaboInputs in;
    std::vector<const Box*> det_boxes, gt_boxes;
    for (const FrameDetRecord& d : dets) {
      if (d.label == label) {
        in.dets.push_back(ScoredItem{detail::frame_group(d.video, d.frame),
                                     d.score, det_boxes.size()});
        det_boxes.push_back(&d.box);
      }
    }
    for (const FrameGtRecord& g : gts) {
      if (g.label == label) {
        in.gts.push_back(
            GtItem{detail::frame_group(g.video, g.frame), gt_boxes.size()});
        gt_boxes.push_back(&g.box);
      }
    }
    in.overlap = [&](std::size_t d, std::size_t g) {
      return iou(*det_boxes[d], *gt_boxes[g]);
    };
    sum += average_best_overlap(in);
  }
  return labels.empty() ? 0.0 : sum / static_cast<double>(labels.size());
}

inline double mabo_tubes(const std::vector<TubeRecord>& dets,
                         const std::vector<TubeRecord>& gts) {
  std::set<int> labels;
  for (const TubeRecord& g : gts) {
    labels.insert(g.tube.label);
  }
  double sum = 0.0;
  for (int label : detail::sorted_labels(labels)) {
    MaboInputs in;
    std::vector<const ActionTube*> det_tubes, gt_tubes;
    for (const TubeRecord& d : dets) {
      if (d.tube.label == label) {
        in.dets.push_back(ScoredItem{d.video, d.tube.score, det_tubes.size()});
        det_tubes.push_back(&d.tube);
      }
    }
    for (const TubeRecord& g : gts) {
      if (g.tube.label == label) {
        in.gts.push_back(GtItem{g.video, gt_tubes.size()});
        gt_tubes.push_back(&g.tube);
      }
    }
    in.overlap = [&](std::size_t d, std::size_t g) {
      return tube_overlap(*det_tubes[d], *gt_tubes[g]);
    };
    sum += average_best_overlap(in);
  }
  return labels.empty() ? 0.0 : sum / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Classification accuracy.

/// Scoring quality with localization given: per ground-truth box, the mean
/// score vector of the tubelet boxes overlapping it strictly above the
/// threshold decides the label; boxes with no such detections are excluded.
struct ClassificationAccuracy {
  double accuracy = 0.0;
  std::size_t evaluated = 0;  // ground-truth boxes with at least one match
  std::size_t total = 0;
};

inline ClassificationAccuracy classification_accuracy(
    const std::vector<TubeletRecord>& tubelets,
    const std::vector<FrameGtRecord>& gts, int num_classes,
    double threshold = 0.7) {
  ClassificationAccuracy result;
  result.total = gts.size();
  std::size_t correct = 0;
  for (const FrameGtRecord& g : gts) {
    std::vector<double> mean(static_cast<std::size_t>(num_classes) + 1, 0.0);
    int n = 0;
    for (const TubeletRecord& t : tubelets) {
      if (t.video != g.video || !t.tubelet.covers(g.frame)) {
        continue;
      }
      if (iou(t.tubelet.box_at(g.frame), g.box) > threshold) {
        for (std::size_t c = 0; c < mean.size(); ++c) {
          mean[c] += t.scores[c];
        }
        ++n;
      }
    }
    if (n == 0) {
      continue;
    }
    ++result.evaluated;
    int best = 1;
    for (int c = 2; c <= num_classes; ++c) {
      if (mean[c] > mean[best]) {
        best = c;
      }
    }
    if (best == g.label) {
      ++correct;
    }
  }
  result.accuracy = result.evaluated > 0
                        ? static_cast<double>(correct) /
                              static_cast<double>(result.evaluated)
                        : 0.0;
  return result;
}

// ---------------------------------------------------------------------------
// Error breakdown.

enum class ErrorFactor { localization, classification, time, other };

/// Per-class temporal extents of the ground truth, for the time-error factor
/// on untrimmed data.
struct ClassExtent {
  int video = 0;
  int label = 0;
  int start_frame = 0;
  int end_frame = 0;
};

inline std::vector<ClassExtent> class_extents(
    const std::vector<TubeRecord>& gt_tubes) {
  std::vector<ClassExtent> out;
  out.reserve(gt_tubes.size());
  for (const TubeRecord& g : gt_tubes) {
    out.push_back(ClassExtent{g.video, g.tube.label, g.tube.start_frame,
                              g.tube.end_frame()});
  }
  return out;
}

struct ErrorBreakdown {
  double e_l = 0.0;  // localization
  double e_c = 0.0;  // classification
  double e_t = 0.0;  // time
  double e_o = 0.0;  // other
  double e_m = 0.0;  // missed detections
  std::size_t false_positives = 0;
  std::size_t classified = 0;  // factor assignments, must equal false_positives
};

namespace detail {

/// Assigns a false positive to exactly one factor, applying the factor
/// definitions in order.
inline ErrorFactor classify_false_positive(
    const FrameDetRecord& det, const std::vector<FrameGtRecord>& gts,
    const std::vector<ClassExtent>& extents, double threshold) {
  bool frame_has_class = false;
  bool overlaps_other_class = false;
  for (const FrameGtRecord& g : gts) {
    if (g.video != det.video || g.frame != det.frame) {
      continue;
    }
    if (g.label == det.label) {
      frame_has_class = true;
    } else if (iou(det.box, g.box) >= threshold) {
      overlaps_other_class = true;
    }
  }
  if (frame_has_class) {
    return ErrorFactor::localization;
  }
  if (overlaps_other_class) {
    return ErrorFactor::classification;
  }
  for (const ClassExtent& e : extents) {
    if (e.video == det.video && e.label == det.label) {
      // The video contains the class; the frame is outside its extent
      // (an in-extent frame would have carried a box of this class).
      return ErrorFactor::time;
    }
  }
  return ErrorFactor::other;
}

}  // namespace detail

/// Shares of the mAP lost to each error factor: the four false-positive
/// factors are areas under the per-category percentage-vs-recall curve on the
/// exact recall breakpoints of the frame-mAP sweep; missed detections are the
/// ground-truth boxes never matched. Aggregates are unweighted class means.
inline ErrorBreakdown error_breakdown(const std::vector<FrameDetRecord>& dets,
                                      const std::vector<FrameGtRecord>& gts,
                                      const std::vector<TubeRecord>& gt_tubes,
                                      double threshold = 0.5) {
  const std::vector<ClassExtent> extents = class_extents(gt_tubes);
  std::set<int> labels;
  for (const FrameGtRecord& g : gts) {
    labels.insert(g.label);
  }
  ErrorBreakdown total;
  int classes = 0;
  for (int label : detail::sorted_labels(labels)) {
    std::vector<ScoredItem> cls_dets;
    std::vector<GtItem> cls_gts;
    std::vector<const FrameDetRecord*> det_recs;
    std::vector<const FrameGtRecord*> gt_recs;
    for (const FrameDetRecord& d : dets) {
      if (d.label == label) {
        cls_dets.push_back(ScoredItem{detail::frame_group(d.video, d.frame),
                                      d.score, det_recs.size()});
        det_recs.push_back(&d);
      }
    }
    for (const FrameGtRecord& g : gts) {
      if (g.label == label) {
        cls_gts.push_back(
            GtItem{detail::frame_group(g.video, g.frame), gt_recs.size()});
        gt_recs.push_back(&g);
      }
    }
    const MatchSweep sweep = greedy_match(
        cls_dets, cls_gts,
        [&](std::size_t d, std::size_t g) {
          return iou(det_recs[d]->box, gt_recs[g]->box);
        },
        threshold);

    double tp = 0.0;
    double fl = 0.0, fc = 0.0, ft = 0.0, fo = 0.0;
    double prev_recall = 0.0;
    double auc_l = 0.0, auc_c = 0.0, auc_t = 0.0, auc_o = 0.0;
    for (std::size_t pos = 0; pos < sweep.order.size(); ++pos) {
      if (sweep.tp[pos]) {
        tp += 1.0;
        const double recall = tp / static_cast<double>(sweep.num_gt);
        const double k = static_cast<double>(pos + 1);
        const double dr = recall - prev_recall;
        auc_l += dr * fl / k;
        auc_c += dr * fc / k;
        auc_t += dr * ft / k;
        auc_o += dr * fo / k;
        prev_recall = recall;
      } else {
        total.false_positives += 1;
        switch (detail::classify_false_positive(
            *det_recs[cls_dets[sweep.order[pos]].index], gts, extents,
            threshold)) {
          case ErrorFactor::localization:
            fl += 1.0;
            break;
          case ErrorFactor::classification:
            fc += 1.0;
            break;
          case ErrorFactor::time:
            ft += 1.0;
            break;
          case ErrorFactor::other:
            fo += 1.0;
            break;
        }
        total.classified += 1;
      }
    }
    total.e_l += auc_l;
    total.e_c += auc_c;
    total.e_t += auc_t;
    total.e_o += auc_o;
    total.e_m += (static_cast<double>(sweep.num_gt) - tp) /
                 static_cast<double>(sweep.num_gt);
    ++classes;
  }
  if (classes > 0) {
    total.e_l /= classes;
    total.e_c /= classes;
    total.e_t /= classes;
    total.e_o /= classes;
    total.e_m /= classes;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Speed-stratified evaluation.

enum class SpeedStratum { slow = 0, medium = 1, fast = 2 };

struct SpeedBox {
  int video = 0;
  int frame = 0;
  int label = 0;
  Box box;
  double speed = 1.0;  // mean IoU with the +-10 frame instances
  SpeedStratum stratum = SpeedStratum::slow;
};

struct SpeedStrata {
  std::vector<SpeedBox> boxes;
  double fast_below = 0.0;  // speeds strictly below are fast
  double slow_from = 0.0;   // speeds at or above are slow
};

/// Speed of every ground-truth box: mean IoU with the same actor's boxes ten
/// frames away, falling back to the largest available gap for short tubes.
/// Strata are global tertiles; high IoU means slow motion.
inline SpeedStrata speed_strata(const std::vector<TubeRecord>& gt_tubes,
                                int gap = 10) {
  SpeedStrata out;
  for (const TubeRecord& rec : gt_tubes) {
    const ActionTube& tube = rec.tube;
    for (int f = tube.start_frame; f <= tube.end_frame(); ++f) {
      double speed = 1.0;
      for (int n = gap; n >= 1; --n) {
        double sum = 0.0;
        int count = 0;
        if (tube.covers(f - n)) {
          sum += iou(tube.box_at(f), tube.box_at(f - n));
          ++count;
        }
        if (tube.covers(f + n)) {
          sum += iou(tube.box_at(f), tube.box_at(f + n));
          ++count;
        }
        if (count > 0) {
          speed = sum / count;
          break;
        }
      }
      out.boxes.push_back(
          SpeedBox{rec.video, f, tube.label, tube.box_at(f), speed,
                   SpeedStratum::slow});
    }
  }
  if (out.boxes.empty()) {
    return out;
  }
  std::vector<double> speeds;
  speeds.reserve(out.boxes.size());
  for (const SpeedBox& b : out.boxes) {
    speeds.push_back(b.speed);
  }
  std::sort(speeds.begin(), speeds.end());
  const std::size_t n = speeds.size();
  out.fast_below = speeds[n / 3];
  out.slow_from = speeds[2 * n / 3];
  for (SpeedBox& b : out.boxes) {
    if (b.speed < out.fast_below) {
      b.stratum = SpeedStratum::fast;
    } else if (b.speed < out.slow_from) {
      b.stratum = SpeedStratum::medium;
    } else {
      b.stratum = SpeedStratum::slow;
    }
  }
  return out;
}

struct SpeedMapResult {
  double slow = 0.0;
  double medium = 0.0;
  double fast = 0.0;
};

/// Frame-mAP restricted to each stratum's ground truths. Detections matched
/// to an out-of-stratum ground truth in the full sweep are ignored rather
/// than counted as false positives.
inline SpeedMapResult speed_map(const std::vector<FrameDetRecord>& dets,
                                const std::vector<TubeRecord>& gt_tubes,
                                double threshold = 0.5, int gap = 10) {
  const SpeedStrata strata = speed_strata(gt_tubes, gap);
  std::vector<FrameGtRecord> all_gts;
  all_gts.reserve(strata.boxes.size());
  for (const SpeedBox& b : strata.boxes) {
    all_gts.push_back(FrameGtRecord{b.video, b.frame, b.label, b.box});
  }

  SpeedMapResult result;
  for (SpeedStratum stratum :
       {SpeedStratum::slow, SpeedStratum::medium, SpeedStratum::fast}) {
    // Which detections matched a ground truth outside this stratum?
    std::set<int> labels;
    for (const SpeedBox& b : strata.boxes) {
      labels.insert(b.label);
    }
    std::vector<FrameDetRecord> kept_dets;
    std::vector<FrameGtRecord> kept_gts;
    for (std::size_t i = 0; i < strata.boxes.size(); ++i) {
      if (strata.boxes[i].stratum == stratum) {
        kept_gts.push_back(all_gts[i]);
      }
    }
    for (int label : detail::sorted_labels(labels)) {
      std::vector<ScoredItem> cls_dets;
      std::vector<GtItem> cls_gts;
      std::vector<const FrameDetRecord*> det_recs;
      std::vector<std::size_t> gt_pos;  // into strata.boxes
      for (const FrameDetRecord& d : dets) {
        if (d.label == label) {
          cls_dets.push_back(ScoredItem{detail::frame_group(d.video, d.frame),
                                        d.score, det_recs.size()});
          det_recs.push_back(&d);
        }
      }
      for (std::size_t i = 0; i < strata.boxes.size(); ++i) {
        if (strata.boxes[i].label == label) {
          cls_gts.push_back(GtItem{
              detail::frame_group(strata.boxes[i].video,
                                  strata.boxes[i].frame),
              gt_pos.size()});
          gt_pos.push_back(i);
        }
      }
      const MatchSweep sweep = greedy_match(
          cls_dets, cls_gts,
          [&](std::size_t d, std::size_t g) {
            return iou(det_recs[d]->box, strata.boxes[gt_pos[g]].box);
          },
          threshold);
      for (std::size_t pos = 0; pos < sweep.order.size(); ++pos) {
        if (sweep.matched_gt[pos] >= 0 &&
            strata.boxes[gt_pos[sweep.matched_gt[pos]]].stratum != stratum) {
          continue;  // ignored, not kept
        }
        kept_dets.push_back(*det_recs[cls_dets[sweep.order[pos]].index]);
      }
    }
    const double value =
        kept_gts.empty() ? 0.0 : frame_map(kept_dets, kept_gts, threshold).mean;
    switch (stratum) {
      case SpeedStratum::slow:
        result.slow = value;
        break;
      case SpeedStratum::medium:
        result.medium = value;
        break;
      case SpeedStratum::fast:
        result.fast = value;
        break;
    }
  }
  return result;
}

}  // namespace tubekit
