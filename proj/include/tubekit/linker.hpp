#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tubekit/geometry.hpp"
#include "tubekit/head.hpp"

namespace tubekit {

struct LinkerConfig {
  double nms_threshold = 0.3;
  int top_n = 10;
  double tau = 0.2;
  int k = 1;
  int patience = 0;  // frames a link may go unextended

  static LinkerConfig with_k(int k) {
    LinkerConfig cfg;
    cfg.k = k;
    cfg.patience = k - 1;
    return cfg;
  }
};

/// Greedy per-class NMS on tubelets by descending class score, then keep the
/// top_n survivors. All input tubelets share a start frame.
inline std::vector<ScoredTubelet> tubelet_nms(
    std::vector<ScoredTubelet> dets, int label, const LinkerConfig& cfg) {
  std::stable_sort(dets.begin(), dets.end(),
                   [label](const ScoredTubelet& a, const ScoredTubelet& b) {
                     if (a.scores[label] != b.scores[label]) {
                       return a.scores[label] > b.scores[label];
                     }
                     return a.anchor < b.anchor;
                   });
  std::vector<ScoredTubelet> kept;
  for (const ScoredTubelet& d : dets) {
    bool keep = true;
    for (const ScoredTubelet& k : kept) {
      if (tubelet_overlap(k.tubelet, d.tubelet) > cfg.nms_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) {
      kept.push_back(d);
      if (static_cast<int>(kept.size()) >= cfg.top_n) {
        break;
      }
    }
  }
  return kept;
}

/// A chain of same-class tubelets under construction. The link score is the
/// running mean of the members' class scores.
struct Link {
  int label = 0;
  std::vector<ScoredTubelet> tubelets;
  double score = 0.0;
  int frames_since_extension = 0;

  int last_end_frame() const { return tubelets.back().tubelet.end_frame(); }
};

struct LinkerState {
  std::vector<Link> live;
  std::vector<Link> finished;
};

namespace detail {

/// Overlap between a link and a candidate. Shared frames use the mean IoU
/// over them; a candidate starting right after the link's coverage (the
/// largest gap the termination rule admits) falls back to the IoU of the
/// temporally adjacent boxes.
inline double link_candidate_overlap(const Link& link, const Tubelet& cand) {
  const Tubelet& last = link.tubelets.back().tubelet;
  if (cand.start_frame <= last.end_frame()) {
    return link_tubelet_overlap(last, cand);
  }
  if (cand.start_frame == last.end_frame() + 1) {
    return iou(last.boxes.back(), cand.boxes.front());
  }
  return -1.0;
}

}  // namespace detail

/// One step of the online linking: extends live links with this frame's
/// candidates (already NMS-filtered), starts new links from unclaimed
/// candidates, and finalizes links unextended for longer than the patience.
///
/// Links are processed in descending score order; each takes the
/// highest-scored unclaimed same-class candidate whose overlap reaches tau.
inline void link_frame(
    LinkerState& state, int frame,
    const std::vector<std::vector<ScoredTubelet>>& candidates_per_class,
    const LinkerConfig& cfg) {
  std::vector<std::size_t> order(state.live.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return state.live[a].score > state.live[b].score;
                   });
  std::vector<std::vector<bool>> claimed(candidates_per_class.size());
  for (std::size_t c = 0; c < candidates_per_class.size(); ++c) {
    claimed[c].assign(candidates_per_class[c].size(), false);
  }

  for (std::size_t idx : order) {
    Link& link = state.live[idx];
    const auto& cands =
        static_cast<std::size_t>(link.label) < candidates_per_class.size()
            ? candidates_per_class[link.label]
            : std::vector<ScoredTubelet>{};
    int best = -1;
    for (std::size_t j = 0; j < cands.size(); ++j) {
      if (claimed[link.label][j]) {
        continue;
      }
      if (detail::link_candidate_overlap(link, cands[j].tubelet) < cfg.tau) {
        continue;
      }
      if (best < 0 ||
          cands[j].scores[link.label] > cands[best].scores[link.label] ||
          (cands[j].scores[link.label] == cands[best].scores[link.label] &&
           cands[j].anchor < cands[best].anchor)) {
        best = static_cast<int>(j);
      }
    }
    if (best >= 0) {
      claimed[link.label][best] = true;
      link.tubelets.push_back(cands[best]);
      double sum = 0.0;
      for (const ScoredTubelet& t : link.tubelets) {
        sum += t.scores[link.label];
      }
      link.score = sum / static_cast<double>(link.tubelets.size());
      link.frames_since_extension = 0;
    } else {
      link.frames_since_extension += 1;
    }
  }

  // Unclaimed candidates start new links.
  for (std::size_t c = 0; c < candidates_per_class.size(); ++c) {
    for (std::size_t j = 0; j < candidates_per_class[c].size(); ++j) {
      if (claimed[c][j]) {
        continue;
      }
      const ScoredTubelet& t = candidates_per_class[c][j];
      state.live.push_back(Link{static_cast<int>(c),
                                {t},
                                t.scores[c],
                                0});
    }
  }

  // Terminate links past their patience.
  std::vector<Link> still_live;
  still_live.reserve(state.live.size());
  for (Link& link : state.live) {
    if (link.frames_since_extension > cfg.patience) {
      state.finished.push_back(std::move(link));
    } else {
      still_live.push_back(std::move(link));
    }
  }
  state.live = std::move(still_live);
  (void)frame;
}

/// Moves every remaining live link to finished (end of video).
inline void finalize_links(LinkerState& state) {
  for (Link& link : state.live) {
    state.finished.push_back(std::move(link));
  }
  state.live.clear();
}

/// Temporal smoothing: the tube's box at each frame is the coordinate-wise
/// mean over the member tubelets covering that frame.
inline ActionTube smooth_to_tube(const Link& link) {
  if (link.tubelets.empty()) {
    throw std::invalid_argument("smooth_to_tube: empty link");
  }
  ActionTube tube;
  tube.label = link.label;
  tube.score = link.score;
  tube.start_frame = link.tubelets.front().tubelet.start_frame;
  const int last = link.last_end_frame();
  for (int f = tube.start_frame; f <= last; ++f) {
    Box mean{0, 0, 0, 0};
    int n = 0;
    for (const ScoredTubelet& t : link.tubelets) {
      if (!t.tubelet.covers(f)) {
        continue;
      }
      const Box& b = t.tubelet.box_at(f);
      mean.x1 += b.x1;
      mean.y1 += b.y1;
      mean.x2 += b.x2;
      mean.y2 += b.y2;
      ++n;
    }
    mean.x1 /= n;
    mean.y1 /= n;
    mean.x2 /= n;
    mean.y2 /= n;
    tube.boxes.push_back(mean);
  }
  return tube;
}

/// Full video pass: NMS + top-N per class per start frame, online linking,
/// then smoothing. start_frames must be ascending; detections[i] belongs to
/// start_frames[i].
inline std::vector<ActionTube> link_video(
    const std::vector<int>& start_frames,
    const std::vector<Detections>& detections, const LinkerConfig& cfg) {
  if (start_frames.size() != detections.size()) {
    throw std::invalid_argument("link_video: frames/detections mismatch");
  }
  LinkerState state;
  for (std::size_t i = 0; i < start_frames.size(); ++i) {
    std::vector<std::vector<ScoredTubelet>> filtered(
        detections[i].per_class.size());
    for (std::size_t c = 1; c < detections[i].per_class.size(); ++c) {
      filtered[c] =
          tubelet_nms(detections[i].per_class[c], static_cast<int>(c), cfg);
    }
    link_frame(state, start_frames[i], filtered, cfg);
  }
  finalize_links(state);
  std::vector<ActionTube> tubes;
  tubes.reserve(state.finished.size());
  for (const Link& link : state.finished) {
    tubes.push_back(smooth_to_tube(link));
  }
  return tubes;
}

/// Boxes at one frame from every tubelet passing through it, with their
/// class scores, after per-class box NMS. Feeds the frame-level metrics.
struct FrameDetection {
  int label = 0;
  double score = 0.0;
  Box box;
};

inline std::vector<FrameDetection> frame_level_detections(
    const std::vector<std::vector<ScoredTubelet>>& per_class, int frame,
    double nms_threshold) {
  std::vector<FrameDetection> out;
  for (std::size_t c = 1; c < per_class.size(); ++c) {
    std::vector<FrameDetection> cls;
    for (const ScoredTubelet& t : per_class[c]) {
      if (t.tubelet.covers(frame)) {
        cls.push_back(FrameDetection{static_cast<int>(c), t.scores[c],
                                     t.tubelet.box_at(frame)});
      }
    }
    std::stable_sort(cls.begin(), cls.end(),
                     [](const FrameDetection& a, const FrameDetection& b) {
                       return a.score > b.score;
                     });
    std::vector<FrameDetection> kept;
    for (const FrameDetection& d : cls) {
      bool keep = true;
      for (const FrameDetection& k : kept) {
        if (iou(k.box, d.box) > nms_threshold) {
          keep = false;
          break;
        }
      }
      if (keep) {
        kept.push_back(d);
      }
    }
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

}  // namespace tubekit
