#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubekit/anchors.hpp"
#include "tubekit/geometry.hpp"
#include "tubekit/head.hpp"
#include "tubekit/metrics.hpp"

namespace tubekit {

/// One synthetic actor: a box translating at constant velocity, with an
/// optional linear size drift, alive over [start_frame, end_frame].
struct ActorSpec {
  int label = 1;
  Box start_box;
  double vx = 0.0;
  double vy = 0.0;
  double dw = 0.0;  // width drift per frame
  double dh = 0.0;
  int start_frame = 0;
  int end_frame = 0;
};

/// How classes are told apart in the features. In motion_only mode all
/// classes share one appearance signature and differ only through their
/// motion, so single-frame appearance is ambiguous by construction.
enum class SignatureMode { appearance, motion_only };

inline const char* to_string(SignatureMode m) {
  return m == SignatureMode::appearance ? "appearance" : "motion_only";
}

inline SignatureMode signature_mode_from_string(const std::string& s) {
  if (s == "appearance") {
    return SignatureMode::appearance;
  }
  if (s == "motion_only") {
    return SignatureMode::motion_only;
  }
  throw std::invalid_argument("unknown signature mode: " + s);
}

/// Configuration of one synthetic video.
struct SceneConfig {
  double image_width = 0.0;
  double image_height = 0.0;
  int frames = 0;
  std::vector<ActorSpec> actors;
  SignatureMode mode = SignatureMode::appearance;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> grid_sizes;
  int channels = 6;  // >= 5: presence, rel x, rel y, signature...
};

/// Per-frame feature volumes for the two streams plus the ground truth.
struct Scene {
  std::vector<FeatureVolume> appearance;
  std::vector<FeatureVolume> motion;
  std::vector<ActionTube> gt;
};

namespace detail {

inline Box actor_box_at(const ActorSpec& a, int frame) {
  const double t = frame - a.start_frame;
  const double w = a.start_box.width() + a.dw * t;
  const double h = a.start_box.height() + a.dh * t;
  return Box::from_center(a.start_box.cx() + a.vx * t,
                          a.start_box.cy() + a.vy * t, w, h);
}

/// Appearance signature for a class, stable across runs. In motion_only mode
/// every class maps to the same signature.
inline std::vector<double> appearance_signature(int label, int channels,
                                                SignatureMode mode) {
  const int key = mode == SignatureMode::motion_only ? 0 : label;
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull * (key + 1));
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  std::vector<double> sig(static_cast<std::size_t>(channels) - 3);
  for (double& v : sig) {
    v = dist(rng);
  }
  return sig;
}

}  // namespace detail

/// Generates one synthetic video. Actor presence writes a signature into the
/// feature cells its box covers: the appearance stream carries the class
/// signature, the motion stream the normalized frame-to-frame displacement.
/// Bit-deterministic for a fixed config.
inline Scene generate_scene(const SceneConfig& cfg) {
  if (cfg.image_width <= 0 || cfg.image_height <= 0 || cfg.frames <= 0) {
    throw std::invalid_argument("generate_scene: bad image size or length");
  }
  if (cfg.channels < 5) {
    throw std::invalid_argument("generate_scene: needs at least 5 channels");
  }
  if (cfg.grid_sizes.empty()) {
    throw std::invalid_argument("generate_scene: no grids");
  }
  for (const ActorSpec& a : cfg.actors) {
    if (a.start_frame < 0 || a.end_frame >= cfg.frames ||
        a.start_frame > a.end_frame) {
      throw std::invalid_argument("generate_scene: actor extent out of range");
    }
    for (int f = a.start_frame; f <= a.end_frame; ++f) {
      const Box b = detail::actor_box_at(a, f);
      if (b.x1 < 0 || b.y1 < 0 || b.x2 > cfg.image_width ||
          b.y2 > cfg.image_height || b.width() <= 0 || b.height() <= 0) {
        throw std::invalid_argument(
            "generate_scene: trajectory escapes image bounds");
      }
    }
  }

  Scene scene;
  const int d = cfg.channels;
  auto empty_volume = [&] {
    FeatureVolume v;
    v.channels = d;
    for (int g : cfg.grid_sizes) {
      v.grids.emplace_back(static_cast<std::size_t>(g) * g * d, 0.0);
    }
    return v;
  };
  for (int f = 0; f < cfg.frames; ++f) {
    scene.appearance.push_back(empty_volume());
    scene.motion.push_back(empty_volume());
    for (const ActorSpec& a : cfg.actors) {
      if (f < a.start_frame || f > a.end_frame) {
        continue;
      }
      const Box box = detail::actor_box_at(a, f);
      const std::vector<double> sig =
          detail::appearance_signature(a.label, d, cfg.mode);
      const double vnorm = std::hypot(a.vx, a.vy);
      const double vxn = a.vx / (1.0 + vnorm);
      const double vyn = a.vy / (1.0 + vnorm);
      for (std::size_t g = 0; g < cfg.grid_sizes.size(); ++g) {
        const int cells = cfg.grid_sizes[g];
        const double cw = cfg.image_width / cells;
        const double ch = cfg.image_height / cells;
        for (int row = 0; row < cells; ++row) {
          const double cy = (row + 0.5) * ch;
          if (cy < box.y1 || cy >= box.y2) {
            continue;
          }
          for (int col = 0; col < cells; ++col) {
            const double cx = (col + 0.5) * cw;
            if (cx < box.x1 || cx >= box.x2) {
              continue;
            }
            const std::size_t base =
                (static_cast<std::size_t>(row) * cells + col) * d;
            double* app = &scene.appearance[f].grids[g][base];
            double* mot = &scene.motion[f].grids[g][base];
            const double rel_x = (cx - box.cx()) / box.width();
            const double rel_y = (cy - box.cy()) / box.height();
            app[0] += 1.0;
            app[1] += rel_x;
            app[2] += rel_y;
            for (int c = 3; c < d; ++c) {
              app[c] += sig[c - 3];
            }
            mot[0] += 1.0;
            mot[1] += rel_x;
            mot[2] += rel_y;
            mot[3] += vxn;
            mot[4] += vyn;
            for (int c = 5; c < d; ++c) {
              mot[c] += vnorm / (1.0 + vnorm);
            }
          }
        }
      }
    }
  }
  if (cfg.noise > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> dist(0.0, cfg.noise);
    for (auto* stream : {&scene.appearance, &scene.motion}) {
      for (FeatureVolume& v : *stream) {
        for (std::vector<double>& grid : v.grids) {
          for (double& x : grid) {
            x += dist(rng);
          }
        }
      }
    }
  }
  for (const ActorSpec& a : cfg.actors) {
    ActionTube tube;
    tube.label = a.label;
    tube.score = 1.0;
    tube.start_frame = a.start_frame;
    for (int f = a.start_frame; f <= a.end_frame; ++f) {
      tube.boxes.push_back(detail::actor_box_at(a, f));
    }
    scene.gt.push_back(std::move(tube));
  }
  return scene;
}

/// Start frames of the K-frame windows eligible for training: every frame of
/// the window contains an action, and the window contains no actor's first
/// or last annotated frame.
inline std::vector<int> eligible_sequences(const std::vector<ActionTube>& gt,
                                           int video_frames, int k) {
  std::vector<int> starts;
  for (int f = 0; f + k <= video_frames; ++f) {
    const int last = f + k - 1;
    bool ok = true;
    for (const ActionTube& tube : gt) {
      if (tube.start_frame >= f && tube.start_frame <= last) {
        ok = false;
        break;
      }
      if (tube.end_frame() >= f && tube.end_frame() <= last) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      continue;
    }
    for (int frame = f; frame <= last && ok; ++frame) {
      bool covered = false;
      for (const ActionTube& tube : gt) {
        if (tube.covers(frame)) {
          covered = true;
          break;
        }
      }
      ok = covered;
    }
    if (ok) {
      starts.push_back(f);
    }
  }
  return starts;
}

/// Slices the ground-truth tubelets of one eligible window. Any tube
/// intersecting the window covers it fully (otherwise the window would have
/// contained its first or last frame).
inline void window_ground_truth(const std::vector<ActionTube>& gt, int start,
                                int k, std::vector<Tubelet>* tubelets,
                                std::vector<int>* labels) {
  for (const ActionTube& tube : gt) {
    if (!tube.covers(start) || !tube.covers(start + k - 1)) {
      continue;
    }
    Tubelet t;
    t.start_frame = start;
    for (int f = start; f < start + k; ++f) {
      t.boxes.push_back(tube.box_at(f));
    }
    tubelets->push_back(std::move(t));
    labels->push_back(tube.label);
  }
}

/// Builds the training set of one video from one feature stream.
inline std::vector<TrainingSequence> make_training_set(
    const std::vector<FeatureVolume>& features,
    const std::vector<ActionTube>& gt, int k) {
  std::vector<TrainingSequence> set;
  for (int start :
       eligible_sequences(gt, static_cast<int>(features.size()), k)) {
    TrainingSequence seq;
    seq.frames.assign(features.begin() + start, features.begin() + start + k);
    window_ground_truth(gt, start, k, &seq.gt, &seq.labels);
    set.push_back(std::move(seq));
  }
  return set;
}

/// Ground-truth tubelets of every eligible window, grouped by class, for the
/// anchor recall study.
inline std::vector<std::pair<int, std::vector<Tubelet>>> gt_tubelets_by_class(
    const std::vector<std::vector<ActionTube>>& gt_per_video,
    const std::vector<int>& frames_per_video, int k) {
  std::map<int, std::vector<Tubelet>> by_class;
  for (std::size_t v = 0; v < gt_per_video.size(); ++v) {
    for (int start :
         eligible_sequences(gt_per_video[v], frames_per_video[v], k)) {
      std::vector<Tubelet> tubelets;
      std::vector<int> labels;
      window_ground_truth(gt_per_video[v], start, k, &tubelets, &labels);
      for (std::size_t i = 0; i < tubelets.size(); ++i) {
        by_class[labels[i]].push_back(std::move(tubelets[i]));
      }
    }
  }
  return {by_class.begin(), by_class.end()};
}

}  // namespace tubekit
