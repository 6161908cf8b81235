#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubekit/anchors.hpp"
#include "tubekit/geometry.hpp"
#include "tubekit/matchloss.hpp"

namespace tubekit {

constexpr double kScoreFloor = 0.01;

/// Per-frame feature maps, one flat (row, col, channel) array per anchor grid.
struct FeatureVolume {
  int channels = 0;
  std::vector<std::vector<double>> grids;  // grids[g] has G_g * G_g * channels
};

/// Channel-wise concatenation of K frames' features, frame order preserved.
struct StackedFeatures {
  int k = 0;
  int channels = 0;  // per frame
  std::vector<std::vector<double>> grids;  // grids[g] has G*G * (k*channels)

  int stacked_channels() const { return k * channels; }
  const double* cell(int grid, int cell_index) const {
    return &grids[grid][static_cast<std::size_t>(cell_index) * k * channels];
  }
};

inline StackedFeatures stack_features(
    const std::vector<FeatureVolume>& frames) {
  if (frames.empty()) {
    throw std::invalid_argument("stack_features: no frames");
  }
  const int k = static_cast<int>(frames.size());
  const int d = frames[0].channels;
  StackedFeatures out;
  out.k = k;
  out.channels = d;
  out.grids.resize(frames[0].grids.size());
  for (std::size_t g = 0; g < out.grids.size(); ++g) {
    const std::size_t cells = frames[0].grids[g].size() / d;
    for (const FeatureVolume& f : frames) {
      if (f.channels != d || f.grids.size() != out.grids.size() ||
          f.grids[g].size() != frames[0].grids[g].size()) {
        throw std::invalid_argument("stack_features: frame shape mismatch");
      }
    }
    std::vector<double>& dst = out.grids[g];
    dst.resize(cells * k * d);
    for (std::size_t c = 0; c < cells; ++c) {
      for (int f = 0; f < k; ++f) {
        const double* src = &frames[f].grids[g][c * d];
        std::copy(src, src + d, &dst[c * static_cast<std::size_t>(k) * d +
                                      static_cast<std::size_t>(f) * d]);
      }
    }
  }
  return out;
}

/// The detection head: one linear scoring map and one linear regression map
/// per grid, applied to the stacked feature vector at each anchor's cell.
struct HeadParams {
  int k = 1;
  int num_classes = 0;  // foreground classes C
  int channels = 0;     // per-frame feature channels D
  std::vector<int> grid_sizes;

  struct GridParams {
    std::vector<double> w_score;  // (k*channels) x (C+1), row-major
    std::vector<double> b_score;  // C+1
    std::vector<double> w_reg;    // (k*channels) x 4k, row-major
    std::vector<double> b_reg;    // 4k
  };
  std::vector<GridParams> grids;

  int input_dim() const { return k * channels; }
  int score_dim() const { return num_classes + 1; }
  int reg_dim() const { return 4 * k; }

  static HeadParams zeros(int k, int num_classes, int channels,
                          const std::vector<int>& grid_sizes) {
    HeadParams p;
    p.k = k;
    p.num_classes = num_classes;
    p.channels = channels;
    p.grid_sizes = grid_sizes;
    p.grids.resize(grid_sizes.size());
    for (auto& g : p.grids) {
      g.w_score.assign(static_cast<std::size_t>(p.input_dim()) * p.score_dim(),
                       0.0);
      g.b_score.assign(static_cast<std::size_t>(p.score_dim()), 0.0);
      g.w_reg.assign(static_cast<std::size_t>(p.input_dim()) * p.reg_dim(),
                     0.0);
      g.b_reg.assign(static_cast<std::size_t>(p.reg_dim()), 0.0);
    }
    return p;
  }

  /// Small random init for the score weights; regression starts at zero so an
  /// untrained head decodes anchors onto themselves.
  static HeadParams random_init(int k, int num_classes, int channels,
                                const std::vector<int>& grid_sizes,
                                std::uint64_t seed, double stddev = 0.01) {
    HeadParams p = zeros(k, num_classes, channels, grid_sizes);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& g : p.grids) {
      for (double& w : g.w_score) {
        w = dist(rng);
      }
    }
    return p;
  }
};

/// Logits and regressions for every anchor, from the anchor's own cell only.
inline Predictions predict(const HeadParams& params,
                           const StackedFeatures& stacked,
                           const std::vector<AnchorCuboid>& anchors) {
  if (stacked.k != params.k || stacked.channels != params.channels) {
    throw std::invalid_argument("predict: feature shape mismatch");
  }
  Predictions pred;
  pred.num_classes = params.num_classes;
  pred.k = params.k;
  pred.logits.assign(anchors.size() * params.score_dim(), 0.0);
  pred.regressions.assign(anchors.size() * params.reg_dim(), 0.0);
  const int in = params.input_dim();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const AnchorCuboid& a = anchors[i];
    const int g = a.source_grid;
    const int cell = a.row * params.grid_sizes[g] + a.col;
    const double* f = stacked.cell(g, cell);
    const HeadParams::GridParams& gp = params.grids[g];
    double* logits = &pred.logits[i * params.score_dim()];
    for (int c = 0; c < params.score_dim(); ++c) {
      double v = gp.b_score[c];
      for (int j = 0; j < in; ++j) {
        v += gp.w_score[static_cast<std::size_t>(j) * params.score_dim() + c] *
             f[j];
      }
      logits[c] = v;
    }
    double* regs = &pred.regressions[i * params.reg_dim()];
    for (int d = 0; d < params.reg_dim(); ++d) {
      double v = gp.b_reg[d];
      for (int j = 0; j < in; ++j) {
        v += gp.w_reg[static_cast<std::size_t>(j) * params.reg_dim() + d] *
             f[j];
      }
      regs[d] = v;
    }
  }
  return pred;
}

/// A decoded tubelet with the full post-softmax score vector of its anchor.
struct ScoredTubelet {
  Tubelet tubelet;
  std::vector<double> scores;  // C+1, sums to 1
  int anchor = 0;
};

/// Per-anchor softmax scores and decoded tubelets, before score flooring.
/// This is the representation streams are fused on.
struct AnchorDetections {
  int num_classes = 0;
  int start_frame = 0;
  std::vector<std::vector<double>> scores;  // n_anchors x (C+1)
  std::vector<Tubelet> tubelets;            // n_anchors
};

inline AnchorDetections detect_anchors(const HeadParams& params,
                                       const StackedFeatures& stacked,
                                       const std::vector<AnchorCuboid>& anchors,
                                       int start_frame) {
  const Predictions pred = predict(params, stacked, anchors);
  AnchorDetections out;
  out.num_classes = params.num_classes;
  out.start_frame = start_frame;
  out.scores.reserve(anchors.size());
  out.tubelets.reserve(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    out.scores.push_back(
        softmax(pred.logits_of(static_cast<int>(i)), params.score_dim()));
    RegressionTarget t;
    const double* r = pred.regression_of(static_cast<int>(i));
    t.values.assign(r, r + params.reg_dim());
    out.tubelets.push_back(decode(anchors[i], t, start_frame));
  }
  return out;
}

/// Detections grouped by class id (index 0, the background, stays empty).
struct Detections {
  std::vector<std::vector<ScoredTubelet>> per_class;
};

/// Keeps, for each foreground class, the tubelets whose class score is above
/// the floor. Background is never emitted.
inline Detections filter_detections(const AnchorDetections& raw,
                                    double score_floor = kScoreFloor) {
  Detections out;
  out.per_class.resize(static_cast<std::size_t>(raw.num_classes) + 1);
  for (std::size_t i = 0; i < raw.tubelets.size(); ++i) {
    for (int c = 1; c <= raw.num_classes; ++c) {
      if (raw.scores[i][c] > score_floor) {
        out.per_class[c].push_back(
            ScoredTubelet{raw.tubelets[i], raw.scores[i], static_cast<int>(i)});
      }
    }
  }
  return out;
}

inline Detections detect(const HeadParams& params,
                         const StackedFeatures& stacked,
                         const std::vector<AnchorCuboid>& anchors,
                         int start_frame, double score_floor = kScoreFloor) {
  return filter_detections(
      detect_anchors(params, stacked, anchors, start_frame), score_floor);
}

/// Late fusion: per-anchor mean of the two streams' score vectors, geometry
/// from the appearance stream. Runs before score flooring.
inline AnchorDetections fuse_late(const AnchorDetections& rgb,
                                  const AnchorDetections& flow) {
  if (rgb.scores.size() != flow.scores.size() ||
      rgb.num_classes != flow.num_classes ||
      rgb.start_frame != flow.start_frame) {
    throw std::invalid_argument("fuse_late: anchor sets differ");
  }
  AnchorDetections out = rgb;
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    for (std::size_t c = 0; c < out.scores[i].size(); ++c) {
      out.scores[i][c] = 0.5 * (rgb.scores[i][c] + flow.scores[i][c]);
    }
  }
  return out;
}

/// Union fusion: concatenation of the two streams' detection sets, scores
/// untouched.
inline Detections fuse_union(const Detections& rgb, const Detections& flow) {
  Detections out = rgb;
  if (out.per_class.size() < flow.per_class.size()) {
    out.per_class.resize(flow.per_class.size());
  }
  for (std::size_t c = 0; c < flow.per_class.size(); ++c) {
    out.per_class[c].insert(out.per_class[c].end(), flow.per_class[c].begin(),
                            flow.per_class[c].end());
  }
  return out;
}

/// One training sequence: K frames of features plus the ground-truth tubelets
/// covering the window.
struct TrainingSequence {
  std::vector<FeatureVolume> frames;
  std::vector<Tubelet> gt;
  std::vector<int> labels;
};

struct TrainConfig {
  int steps = 1000;
  int batch_size = 8;
  double learning_rate = 0.1;
  double momentum = 0.0;
  double hnm_ratio = kHardNegativeRatio;
  std::uint64_t seed = 1;
  int log_every = 50;
};

struct TrainResult {
  HeadParams params;
  std::vector<std::pair<int, double>> loss_curve;  // (step, batch loss)
};

namespace detail {

struct PreparedSequence {
  StackedFeatures stacked;
  Assignment assignment;
  std::vector<RegressionTarget> targets;
};

/// Backpropagates per-output gradients through the linear head into
/// per-grid weight gradients. Anchors sharing a cell share the map.
inline void accumulate_param_grads(const HeadParams& params,
                                   const StackedFeatures& stacked,
                                   const std::vector<AnchorCuboid>& anchors,
                                   const TotalLoss& loss, HeadParams& grad) {
  const int in = params.input_dim();
  const int sd = params.score_dim();
  const int rd = params.reg_dim();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const AnchorCuboid& a = anchors[i];
    const int g = a.source_grid;
    const int cell = a.row * params.grid_sizes[g] + a.col;
    const double* f = stacked.cell(g, cell);
    HeadParams::GridParams& gg = grad.grids[g];
    const double* dl = &loss.dlogits[i * sd];
    for (int c = 0; c < sd; ++c) {
      if (dl[c] == 0.0) {
        continue;
      }
      gg.b_score[c] += dl[c];
      for (int j = 0; j < in; ++j) {
        gg.w_score[static_cast<std::size_t>(j) * sd + c] += f[j] * dl[c];
      }
    }
    const double* dr = &loss.dregressions[i * rd];
    for (int d = 0; d < rd; ++d) {
      if (dr[d] == 0.0) {
        continue;
      }
      gg.b_reg[d] += dr[d];
      for (int j = 0; j < in; ++j) {
        gg.w_reg[static_cast<std::size_t>(j) * rd + d] += f[j] * dr[d];
      }
    }
  }
}

}  // namespace detail

/// Mini-batch gradient descent on the matching loss through the linear head.
/// Deterministic for a fixed seed. Throws on divergence (non-finite loss).
inline TrainResult train(const std::vector<TrainingSequence>& dataset,
                         const std::vector<AnchorCuboid>& anchors,
                         const HeadParams& init, const TrainConfig& cfg) {
  if (dataset.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  // Assignments and targets depend only on anchors and ground truth.
  std::vector<detail::PreparedSequence> prepared;
  prepared.reserve(dataset.size());
  for (const TrainingSequence& seq : dataset) {
    detail::PreparedSequence p;
    p.stacked = stack_features(seq.frames);
    p.assignment = assign(anchors, seq.gt, seq.labels);
    p.targets.reserve(p.assignment.positives.size());
    for (const Assignment::Positive& pos : p.assignment.positives) {
      p.targets.push_back(encode(anchors[pos.anchor], seq.gt[pos.gt]));
    }
    prepared.push_back(std::move(p));
  }

  TrainResult result;
  result.params = init;
  HeadParams velocity = HeadParams::zeros(init.k, init.num_classes,
                                          init.channels, init.grid_sizes);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, prepared.size() - 1);

  for (int step = 0; step < cfg.steps; ++step) {
    HeadParams grad = HeadParams::zeros(init.k, init.num_classes,
                                        init.channels, init.grid_sizes);
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const detail::PreparedSequence& p = prepared[pick(rng)];
      const Predictions pred = predict(result.params, p.stacked, anchors);
      const TotalLoss loss =
          total_loss(pred, p.assignment, p.targets, cfg.hnm_ratio);
      batch_loss += loss.value;
      detail::accumulate_param_grads(result.params, p.stacked, anchors, loss,
                                     grad);
    }
    batch_loss /= cfg.batch_size;
    if (!std::isfinite(batch_loss)) {
      throw std::runtime_error("train: loss diverged at step " +
                               std::to_string(step));
    }
    const double scale = 1.0 / cfg.batch_size;
    for (std::size_t g = 0; g < result.params.grids.size(); ++g) {
      HeadParams::GridParams& pg = result.params.grids[g];
      HeadParams::GridParams& vg = velocity.grids[g];
      const HeadParams::GridParams& gg = grad.grids[g];
      auto update = [&](std::vector<double>& param, std::vector<double>& vel,
                        const std::vector<double>& dg) {
        for (std::size_t i = 0; i < param.size(); ++i) {
          vel[i] = cfg.momentum * vel[i] - cfg.learning_rate * scale * dg[i];
          param[i] += vel[i];
        }
      };
      update(pg.w_score, vg.w_score, gg.w_score);
      update(pg.b_score, vg.b_score, gg.b_score);
      update(pg.w_reg, vg.w_reg, gg.w_reg);
      update(pg.b_reg, vg.b_reg, gg.b_reg);
    }
    if (step % cfg.log_every == 0 || step == cfg.steps - 1) {
      result.loss_curve.emplace_back(step, batch_loss);
    }
  }
  return result;
}

}  // namespace tubekit
