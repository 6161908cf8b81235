#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "instances.hpp"
#include "oracles.hpp"
#include "tubekit/head.hpp"

using namespace tubekit;

namespace {

FeatureVolume random_volume(std::mt19937_64& rng, const std::vector<int>& grids,
                            int channels) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  FeatureVolume v;
  v.channels = channels;
  for (int g : grids) {
    v.grids.emplace_back(static_cast<std::size_t>(g) * g * channels);
    for (double& x : v.grids.back()) {
      x = gauss(rng);
    }
  }
  return v;
}

AnchorConfig one_grid_config(int grid, int k) {
  AnchorConfig cfg;
  cfg.image_width = 100;
  cfg.image_height = 100;
  cfg.grid_sizes = {grid};
  cfg.scales = {0.4};
  cfg.aspect_ratios = {1.0};
  cfg.k = k;
  return cfg;
}

}  // namespace

TEST_CASE("stack_features") {
  std::mt19937_64 rng(3);
  SECTION("K=1 is the identity") {
    const FeatureVolume v = random_volume(rng, {3}, 4);
    const StackedFeatures s = stack_features({v});
    CHECK(s.stacked_channels() == 4);
    CHECK(s.grids[0] == v.grids[0]);
  }
  SECTION("K=6 with D=8 gives 48 channels") {
    std::vector<FeatureVolume> frames;
    for (int f = 0; f < 6; ++f) {
      frames.push_back(random_volume(rng, {2}, 8));
    }
    const StackedFeatures s = stack_features(frames);
    CHECK(s.stacked_channels() == 48);
    CHECK(s.grids[0].size() == std::size_t(2 * 2 * 48));
  }
  SECTION("permuting frames permutes channel blocks") {
    std::vector<FeatureVolume> frames;
    for (int f = 0; f < 3; ++f) {
      frames.push_back(random_volume(rng, {2}, 5));
    }
    const StackedFeatures fwd = stack_features(frames);
    std::swap(frames[0], frames[2]);
    const StackedFeatures swapped = stack_features(frames);
    const int d = 5;
    for (int cell = 0; cell < 4; ++cell) {
      for (int c = 0; c < d; ++c) {
        CHECK(fwd.cell(0, cell)[0 * d + c] == swapped.cell(0, cell)[2 * d + c]);
        CHECK(fwd.cell(0, cell)[1 * d + c] == swapped.cell(0, cell)[1 * d + c]);
        CHECK(fwd.cell(0, cell)[2 * d + c] == swapped.cell(0, cell)[0 * d + c]);
      }
    }
  }
  SECTION("shape mismatch throws") {
    std::vector<FeatureVolume> frames = {random_volume(rng, {2}, 4),
                                         random_volume(rng, {2}, 5)};
    CHECK_THROWS_AS(stack_features(frames), std::invalid_argument);
  }
}

TEST_CASE("predict") {
  std::mt19937_64 rng(9);
  const int k = 6, c = 2, d = 4, grid = 3;
  const auto anchors = generate_anchors(one_grid_config(grid, k));

  std::vector<FeatureVolume> frames;
  for (int f = 0; f < k; ++f) {
    frames.push_back(random_volume(rng, {grid}, d));
  }
  const StackedFeatures stacked = stack_features(frames);

  SECTION("zero parameters give zero logits and uniform softmax") {
    const HeadParams params = HeadParams::zeros(k, c, d, {grid});
    const Predictions pred = predict(params, stacked, anchors);
    for (double logit : pred.logits) {
      CHECK(logit == 0.0);
    }
    const auto prob = softmax(pred.logits_of(0), c + 1);
    for (double p : prob) {
      CHECK(p == Catch::Approx(1.0 / 3.0));
    }
  }
  SECTION("4K regression outputs per anchor") {
    const HeadParams params = HeadParams::random_init(k, c, d, {grid}, 1);
    const Predictions pred = predict(params, stacked, anchors);
    CHECK(pred.regressions.size() == anchors.size() * std::size_t(4 * k));
    CHECK(pred.logits.size() == anchors.size() * std::size_t(c + 1));
  }
  SECTION("outputs depend only on the anchor's own cell") {
    const HeadParams params = HeadParams::random_init(k, c, d, {grid}, 2);
    const Predictions before = predict(params, stacked, anchors);
    // Perturb every cell except anchor 0's (row 0, col 0).
    std::vector<FeatureVolume> other = frames;
    for (int f = 0; f < k; ++f) {
      for (int cell = 1; cell < grid * grid; ++cell) {
        for (int ch = 0; ch < d; ++ch) {
          other[f].grids[0][cell * d + ch] += 10.0;
        }
      }
    }
    const Predictions after = predict(params, stack_features(other), anchors);
    for (int i = 0; i < c + 1; ++i) {
      CHECK(before.logits_of(0)[i] == after.logits_of(0)[i]);
    }
    for (int i = 0; i < 4 * k; ++i) {
      CHECK(before.regression_of(0)[i] == after.regression_of(0)[i]);
    }
    // Some other anchor's outputs did change.
    CHECK(before.logits_of(5)[0] != after.logits_of(5)[0]);
  }
}

TEST_CASE("detect") {
  std::mt19937_64 rng(13);
  const int k = 2, c = 2, d = 4, grid = 2;
  const auto anchors = generate_anchors(one_grid_config(grid, k));
  std::vector<FeatureVolume> frames;
  for (int f = 0; f < k; ++f) {
    frames.push_back(random_volume(rng, {grid}, d));
  }
  const StackedFeatures stacked = stack_features(frames);

  SECTION("strong background logits yield nothing") {
    HeadParams params = HeadParams::zeros(k, c, d, {grid});
    params.grids[0].b_score[0] = 100.0;
    const Detections dets = detect(params, stacked, anchors, 0);
    for (const auto& cls : dets.per_class) {
      CHECK(cls.empty());
    }
  }
  SECTION("zero floor keeps one entry per anchor and foreground class") {
    const HeadParams params = HeadParams::random_init(k, c, d, {grid}, 3);
    const Detections dets = detect(params, stacked, anchors, 0, 0.0);
    CHECK(dets.per_class[0].empty());  // background never emitted
    CHECK(dets.per_class[1].size() == anchors.size());
    CHECK(dets.per_class[2].size() == anchors.size());
  }
  SECTION("zero regression decodes onto the anchor cuboid") {
    const HeadParams params = HeadParams::zeros(k, c, d, {grid});
    const Detections dets = detect(params, stacked, anchors, 7, 0.0);
    for (const ScoredTubelet& t : dets.per_class[1]) {
      CHECK(t.tubelet.start_frame == 7);
      for (const Box& b : t.tubelet.boxes) {
        CHECK(b == anchors[t.anchor].box);
      }
    }
  }
  SECTION("softmax scores sum to one") {
    const HeadParams params = HeadParams::random_init(k, c, d, {grid}, 4, 2.0);
    const AnchorDetections raw = detect_anchors(params, stacked, anchors, 0);
    for (const auto& s : raw.scores) {
      double sum = 0.0;
      for (double v : s) {
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("fusion") {
  const int k = 2, c = 2, d = 4, grid = 2;
  const auto anchors = generate_anchors(one_grid_config(grid, k));
  auto make_stream = [&](std::uint64_t seed) {
    std::mt19937_64 r(seed);
    std::vector<FeatureVolume> frames;
    for (int f = 0; f < k; ++f) {
      frames.push_back(random_volume(r, {grid}, d));
    }
    const HeadParams params = HeadParams::random_init(k, c, d, {grid}, seed, 1.0);
    return detect_anchors(params, stack_features(frames), anchors, 0);
  };
  const AnchorDetections rgb = make_stream(1);
  const AnchorDetections flow = make_stream(2);

  SECTION("late fusion averages scores and keeps appearance geometry") {
    const AnchorDetections fused = fuse_late(rgb, flow);
    for (std::size_t i = 0; i < fused.scores.size(); ++i) {
      double sum = 0.0;
      for (std::size_t cc = 0; cc < fused.scores[i].size(); ++cc) {
        CHECK(fused.scores[i][cc] ==
              Catch::Approx(0.5 * (rgb.scores[i][cc] + flow.scores[i][cc])));
        sum += fused.scores[i][cc];
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
      for (std::size_t f = 0; f < fused.tubelets[i].boxes.size(); ++f) {
        CHECK(fused.tubelets[i].boxes[f] == rgb.tubelets[i].boxes[f]);
      }
    }
  }
  SECTION("late fusion of identical streams changes nothing") {
    const AnchorDetections fused = fuse_late(rgb, rgb);
    for (std::size_t i = 0; i < fused.scores.size(); ++i) {
      CHECK(fused.scores[i] == rgb.scores[i]);
    }
  }
  SECTION("union fusion is additive") {
    const Detections a = filter_detections(rgb, 0.0);
    const Detections b = filter_detections(flow, 0.0);
    const Detections u = fuse_union(a, b);
    for (std::size_t cc = 1; cc <= std::size_t(c); ++cc) {
      CHECK(u.per_class[cc].size() ==
            a.per_class[cc].size() + b.per_class[cc].size());
    }
  }
  SECTION("anchor-set mismatch is rejected") {
    AnchorDetections truncated = flow;
    truncated.scores.pop_back();
    truncated.tubelets.pop_back();
    CHECK_THROWS_AS(fuse_late(rgb, truncated), std::invalid_argument);
  }
}

namespace {

/// A linearly separable toy problem: the gt sits exactly on an anchor, and a
/// feature channel flags the class.
std::vector<TrainingSequence> separable_dataset(
    const std::vector<AnchorCuboid>& anchors, int k, int grid, int d, int n,
    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.05);
  std::vector<TrainingSequence> out;
  for (int i = 0; i < n; ++i) {
    const int label = 1 + (i % 2);
    const int target_anchor = i % static_cast<int>(anchors.size());
    TrainingSequence seq;
    for (int f = 0; f < k; ++f) {
      FeatureVolume v;
      v.channels = d;
      v.grids.emplace_back(static_cast<std::size_t>(grid) * grid * d);
      for (double& x : v.grids[0]) {
        x = gauss(rng);
      }
      const AnchorCuboid& a = anchors[target_anchor];
      const int cell = a.row * grid + a.col;
      v.grids[0][cell * d + 0] += 1.0;      // presence
      v.grids[0][cell * d + label] += 1.0;  // class flag
      seq.frames.push_back(std::move(v));
    }
    seq.gt.push_back(anchors[target_anchor].as_tubelet(0, k));
    seq.labels.push_back(label);
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace

TEST_CASE("train") {
  const int k = 2, c = 2, d = 4, grid = 2;
  const auto anchors = generate_anchors(one_grid_config(grid, k));
  const auto dataset = separable_dataset(anchors, k, grid, d, 16, 99);
  const HeadParams init = HeadParams::random_init(k, c, d, {grid}, 7);

  SECTION("zero learning rate leaves parameters unchanged") {
    TrainConfig cfg;
    cfg.steps = 5;
    cfg.learning_rate = 0.0;
    const TrainResult r = train(dataset, anchors, init, cfg);
    CHECK(r.params.grids[0].w_score == init.grids[0].w_score);
    CHECK(r.params.grids[0].w_reg == init.grids[0].w_reg);
  }
  SECTION("loss decreases monotonically with a small step on a fixed batch") {
    TrainConfig cfg;
    cfg.steps = 30;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.01;
    cfg.log_every = 1;
    cfg.seed = 5;
    // A single-sequence dataset makes every batch identical.
    const std::vector<TrainingSequence> fixed(dataset.begin(),
                                              dataset.begin() + 1);
    const TrainResult r = train(fixed, anchors, init, cfg);
    for (std::size_t i = 1; i < r.loss_curve.size(); ++i) {
      CHECK(r.loss_curve[i].second <= r.loss_curve[i - 1].second + 1e-9);
    }
  }
  SECTION("drives the loss down on a separable set") {
    TrainConfig cfg;
    cfg.steps = 400;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.5;
    cfg.seed = 11;
    const TrainResult r = train(dataset, anchors, init, cfg);
    CHECK(r.loss_curve.back().second < 0.05);
  }
  SECTION("bit-reproducible for a fixed seed") {
    TrainConfig cfg;
    cfg.steps = 20;
    cfg.seed = 42;
    const TrainResult a = train(dataset, anchors, init, cfg);
    const TrainResult b = train(dataset, anchors, init, cfg);
    CHECK(a.params.grids[0].w_score == b.params.grids[0].w_score);
    CHECK(a.params.grids[0].w_reg == b.params.grids[0].w_reg);
    CHECK(a.params.grids[0].b_score == b.params.grids[0].b_score);
  }
  SECTION("divergence raises an error") {
    TrainConfig cfg;
    cfg.steps = 200;
    cfg.learning_rate = 1e9;
    CHECK_THROWS_AS(train(dataset, anchors, init, cfg), std::runtime_error);
  }
}

TEST_CASE("head parameter gradients match finite differences") {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 3; ++trial) {
    const int k = trial == 0 ? 1 : (trial == 1 ? 2 : 6);
    auto inst = testing_instances::make_instance(rng, k, 2);
    HeadParams params = inst.params;

    auto loss_value = [&] {
      const Predictions pred = predict(params, inst.stacked, inst.anchors);
      return total_loss(pred, inst.assignment, inst.targets, inst.hnm_ratio)
          .value;
    };

    const Predictions pred = predict(params, inst.stacked, inst.anchors);
    const TotalLoss loss =
        total_loss(pred, inst.assignment, inst.targets, inst.hnm_ratio);
    HeadParams analytic = HeadParams::zeros(params.k, params.num_classes,
                                            params.channels, params.grid_sizes);
    detail::accumulate_param_grads(params, inst.stacked, inst.anchors, loss,
                                   analytic);

    std::uniform_int_distribution<std::size_t> pick_w(
        0, params.grids[0].w_score.size() - 1);
    for (int probe = 0; probe < 10; ++probe) {
      const std::size_t i = pick_w(rng);
      const double fd =
          oracle::central_difference(loss_value, &params.grids[0].w_score[i]);
      CHECK(oracle::relative_error(analytic.grids[0].w_score[i], fd) < 1e-4);
    }
    std::uniform_int_distribution<std::size_t> pick_r(
        0, params.grids[0].w_reg.size() - 1);
    for (int probe = 0; probe < 10; ++probe) {
      const std::size_t i = pick_r(rng);
      const double fd =
          oracle::central_difference(loss_value, &params.grids[0].w_reg[i]);
      CHECK(oracle::relative_error(analytic.grids[0].w_reg[i], fd) < 1e-4);
    }
  }
}
