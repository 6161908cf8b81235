#pragma once

// Random loss instances for gradient checking, shared by the unit tests and
// the acceptance suite. Instances are kept away from the non-smooth points of
// the loss (smooth-L1 kinks, hard-negative selection boundaries) so central
// differences are meaningful.

#include <cmath>
#include <random>
#include <vector>

#include "tubekit/anchors.hpp"
#include "tubekit/head.hpp"
#include "tubekit/matchloss.hpp"

namespace testing_instances {

struct LossInstance {
  std::vector<tubekit::AnchorCuboid> anchors;
  tubekit::StackedFeatures stacked;
  tubekit::HeadParams params;
  tubekit::Assignment assignment;
  std::vector<tubekit::RegressionTarget> targets;
  tubekit::Predictions predictions;  // from predict(params, stacked, anchors)
  double hnm_ratio = 3.0;
};

inline bool hnm_cut_is_stable(const tubekit::Predictions& pred,
                              const tubekit::Assignment& asg,
                              double hnm_ratio) {
  if (asg.n_pos() == 0 || asg.negatives.empty()) {
    return true;
  }
  const int nc = pred.num_classes + 1;
  std::vector<double> ce;
  for (int i : asg.negatives) {
    const auto prob = tubekit::softmax(pred.logits_of(i), nc);
    ce.push_back(-std::log(std::max(prob[0], 1e-300)));
  }
  std::sort(ce.begin(), ce.end(), std::greater<>());
  const std::size_t keep = std::min(
      ce.size(),
      static_cast<std::size_t>(std::ceil(hnm_ratio * asg.n_pos())));
  if (keep == ce.size()) {
    return true;
  }
  return ce[keep - 1] - ce[keep] > 1e-3;
}

inline bool smooth_l1_args_are_safe(const tubekit::Predictions& pred,
                                    const tubekit::Assignment& asg,
                                    const std::vector<tubekit::RegressionTarget>& targets) {
  for (std::size_t p = 0; p < asg.positives.size(); ++p) {
    const double* r = pred.regression_of(asg.positives[p].anchor);
    for (std::size_t d = 0; d < targets[p].values.size(); ++d) {
      if (std::abs(std::abs(r[d] - targets[p].values[d]) - 1.0) < 1e-3) {
        return false;
      }
    }
  }
  return true;
}

/// Builds one random instance: a small anchor grid, random head parameters
/// and features, and a hand-built assignment with random targets. Retries
/// internally until the instance is differentiable at its base point.
inline LossInstance make_instance(std::mt19937_64& rng, int k, int c) {
  std::uniform_int_distribution<int> grid_pick(2, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    LossInstance inst;
    const int grid = grid_pick(rng);
    tubekit::AnchorConfig acfg;
    acfg.image_width = 100;
    acfg.image_height = 100;
    acfg.grid_sizes = {grid};
    acfg.scales = {0.4};
    acfg.aspect_ratios = {1.0};
    acfg.k = k;
    inst.anchors = tubekit::generate_anchors(acfg);
    if (inst.anchors.size() > 20) {
      inst.anchors.resize(20);
    }

    const int d = 3;
    std::vector<tubekit::FeatureVolume> frames(k);
    for (auto& f : frames) {
      f.channels = d;
      f.grids.emplace_back(static_cast<std::size_t>(grid) * grid * d);
      for (double& x : f.grids[0]) {
        x = gauss(rng);
      }
    }
    inst.stacked = tubekit::stack_features(frames);
    inst.params = tubekit::HeadParams::random_init(k, c, d, {grid},
                                                   rng(), 0.3);
    for (auto& gp : inst.params.grids) {
      for (double& w : gp.w_reg) {
        w = 0.2 * gauss(rng);
      }
    }
    inst.predictions = tubekit::predict(inst.params, inst.stacked, inst.anchors);

    // Hand-built assignment: a few positives, the rest negatives.
    const int n = static_cast<int>(inst.anchors.size());
    const int n_pos = 1 + static_cast<int>(unit(rng) * std::min(4, n - 1));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < n; ++i) {
      if (i < n_pos) {
        inst.assignment.positives.push_back(
            {order[i], i, 1 + static_cast<int>(unit(rng) * c)});
      } else {
        inst.assignment.negatives.push_back(order[i]);
      }
    }
    std::sort(inst.assignment.negatives.begin(),
              inst.assignment.negatives.end());
    for (int p = 0; p < n_pos; ++p) {
      tubekit::RegressionTarget t;
      const double* r =
          inst.predictions.regression_of(inst.assignment.positives[p].anchor);
      for (int dct = 0; dct < 4 * k; ++dct) {
        double target = r[dct] - 2.5 * (unit(rng) - 0.5);
        if (std::abs(std::abs(r[dct] - target) - 1.0) < 5e-3) {
          target += 0.02;
        }
        t.values.push_back(target);
      }
      inst.targets.push_back(std::move(t));
    }

    if (hnm_cut_is_stable(inst.predictions, inst.assignment, inst.hnm_ratio) &&
        smooth_l1_args_are_safe(inst.predictions, inst.assignment,
                                inst.targets)) {
      return inst;
    }
  }
}

}  // namespace testing_instances
