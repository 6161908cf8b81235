#include <cmath>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "tubekit/anchors.hpp"

using namespace tubekit;

namespace {

AnchorConfig simple_config() {
  AnchorConfig cfg;
  cfg.image_width = 100;
  cfg.image_height = 100;
  cfg.grid_sizes = {2};
  cfg.scales = {0.5};
  cfg.aspect_ratios = {1.0};
  cfg.k = 4;
  return cfg;
}

}  // namespace

TEST_CASE("generate_anchors on a 2x2 grid") {
  const auto anchors = generate_anchors(simple_config());
  REQUIRE(anchors.size() == 4);
  const std::vector<std::pair<double, double>> centers = {
      {25, 25}, {75, 25}, {25, 75}, {75, 75}};
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    CHECK(anchors[i].box.cx() == Catch::Approx(centers[i].first));
    CHECK(anchors[i].box.cy() == Catch::Approx(centers[i].second));
    CHECK(anchors[i].box.width() == Catch::Approx(50.0));
    CHECK(anchors[i].box.height() == Catch::Approx(50.0));
  }
}

TEST_CASE("aspect ratios preserve area, widths scale by sqrt ratio") {
  AnchorConfig cfg;
  cfg.image_width = 1000;  // large image so no clipping distorts areas
  cfg.image_height = 1000;
  cfg.grid_sizes = {1};
  cfg.scales = {0.2};
  cfg.aspect_ratios = {1.0, 2.0, 0.5};
  cfg.k = 1;
  const auto anchors = generate_anchors(cfg);
  REQUIRE(anchors.size() == 3);
  const double area = anchors[0].box.area();
  for (const auto& a : anchors) {
    CHECK(a.box.area() == Catch::Approx(area).epsilon(1e-9));
  }
  CHECK(anchors[1].box.width() ==
        Catch::Approx(anchors[0].box.width() * std::sqrt(2.0)));
  CHECK(anchors[2].box.width() ==
        Catch::Approx(anchors[0].box.width() / std::sqrt(2.0)));
}

TEST_CASE("anchor counts and ordering") {
  AnchorConfig cfg;
  cfg.image_width = 100;
  cfg.image_height = 100;
  cfg.grid_sizes = {4, 2};
  cfg.scales = {0.3, 0.6};
  cfg.aspect_ratios = {1.0, 2.0, 0.5};
  cfg.k = 2;
  const auto anchors = generate_anchors(cfg);
  CHECK(anchors.size() == std::size_t(4 * 4 * 3 + 2 * 2 * 3));
  CHECK(anchors.size() == std::size_t(cfg.total_anchors()));

  cfg.extra_square_anchor = true;
  const auto with_extra = generate_anchors(cfg);
  CHECK(with_extra.size() == std::size_t(4 * 4 * 4 + 2 * 2 * 4));

  // Grid-major, then row, col, ratio.
  CHECK(anchors.front().source_grid == 0);
  CHECK(anchors.back().source_grid == 1);
  CHECK(anchors[0].row == 0);
  CHECK(anchors[0].col == 0);
  CHECK(anchors[3].col == 1);

  // Bit-identical regeneration.
  const auto again = generate_anchors(cfg);
  REQUIRE(again.size() == with_extra.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].box == with_extra[i].box);
  }
}

TEST_CASE("anchors are clipped to image bounds") {
  AnchorConfig cfg;
  cfg.image_width = 100;
  cfg.image_height = 100;
  cfg.grid_sizes = {4};
  cfg.scales = {0.9};
  cfg.aspect_ratios = {1.0, 3.0};
  cfg.k = 1;
  for (const auto& a : generate_anchors(cfg)) {
    CHECK(a.box.x1 >= 0.0);
    CHECK(a.box.y1 >= 0.0);
    CHECK(a.box.x2 <= 100.0);
    CHECK(a.box.y2 <= 100.0);
  }
}

TEST_CASE("config validation") {
  AnchorConfig cfg = simple_config();
  cfg.grid_sizes = {2, 4};  // not decreasing
  cfg.scales = {0.5, 0.5};
  CHECK_THROWS_AS(generate_anchors(cfg), std::invalid_argument);

  cfg = simple_config();
  cfg.scales = {1.5};
  CHECK_THROWS_AS(generate_anchors(cfg), std::invalid_argument);

  cfg = simple_config();
  cfg.k = 0;
  CHECK_THROWS_AS(generate_anchors(cfg), std::invalid_argument);
}

TEST_CASE("anchor_recall counts recalled tubelets per class") {
  const AnchorConfig cfg = simple_config();
  const auto anchors = generate_anchors(cfg);

  // One ground truth exactly equal to an anchor cuboid, one far off the grid.
  Tubelet exact{0, std::vector<Box>(4, anchors[0].box)};
  Tubelet tiny{0, std::vector<Box>(4, Box{0, 0, 3, 3})};
  std::vector<std::pair<int, std::vector<Tubelet>>> gt = {
      {1, {exact}},
      {2, {exact, tiny}},
  };
  const RecallTable table = anchor_recall(anchors, gt, {0.0, 0.5, 1.0});
  REQUIRE(table.classes == std::vector<int>{1, 2});
  // Exact match recalled at every threshold <= 1.
  CHECK(table.values[0] == std::vector<double>{1.0, 1.0, 1.0});
  // Threshold 0 recalls everything when anchors exist.
  CHECK(table.values[1][0] == 1.0);
  CHECK(table.values[1][1] == 0.5);
  CHECK(table.mean[1] == Catch::Approx(0.75));
}

TEST_CASE("recall non-increasing in threshold, empty classes excluded") {
  const AnchorConfig cfg = simple_config();
  const auto anchors = generate_anchors(cfg);
  Tubelet moving{0, {Box{20, 20, 60, 60}, Box{25, 20, 65, 60},
                     Box{30, 20, 70, 60}, Box{35, 20, 75, 60}}};
  std::vector<std::pair<int, std::vector<Tubelet>>> gt = {
      {1, {moving}},
      {2, {}},
  };
  std::vector<double> thresholds;
  for (int i = 0; i <= 10; ++i) {
    thresholds.push_back(i / 10.0);
  }
  const RecallTable table = anchor_recall(anchors, gt, thresholds);
  REQUIRE(table.classes == std::vector<int>{1});  // class 2 has no tubelets
  for (std::size_t t = 1; t < thresholds.size(); ++t) {
    CHECK(table.mean[t] <= table.mean[t - 1]);
  }
}
