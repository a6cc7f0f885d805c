#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stground/matrix.hpp"
#include "stground/metrics.hpp"

using namespace stground;
using num::Rng;

namespace {

std::vector<std::uint8_t> random_mask(int side, Rng& rng) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(side) * side, 0);
  for (auto& v : m) v = rng.below(2) ? 1 : 0;
  return m;
}

data::PixelBox random_box(double w, double h, Rng& rng) {
  const double x0 = rng.uniform(0.0, w * 0.8);
  const double y0 = rng.uniform(0.0, h * 0.8);
  return {x0, y0, x0 + rng.uniform(w * 0.1, w - x0), y0 + rng.uniform(h * 0.1, h - y0)};
}

}  // namespace

TEST_CASE("pointing game treats the box boundary as a hit") {
  std::vector<metrics::PointSample> samples = {
      {5.0, 5.0, {0, 0, 10, 10}},    // interior
      {10.0, 10.0, {0, 0, 10, 10}},  // corner, closed box
      {0.0, 7.0, {0, 0, 10, 10}},    // edge
      {10.5, 5.0, {0, 0, 10, 10}},   // just outside
  };
  long hits = 0, misses = 0;
  const double acc = metrics::pointing_game(samples, &hits, &misses);
  CHECK(hits == 3);
  CHECK(misses == 1);
  CHECK(acc == doctest::Approx(0.75));
  CHECK_THROWS_AS(metrics::pointing_game({}), NoSamplesError);
}

TEST_CASE("rasterize_box matches per-cell center containment") {
  Rng rng(61);
  for (int trial = 0; trial < 25; ++trial) {
    const int side = 2 + static_cast<int>(rng.below(5));
    const double w = 100.0, h = 80.0;
    const data::PixelBox box = random_box(w, h, rng);
    const auto mask = metrics::rasterize_box(box, side, w, h);
    const auto ref = oracle::raster(box, side, w, h);
    CHECK(mask == ref);
  }
}

TEST_CASE("mask_iou agrees with direct counting and rejects shape mismatch") {
  Rng rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_mask(4, rng);
    const auto b = random_mask(4, rng);
    CHECK(metrics::mask_iou(a, b) == doctest::Approx(oracle::iou(a, b)).epsilon(1e-12));
  }
  CHECK(metrics::mask_iou(std::vector<std::uint8_t>(4, 0), std::vector<std::uint8_t>(4, 0)) == 0.0);
  CHECK_THROWS_AS(metrics::mask_iou(std::vector<std::uint8_t>(4, 0),
                                    std::vector<std::uint8_t>(9, 0)),
                  DimMismatchError);
}

TEST_CASE("frame-level mAP matches the brute-force reference on random instances") {
  Rng rng(63);
  for (int trial = 0; trial < 60; ++trial) {
    const int side = 3;
    const double w = 96.0, h = 96.0;
    const int n_classes = 1 + static_cast<int>(rng.below(3));
    std::vector<metrics::SpatialGt> gts;
    const int n_gts = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n_gts; ++i) {
      metrics::SpatialGt g;
      g.video_id = "v" + std::to_string(rng.below(2));
      g.frame = static_cast<int>(rng.below(3));
      g.class_id = static_cast<int>(rng.below(n_classes));
      g.box = random_box(w, h, rng);
      g.frame_width = w;
      g.frame_height = h;
      gts.push_back(g);
    }
    std::vector<metrics::SpatialDet> dets;
    const int n_dets = static_cast<int>(rng.below(9));
    for (int i = 0; i < n_dets; ++i) {
      metrics::SpatialDet d;
      d.video_id = "v" + std::to_string(rng.below(2));
      d.frame = static_cast<int>(rng.below(3));
      d.class_id = static_cast<int>(rng.below(n_classes));
      d.confidence = rng.uniform();  // distinct with probability 1
      d.mask = random_mask(side, rng);
      d.grid_side = side;
      dets.push_back(d);
    }
    const double thr = rng.uniform(0.05, 0.6);
    const double got = metrics::spatial_map(dets, gts, thr);
    const double ref = oracle::naive_spatial_map(dets, gts, thr);
    CHECK(got == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("tube IoU matches the frame-map reference, including gaps") {
  Rng rng(64);
  for (int trial = 0; trial < 40; ++trial) {
    metrics::TubeDet d;
    d.start_frame = static_cast<int>(rng.below(6));
    const int dl = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < dl; ++i) d.masks.push_back(random_mask(3, rng));
    metrics::TubeGt g;
    g.start_frame = static_cast<int>(rng.below(12));  // sometimes fully disjoint
    const int gl = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < gl; ++i) g.masks.push_back(random_mask(3, rng));
    const double got = metrics::tube_iou(d, g);
    const double ref = oracle::naive_tube_iou(d.start_frame, d.masks, g.start_frame, g.masks);
    CHECK(got == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("disjoint spans with a gap score the union of both tubes") {
  metrics::TubeDet d;
  d.start_frame = 0;
  d.masks = {{1, 1, 0, 0}};
  metrics::TubeGt g;
  g.start_frame = 10;
  g.masks = {{1, 0, 0, 0}};
  CHECK(metrics::tube_iou(d, g) == 0.0);
  // overlapping in time, matching one of two cells
  g.start_frame = 0;
  CHECK(metrics::tube_iou(d, g) == doctest::Approx(0.5));
}

TEST_CASE("video mAP matches the brute-force reference on random instances") {
  Rng rng(65);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_classes = 1 + static_cast<int>(rng.below(2));
    std::vector<metrics::TubeGt> gts;
    const int n_gts = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n_gts; ++i) {
      metrics::TubeGt g;
      g.video_id = "v" + std::to_string(rng.below(2));
      g.class_id = static_cast<int>(rng.below(n_classes));
      g.start_frame = static_cast<int>(rng.below(4));
      const int len = 1 + static_cast<int>(rng.below(3));
      for (int f = 0; f < len; ++f) g.masks.push_back(random_mask(3, rng));
      gts.push_back(g);
    }
    std::vector<metrics::TubeDet> dets;
    const int n_dets = static_cast<int>(rng.below(7));
    for (int i = 0; i < n_dets; ++i) {
      metrics::TubeDet d;
      d.video_id = "v" + std::to_string(rng.below(2));
      d.class_id = static_cast<int>(rng.below(n_classes));
      d.confidence = rng.uniform();
      d.start_frame = static_cast<int>(rng.below(4));
      const int len = 1 + static_cast<int>(rng.below(3));
      for (int f = 0; f < len; ++f) d.masks.push_back(random_mask(3, rng));
      dets.push_back(d);
    }
    const std::vector<double> thrs = {0.1, 0.3, 0.5};
    const auto got = metrics::video_map(dets, gts, thrs);
    REQUIRE(got.size() == 3);
    for (std::size_t t = 0; t < thrs.size(); ++t) {
      CHECK(got[t] == doctest::Approx(oracle::naive_video_map(dets, gts, thrs[t])).epsilon(1e-9));
    }
  }
}

TEST_CASE("IoD dominates Jaccard on random interval pairs") {
  Rng rng(66);
  for (int trial = 0; trial < 10000; ++trial) {
    metrics::Interval p, g;
    p.class_id = g.class_id = 0;
    p.start = static_cast<int>(rng.below(50));
    p.end = p.start + 1 + static_cast<int>(rng.below(30));
    g.start = static_cast<int>(rng.below(50));
    g.end = g.start + 1 + static_cast<int>(rng.below(30));
    const auto ts = metrics::iod_jaccard({p}, {g});
    REQUIRE(ts.iod.size() == 1);
    CHECK(ts.iod[0] >= ts.jaccard[0]);
    CHECK(ts.iod[0] <= 1.0);
    CHECK(ts.jaccard[0] >= 0.0);
    // direct formulas
    const int inter = std::max(0, std::min(p.end, g.end) - std::max(p.start, g.start));
    if (inter > 0) {
      const int uni = (p.end - p.start) + (g.end - g.start) - inter;
      CHECK(ts.iod[0] == doctest::Approx(static_cast<double>(inter) / (p.end - p.start)));
      CHECK(ts.jaccard[0] == doctest::Approx(static_cast<double>(inter) / uni));
    } else {
      CHECK(ts.iod[0] == 0.0);
      CHECK(ts.jaccard[0] == 0.0);
    }
  }
}

TEST_CASE("each ground-truth instance claims its best same-class overlap") {
  const std::vector<metrics::Interval> preds = {{0, 0, 4}, {0, 6, 14}, {1, 0, 10}};
  const std::vector<metrics::Interval> gts = {{0, 5, 10}, {1, 20, 30}};
  const auto ts = metrics::iod_jaccard(preds, gts);
  REQUIRE(ts.iod.size() == 2);
  // GT 0 overlaps pred {0,6,14} by 4 frames; pred length 8, union 9
  CHECK(ts.iod[0] == doctest::Approx(4.0 / 8.0));
  CHECK(ts.jaccard[0] == doctest::Approx(4.0 / 9.0));
  // GT 1 has no overlapping same-class prediction
  CHECK(ts.iod[1] == 0.0);
  CHECK(ts.jaccard[1] == 0.0);
  CHECK(ts.mean_jaccard == doctest::Approx((4.0 / 9.0) / 2.0));
}

TEST_CASE("IoU pointing game uses the per-class union denominator") {
  std::vector<metrics::CombinedFrame> frames(4);
  // frame 0: correct label, point inside
  frames[0] = {0, 5, 5, 0, {0, 0, 10, 10}};
  // frame 1: correct label, point outside
  frames[1] = {0, 50, 50, 0, {0, 0, 10, 10}};
  // frame 2: predicted 0, GT background
  frames[2] = {0, 1, 1, data::kBackground, {}};
  // frame 3: background both ways
  frames[3] = {data::kBackground, 0, 0, data::kBackground, {}};
  std::map<int, double> per_class;
  const double v = metrics::iou_pointing_game(frames, &per_class);
  // class 0: tp = 1, union = frames {0,1,2} = 3
  CHECK(v == doctest::Approx(1.0 / 3.0));
  CHECK(per_class.at(0) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(metrics::iou_pointing_game({}), NoSamplesError);
}
