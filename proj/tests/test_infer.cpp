#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "stground/infer.hpp"
#include "stground/synth.hpp"

using namespace stground;
using num::Matrix;
using num::Rng;
using num::Vector;

namespace {

net::ModelParams identity_params(std::size_t d) {
  net::ModelParams p;
  p.W_f = Matrix::identity(d);
  p.W_g = Matrix::identity(d);
  p.W_f_prime = Matrix::identity(d);
  p.W_g_prime = Matrix::identity(d);
  return p;
}

double alignment_score(const Matrix& sim, const std::vector<int>& assign) {
  double s = 0.0;
  for (std::size_t f = 0; f < sim.rows(); ++f) s += sim.at(f, assign[f]);
  return s;
}

}  // namespace

TEST_CASE("transcript alignment achieves the exhaustive-enumeration optimum") {
  Rng rng(71);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t slots = 1 + rng.below(4);
    const std::size_t frames = slots + rng.below(5);
    Matrix sim(frames, slots);
    for (auto& v : sim.data()) v = rng.uniform(-1.0, 1.0);
    const auto assign = infer::align_transcript(sim);
    REQUIRE(assign.size() == frames);
    // monotone, starts at slot 0, ends at the last slot, covers every slot
    CHECK(assign.front() == 0);
    CHECK(assign.back() == static_cast<int>(slots) - 1);
    for (std::size_t f = 1; f < frames; ++f) {
      CHECK(assign[f] - assign[f - 1] >= 0);
      CHECK(assign[f] - assign[f - 1] <= 1);
    }
    CHECK(alignment_score(sim, assign) ==
          doctest::Approx(oracle::best_alignment_score(sim)).epsilon(1e-9));
  }
}

TEST_CASE("alignment rejects infeasible and empty transcripts") {
  CHECK_THROWS_AS(infer::align_transcript(Matrix(2, 3, 0.0)), InfeasibleAlignmentError);
  CHECK_THROWS_AS(infer::align_transcript(Matrix(3, 0)), BadParamsError);
  // exactly one frame per slot is forced
  Matrix sim(3, 3, 0.0);
  CHECK(infer::align_transcript(sim) == std::vector<int>{0, 1, 2});
}

TEST_CASE("label runs are segmented with background dropped") {
  const std::vector<int> labels = {-1, 2, 2, 2, -1, -1, 0, 0, 1};
  const auto segs = infer::segments_from_labels(labels);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].class_id == 2);
  CHECK(segs[0].start == 1);
  CHECK(segs[0].end == 4);
  CHECK(segs[1].class_id == 0);
  CHECK(segs[1].start == 6);
  CHECK(segs[1].end == 8);
  CHECK(segs[2].class_id == 1);
  CHECK(segs[2].start == 8);
  CHECK(segs[2].end == 9);
  CHECK(infer::segments_from_labels({}).empty());
  CHECK(infer::segments_from_labels({-1, -1}).empty());
}

TEST_CASE("bilinear upsampling matches a direct evaluation at every pixel") {
  Rng rng(72);
  const int side = 3, w = 17, h = 11;
  std::vector<double> cells(side * side);
  for (auto& v : cells) v = rng.uniform();
  const Matrix up = infer::upsample_bilinear(cells, side, w, h);
  REQUIRE(up.rows() == h);
  REQUIRE(up.cols() == w);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const double gy =
          std::clamp((py + 0.5) * side / static_cast<double>(h) - 0.5, 0.0, side - 1.0);
      const double gx =
          std::clamp((px + 0.5) * side / static_cast<double>(w) - 0.5, 0.0, side - 1.0);
      const int r0 = static_cast<int>(gy), c0 = static_cast<int>(gx);
      const int r1 = std::min(r0 + 1, side - 1), c1 = std::min(c0 + 1, side - 1);
      const double fy = gy - r0, fx = gx - c0;
      const double ref = (1 - fy) * ((1 - fx) * cells[r0 * side + c0] + fx * cells[r0 * side + c1]) +
                         fy * ((1 - fx) * cells[r1 * side + c0] + fx * cells[r1 * side + c1]);
      CHECK(up.at(py, px) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("a constant cell map upsamples to a constant image") {
  const Matrix up = infer::upsample_bilinear(std::vector<double>(16, 0.4), 4, 8, 6);
  for (double v : up.data()) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("temporal classification thresholds at theta with lower-class ties") {
  const std::size_t d = 4;
  data::LabelBank bank;
  for (int c = 0; c < 2; ++c) {
    data::LabelClass lc;
    lc.class_id = c;
    lc.name = "a" + std::to_string(c);
    Vector proto(d, 0.0);
    proto[c] = 1.0;
    lc.words = {proto};
    lc.sentence = proto;
    bank.classes.push_back(lc);
  }
  data::ClipFeatures video;
  video.video_id = video.clip_id = "v";
  video.d = d;
  video.frames = 3;
  video.grid_cells = 1;
  Vector class0(d, 0.0), faint(d, 0.0), both(d, 0.0);
  class0[0] = 1.0;
  faint[0] = 0.3;
  faint[2] = 1.0;  // best similarity ~0.29, below theta
  both[0] = 1.0;
  both[1] = 1.0;  // exact tie between the two classes
  video.frame_global = {class0, num::l2_normalize(faint), num::l2_normalize(both)};
  for (std::size_t u = 0; u < 3; ++u) video.grid.push_back(video.frame_global[u]);
  video.words.push_back({"w", class0});
  video.sentence = class0;
  video.validate();

  const auto labels =
      infer::temporal_classify(video, bank, identity_params(d), infer::InferConfig{});
  REQUIRE(labels.size() == 3);
  CHECK(labels[0].label == 0);
  CHECK(labels[0].best_similarity == doctest::Approx(1.0));
  CHECK(labels[1].label == data::kBackground);
  CHECK(labels[2].label == 0);  // tie resolved toward the lower class id
}

TEST_CASE("background transcript slots score the configured constant") {
  const std::size_t d = 3;
  data::LabelBank bank;
  data::LabelClass lc;
  lc.class_id = 0;
  lc.name = "a0";
  Vector proto(d, 0.0);
  proto[0] = 1.0;
  lc.words = {proto};
  lc.sentence = proto;
  bank.classes.push_back(lc);
  data::ClipFeatures video;
  video.video_id = video.clip_id = "v";
  video.d = d;
  video.frames = 2;
  video.grid_cells = 1;
  video.frame_global = {proto, proto};
  video.grid = {proto, proto};
  video.words.push_back({"w", proto});
  video.sentence = proto;
  infer::InferConfig cfg;
  cfg.background_score = 0.25;
  const Matrix sim = infer::transcript_similarity(video, bank, {data::kBackground, 0},
                                                  identity_params(d), cfg);
  REQUIRE(sim.rows() == 2);
  REQUIRE(sim.cols() == 2);
  CHECK(sim.at(0, 0) == doctest::Approx(0.25));
  CHECK(sim.at(1, 0) == doctest::Approx(0.25));
  CHECK(sim.at(0, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(infer::transcript_similarity(video, bank, {}, identity_params(d), cfg),
                  BadParamsError);
}

TEST_CASE("grounding on clean synthetic videos finds the planted regions") {
  data::SynthConfig scfg;
  scfg.classes = 2;
  scfg.train_clips = 0;
  scfg.videos = 6;
  scfg.frames_per_video = 32;
  scfg.noise_sigma = 0.05;
  scfg.seed = 9;
  const auto ds = data::synth_generate(scfg);
  const auto params = identity_params(scfg.dim);
  const infer::InferConfig cfg;
  const net::AttentionConfig acfg;

  long hits = 0, total = 0;
  long labeled_action = 0, gt_action = 0;
  for (std::size_t v = 0; v < ds.videos.size(); ++v) {
    const auto& gt = ds.gts[v];
    const auto pred =
        infer::st_ground(ds.videos[v], ds.bank, params, acfg, cfg, gt.width, gt.height);
    CHECK(pred.video_id == gt.video_id);
    REQUIRE(pred.frames.size() == static_cast<std::size_t>(gt.frame_count));
    for (const auto& seg : gt.segments) {
      for (int f = seg.start_frame; f < seg.end_frame; ++f) {
        ++gt_action;
        const auto& fp = pred.frames[f];
        if (fp.label == seg.class_id) {
          ++labeled_action;
          ++total;
          if (seg.boxes[f - seg.start_frame].contains(fp.argmax_x, fp.argmax_y)) ++hits;
        }
      }
    }
  }
  // identity projections keep the raw planted signal intact
  CHECK(labeled_action > gt_action * 9 / 10);
  CHECK(total > 0);
  CHECK(static_cast<double>(hits) / total >= 0.9);
}

TEST_CASE("inference config validation bounds the thresholds") {
  infer::InferConfig cfg;
  cfg.theta_temporal = 1.5;
  CHECK_THROWS_AS(cfg.validate(), BadParamsError);
  cfg = infer::InferConfig{};
  cfg.tau_spatial = -0.1;
  CHECK_THROWS_AS(cfg.validate(), BadParamsError);
}
