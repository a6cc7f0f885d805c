#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stground/gradcheck.hpp"
#include "stground/model.hpp"
#include "stground/synth.hpp"

using namespace stground;
using num::Matrix;
using num::Rng;
using num::Vector;

namespace {

Vector unit_axis(std::size_t d, std::size_t i) {
  Vector v(d, 0.0);
  v[i] = 1.0;
  return v;
}

std::vector<std::pair<Vector, Vector>> random_unit_pairs(std::size_t b, std::size_t d, Rng& rng) {
  std::vector<std::pair<Vector, Vector>> pairs;
  for (std::size_t i = 0; i < b; ++i) {
    Vector x(d), y(d);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = rng.normal();
      y[j] = rng.normal();
    }
    pairs.emplace_back(num::l2_normalize(x), num::l2_normalize(y));
  }
  return pairs;
}

data::SynthDataset tiny_dataset(std::uint64_t seed, int clips, int dim) {
  data::SynthConfig cfg;
  cfg.classes = 2;
  cfg.train_clips = clips;
  cfg.videos = 0;
  cfg.candidate_frames = 4;
  cfg.planted_frames = 2;
  cfg.grid_cells = 4;
  cfg.planted_cells = 1;
  cfg.dim = dim;
  cfg.words_per_clip = 3;
  cfg.seed = seed;
  return data::synth_generate(cfg);
}

net::AttentionConfig stack_config(const char* letters) {
  net::AttentionConfig cfg;
  cfg.stack.clear();
  for (const char* p = letters; *p; ++p) {
    cfg.stack.push_back(*p == 'c' ? net::AttentionLayerKind::Cross : net::AttentionLayerKind::Self);
  }
  return cfg;
}

}  // namespace

TEST_CASE("a single pair has nothing to contrast against") {
  Rng rng(31);
  const auto pairs = random_unit_pairs(1, 8, rng);
  CHECK(std::abs(net::nce_loss(pairs, 0.1)) < 1e-12);
  CHECK(std::abs(net::nce_loss(pairs, 0.0)) < 1e-12);
}

TEST_CASE("two orthogonal perfectly-matched pairs hit the closed form") {
  std::vector<std::pair<Vector, Vector>> pairs = {{unit_axis(4, 0), unit_axis(4, 0)},
                                                  {unit_axis(4, 1), unit_axis(4, 1)}};
  const double expect = 2.0 * std::log(1.0 + std::exp(-1.0));
  CHECK(net::nce_loss(pairs, 0.0) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("the loss does not depend on batch order") {
  Rng rng(32);
  auto pairs = random_unit_pairs(5, 8, rng);
  const double before = net::nce_loss(pairs, 0.1);
  std::rotate(pairs.begin(), pairs.begin() + 2, pairs.end());
  std::swap(pairs[0], pairs[3]);
  CHECK(net::nce_loss(pairs, 0.1) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("the loss is strictly increasing in the margin") {
  Rng rng(33);
  for (const std::size_t b : {2u, 4u}) {
    const auto pairs = random_unit_pairs(b, 8, rng);
    double prev = net::nce_loss(pairs, 0.0);
    for (const double margin : {0.1, 0.2, 0.4, 0.8}) {
      const double cur = net::nce_loss(pairs, margin);
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("an empty batch is rejected") {
  CHECK_THROWS_AS(net::nce_loss({}, 0.1), BadParamsError);
}

TEST_CASE("projected tokens come back unit-normalized with the right shapes") {
  const auto ds = tiny_dataset(41, 2, 16);
  Rng rng(1);
  const auto params = net::ModelParams::random_init(16, 8, rng);
  const std::vector<int> selected = {0, 2};
  const auto pt = net::project_tokens(ds.clips[0], selected, params);
  CHECK(pt.video_tokens.rows() == 2 * ds.clips[0].grid_cells);
  CHECK(pt.word_tokens.rows() == ds.clips[0].word_count());
  CHECK(pt.frame_globals.rows() == 2);
  CHECK(pt.sentence.rows() == 1);
  for (const Matrix* m : {&pt.video_tokens, &pt.word_tokens, &pt.frame_globals, &pt.sentence}) {
    CHECK(m->cols() == 8);
    for (std::size_t r = 0; r < m->rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < m->cols(); ++c) s += m->at(r, c) * m->at(r, c);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(net::project_tokens(ds.clips[0], {}, params), DimMismatchError);
}

TEST_CASE("attention rows are probability distributions") {
  Rng rng(42);
  Matrix q(3, 8), kv(5, 8);
  for (auto& v : q.data()) v = rng.normal();
  for (auto& v : kv.data()) v = rng.normal();
  const auto cross = net::cross_attention(q, kv);
  CHECK(cross.attn.rows() == 3);
  CHECK(cross.attn.cols() == 5);
  CHECK(cross.contextual.rows() == 3);
  const auto self = net::self_attention(kv);
  CHECK(self.attn.rows() == 5);
  CHECK(self.attn.cols() == 5);
  for (const Matrix* m : {&cross.attn, &self.attn}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < m->cols(); ++c) {
        s += m->at(r, c);
        CHECK(m->at(r, c) >= 0.0);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("identical keys spread cross-attention uniformly") {
  Matrix q(2, 4), kv(3, 4);
  for (auto& v : q.data()) v = 0.5;
  for (auto& v : kv.data()) v = 0.25;
  const auto out = net::cross_attention(q, kv);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(out.attn.at(r, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("combined loss gradients survive a finite-difference audit") {
  const auto ds = tiny_dataset(43, 4, 8);
  int config = 0;
  for (const char* stack : {"csc", "sc"}) {
    net::TrainConfig tcfg;
    tcfg.batch_size = 2;
    tcfg.margin = 0.1;
    const net::AttentionConfig acfg = stack_config(stack);
    Rng rng(50 + config++);
    const auto params = net::ModelParams::random_init(8, 8, rng);
    std::vector<net::BatchItem> batch;
    for (int i = 0; i < 2; ++i) batch.push_back({&ds.clips[i], {0, 1}});

    const num::GradBundle gb = net::total_loss_and_grads(batch, params, tcfg, acfg);
    num::ParamMap pmap = {{"W_f", params.W_f},
                          {"W_g", params.W_g},
                          {"W_f_prime", params.W_f_prime},
                          {"W_g_prime", params.W_g_prime}};
    const num::LossFn loss_fn = [&](const num::ParamMap& p) {
      net::ModelParams mp;
      mp.W_f = p.at("W_f");
      mp.W_g = p.at("W_g");
      mp.W_f_prime = p.at("W_f_prime");
      mp.W_g_prime = p.at("W_g_prime");
      return net::total_loss_and_grads(batch, mp, tcfg, acfg).value;
    };
    CHECK(num::finite_diff_check(loss_fn, pmap, gb.grads, 1e-5) < 1e-4);
  }
}

TEST_CASE("the loss breakdown sums global and local parts") {
  const auto ds = tiny_dataset(44, 4, 8);
  net::TrainConfig tcfg;
  tcfg.batch_size = 2;
  Rng rng(7);
  const auto params = net::ModelParams::random_init(8, 8, rng);
  std::vector<net::BatchItem> batch;
  for (int i = 0; i < 2; ++i) batch.push_back({&ds.clips[i], {1, 3}});
  net::LossBreakdown bd;
  net::total_loss_and_grads(batch, params, tcfg, net::AttentionConfig{}, &bd);
  CHECK(bd.total == doctest::Approx(bd.global_part + bd.local_part).epsilon(1e-12));
}

TEST_CASE("training lowers the loss and is bit-reproducible") {
  const auto ds = tiny_dataset(45, 16, 16);
  net::TrainConfig tcfg;
  tcfg.batch_size = 4;
  tcfg.epochs = 3;
  tcfg.learning_rate = 0.2;
  tcfg.optimizer = net::Optimizer::Sgd;
  tcfg.margin = 0.0;
  tcfg.seed = 5;
  Rng rng(tcfg.seed);
  auto init = net::ModelParams::random_init(16, 8, rng);
  const auto run = [&](net::ModelParams p) {
    return net::train(ds.clips, std::move(p), tcfg, net::AttentionConfig{},
                      ot::SelectionStrategy::None, 2, ot::SinkhornConfig{});
  };
  const auto a = run(init);
  REQUIRE(a.log.size() == 4);
  CHECK(a.log.front().epoch == 0);
  CHECK(a.log.back().epoch == 3);
  CHECK(a.log.back().loss_total < a.log.front().loss_total);
  const auto b = run(init);
  const auto same = [](const Matrix& x, const Matrix& y) {
    if (!x.same_shape(y)) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x.data()[i] != y.data()[i]) return false;
    }
    return true;
  };
  CHECK(same(a.params.W_f, b.params.W_f));
  CHECK(same(a.params.W_g, b.params.W_g));
  CHECK(same(a.params.W_f_prime, b.params.W_f_prime));
  CHECK(same(a.params.W_g_prime, b.params.W_g_prime));
}

TEST_CASE("adaptive-moments training also lowers the loss") {
  const auto ds = tiny_dataset(46, 16, 16);
  net::TrainConfig tcfg;
  tcfg.batch_size = 4;
  tcfg.epochs = 3;
  tcfg.learning_rate = 0.05;
  tcfg.optimizer = net::Optimizer::AdaptiveMoments;
  tcfg.seed = 6;
  Rng rng(tcfg.seed);
  auto init = net::ModelParams::random_init(16, 8, rng);
  const auto res = net::train(ds.clips, std::move(init), tcfg, net::AttentionConfig{},
                              ot::SelectionStrategy::None, 2, ot::SinkhornConfig{});
  CHECK(res.log.back().loss_total < res.log.front().loss_total);
}

TEST_CASE("rollout heatmaps are min-max normalized over the clip") {
  const auto ds = tiny_dataset(47, 1, 16);
  Rng rng(9);
  const auto params = net::ModelParams::random_init(16, 8, rng);
  const auto fwd = net::local_forward(ds.clips[0], {0, 1}, params, net::AttentionConfig{});
  const auto hm = net::rollout_heatmap(fwd.trace, {0, 1}, 0.5, 2);
  REQUIRE(hm.rows() == 2);
  REQUIRE(hm.cols() == ds.clips[0].grid_cells);
  double lo = 2.0, hi = -1.0;
  for (double v : hm.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("a flat attention map normalizes to zeros") {
  data::ClipFeatures cf;
  cf.video_id = "v";
  cf.clip_id = "c";
  cf.d = 4;
  cf.frames = 1;
  cf.grid_cells = 4;
  const Vector tok = num::l2_normalize(Vector{1.0, 1.0, 1.0, 1.0});
  for (int i = 0; i < 4; ++i) cf.grid.push_back(tok);
  cf.frame_global.push_back(tok);
  cf.words.push_back({"w0", tok});
  cf.words.push_back({"w1", tok});
  cf.sentence = tok;
  cf.validate();
  net::ModelParams params;
  params.W_f = Matrix::identity(4);
  params.W_g = Matrix::identity(4);
  params.W_f_prime = Matrix::identity(4);
  params.W_g_prime = Matrix::identity(4);
  const auto fwd = net::local_forward(cf, {0}, params, net::AttentionConfig{});
  const auto hm = net::rollout_heatmap(fwd.trace, {0, 1}, 0.5, 1);
  for (double v : hm.data()) CHECK(v == 0.0);
}

TEST_CASE("attention stacks must end with a cross layer") {
  net::AttentionConfig cfg = stack_config("cs");
  CHECK_THROWS_AS(cfg.validate(), BadParamsError);
  cfg = stack_config("s");
  CHECK_THROWS_AS(cfg.validate(), BadParamsError);
  cfg = stack_config("cc");
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("train config validation rejects nonsense") {
  net::TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), BadParamsError);
  cfg = net::TrainConfig{};
  cfg.epochs = -1;
  CHECK_THROWS_AS(cfg.validate(), BadParamsError);
  cfg = net::TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), BadParamsError);
}
