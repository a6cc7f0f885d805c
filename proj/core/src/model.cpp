#include "stground/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stground::net {

using num::Matrix;
using num::Rng;
using num::Tape;
using num::Var;
using num::Vector;

ModelParams ModelParams::random_init(std::size_t d, std::size_t d_prime, Rng& rng) {
  auto draw = [&]() {
    Matrix m(d, d_prime);
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto& v : m.data()) v = s * rng.normal();
    return m;
  };
  ModelParams p{draw(), draw(), draw(), draw()};
  return p;
}

void ModelParams::validate() const {
  if (!W_f.same_shape(W_g) || !W_f.same_shape(W_f_prime) || !W_f.same_shape(W_g_prime)) {
    throw DimMismatchError("projection matrices must share shape");
  }
  W_f.check_finite("W_f");
  W_g.check_finite("W_g");
  W_f_prime.check_finite("W_f_prime");
  W_g_prime.check_finite("W_g_prime");
}

void AttentionConfig::validate() const {
  if (stack.empty() || stack.back() != AttentionLayerKind::Cross) {
    throw BadParamsError("attention stack must end with a Cross layer");
  }
  if (residual_weight < 0.0 || residual_weight > 1.0) {
    throw BadParamsError("residual_weight must be in [0,1]");
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw BadParamsError("batch_size >= 1");
  if (margin < 0.0) throw BadParamsError("margin >= 0");
  if (learning_rate <= 0.0) throw BadParamsError("learning_rate > 0");
  if (epochs < 0) throw BadParamsError("epochs >= 0");
}

namespace {

Matrix gather_tokens(const data::ClipFeatures& clip, const std::vector<int>& selected,
                     bool grid_tokens) {
  const std::size_t per_frame = grid_tokens ? clip.grid_cells : 1;
  Matrix out(selected.size() * per_frame, clip.d);
  std::size_t r = 0;
  for (int u : selected) {
    if (u < 0 || static_cast<std::size_t>(u) >= clip.frames) {
      throw DimMismatchError("selected frame out of range");
    }
    for (std::size_t n = 0; n < per_frame; ++n, ++r) {
      const Vector& v = grid_tokens ? clip.cell(u, n) : clip.frame_global[u];
      for (std::size_t c = 0; c < clip.d; ++c) out.at(r, c) = v[c];
    }
  }
  return out;
}

Matrix word_matrix(const data::ClipFeatures& clip) {
  Matrix out(clip.word_count(), clip.d);
  for (std::size_t k = 0; k < clip.word_count(); ++k) {
    for (std::size_t c = 0; c < clip.d; ++c) out.at(k, c) = clip.words[k].vec[c];
  }
  return out;
}

Matrix row_matrix(const Vector& v) {
  Matrix out(1, v.dim());
  for (std::size_t c = 0; c < v.dim(); ++c) out.at(0, c) = v[c];
  return out;
}

struct LocalVars {
  Var video_mean;  // 1 x d'
  Var word_mean;   // 1 x d'
};

// Shared forward builder for training (on params) and inference (constants).
LocalVars build_local(Tape& tape, const data::ClipFeatures& clip, const std::vector<int>& selected,
                      const Var& w_f_prime, const Var& w_g_prime, const AttentionConfig& cfg,
                      AttentionTrace* trace) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(w_f_prime.value().cols()));
  Var video = num::row_l2_normalize(
      num::matmul(tape.constant(gather_tokens(clip, selected, true)), w_f_prime));
  Var words = num::row_l2_normalize(num::matmul(tape.constant(word_matrix(clip)), w_g_prime));
  for (AttentionLayerKind kind : cfg.stack) {
    if (kind == AttentionLayerKind::Cross) {
      Var vn = num::row_l2_normalize(video);
      Var sn = num::row_l2_normalize(words);
      Var a_v = num::row_softmax(num::matmul(vn, num::transpose(sn)));
      Var a_s = num::row_softmax(num::matmul(sn, num::transpose(vn)));
      Var video_next = num::matmul(a_v, words);
      Var words_next = num::matmul(a_s, video);
      if (trace) trace->layers.push_back({kind, a_v.value(), a_s.value()});
      video = video_next;
      words = words_next;
    } else {
      Var a_v = num::row_softmax(num::scale(num::matmul(video, num::transpose(video)), inv_sqrt_d));
      Var a_s = num::row_softmax(num::scale(num::matmul(words, num::transpose(words)), inv_sqrt_d));
      if (trace) trace->layers.push_back({kind, a_v.value(), a_s.value()});
      video = num::matmul(a_v, video);
      words = num::matmul(a_s, words);
    }
  }
  return {num::mean_rows(video), num::mean_rows(words)};
}

struct GlobalVars {
  Var clip_global;  // 1 x d', unit
  Var sentence;     // 1 x d', unit
};

GlobalVars build_global(Tape& tape, const data::ClipFeatures& clip,
                        const std::vector<int>& selected, const Var& w_f, const Var& w_g) {
  Var fg = num::row_l2_normalize(
      num::matmul(tape.constant(gather_tokens(clip, selected, false)), w_f));
  Var clip_global = num::row_l2_normalize(num::mean_rows(fg));
  Var sent = num::row_l2_normalize(num::matmul(tape.constant(row_matrix(clip.sentence)), w_g));
  return {clip_global, sent};
}

double nce_value(const Matrix& gram, double margin) {
  const std::size_t b = gram.rows();
  double loss = 0.0;
  std::vector<double> z(b);
  auto lse_at = [&](std::size_t i) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    return z[i] - mx - std::log(s);
  };
  for (std::size_t l = 0; l < b; ++l) {
    for (std::size_t k = 0; k < b; ++k) z[k] = (k == l) ? gram.at(l, l) - margin : gram.at(k, l);
    loss -= lse_at(l);
    for (std::size_t k = 0; k < b; ++k) z[k] = (k == l) ? gram.at(l, l) - margin : gram.at(l, k);
    loss -= lse_at(l);
  }
  return loss / static_cast<double>(b);
}

}  // namespace

ProjectedTokens project_tokens(const data::ClipFeatures& clip, const std::vector<int>& selected,
                               const ModelParams& params) {
  if (selected.empty() || selected.size() > clip.frames) {
    throw DimMismatchError("selected frame count must be in [1, U]");
  }
  if (clip.d != params.d()) throw DimMismatchError("clip dim != params dim");
  return {
      num::row_l2_normalize(num::matmul(gather_tokens(clip, selected, true), params.W_f_prime)),
      num::row_l2_normalize(num::matmul(word_matrix(clip), params.W_g_prime)),
      num::row_l2_normalize(num::matmul(gather_tokens(clip, selected, false), params.W_f)),
      num::row_l2_normalize(num::matmul(row_matrix(clip.sentence), params.W_g)),
  };
}

CrossAttentionOut cross_attention(const Matrix& queries, const Matrix& keys_values) {
  if (keys_values.rows() < 1) throw DimMismatchError("cross_attention needs L >= 1");
  if (queries.cols() != keys_values.cols()) throw DimMismatchError("cross_attention dims");
  const Matrix attn = num::row_softmax(
      num::matmul(num::row_l2_normalize(queries), num::transpose(num::row_l2_normalize(keys_values))));
  return {num::matmul(attn, keys_values), attn};
}

SelfAttentionOut self_attention(const Matrix& tokens) {
  if (tokens.rows() < 1) throw DimMismatchError("self_attention needs M >= 1");
  Matrix logits = num::matmul(tokens, num::transpose(tokens));
  const double s = 1.0 / std::sqrt(static_cast<double>(tokens.cols()));
  for (auto& v : logits.data()) v *= s;
  const Matrix attn = num::row_softmax(logits);
  return {num::matmul(attn, tokens), attn};
}

LocalForwardOut local_forward(const data::ClipFeatures& clip, const std::vector<int>& selected,
                              const ModelParams& params, const AttentionConfig& attn_cfg) {
  attn_cfg.validate();
  Tape tape;
  AttentionTrace trace;
  const LocalVars lv = build_local(tape, clip, selected, tape.constant(params.W_f_prime),
                                   tape.constant(params.W_g_prime), attn_cfg, &trace);
  auto to_vec = [](const Matrix& m) {
    std::vector<double> d(m.data().begin(), m.data().end());
    return Vector(std::move(d));
  };
  return {to_vec(lv.video_mean.value()), to_vec(lv.word_mean.value()), std::move(trace)};
}

double nce_loss(const std::vector<std::pair<Vector, Vector>>& pairs, double margin) {
  if (pairs.empty()) throw BadParamsError("nce_loss needs >= 1 pair");
  const std::size_t b = pairs.size();
  Matrix gram(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) gram.at(i, j) = num::dot(pairs[i].first, pairs[j].second);
  }
  return nce_value(gram, margin);
}

num::GradBundle total_loss_and_grads(const std::vector<BatchItem>& batch,
                                     const ModelParams& params, const TrainConfig& train_cfg,
                                     const AttentionConfig& attn_cfg, LossBreakdown* breakdown) {
  attn_cfg.validate();
  Tape tape;
  Var w_f = tape.param(params.W_f);
  Var w_g = tape.param(params.W_g);
  Var w_f_prime = tape.param(params.W_f_prime);
  Var w_g_prime = tape.param(params.W_g_prime);

  Var total = tape.constant(Matrix(1, 1, 0.0));
  double global_part = 0.0;
  double local_part = 0.0;

  if (train_cfg.use_global && !batch.empty()) {
    std::vector<Var> vrows, srows;
    for (const auto& item : batch) {
      const GlobalVars gv = build_global(tape, *item.clip, item.selected, w_f, w_g);
      vrows.push_back(gv.clip_global);
      srows.push_back(gv.sentence);
    }
    Var gram = num::matmul(num::concat_rows(vrows), num::transpose(num::concat_rows(srows)));
    Var loss = num::nce_margin_loss(gram, train_cfg.margin);
    global_part = loss.value().at(0, 0);
    total = num::add(total, loss);
  }
  if (train_cfg.use_local && !batch.empty()) {
    std::vector<Var> vrows, srows;
    for (const auto& item : batch) {
      const LocalVars lv =
          build_local(tape, *item.clip, item.selected, w_f_prime, w_g_prime, attn_cfg, nullptr);
      vrows.push_back(num::row_l2_normalize(lv.video_mean));
      srows.push_back(num::row_l2_normalize(lv.word_mean));
    }
    Var gram = num::matmul(num::concat_rows(vrows), num::transpose(num::concat_rows(srows)));
    Var loss = num::nce_margin_loss(gram, train_cfg.margin);
    local_part = loss.value().at(0, 0);
    total = num::add(total, loss);
  }

  tape.backward(total);
  if (breakdown) {
    breakdown->total = total.value().at(0, 0);
    breakdown->global_part = global_part;
    breakdown->local_part = local_part;
  }
  num::GradBundle out;
  out.value = total.value().at(0, 0);
  out.grads.emplace("W_f", w_f.grad());
  out.grads.emplace("W_g", w_g.grad());
  out.grads.emplace("W_f_prime", w_f_prime.grad());
  out.grads.emplace("W_g_prime", w_g_prime.grad());
  return out;
}

namespace {

struct AdamState {
  Matrix m, v;
  explicit AdamState(const Matrix& shape) : m(shape.rows(), shape.cols()), v(shape.rows(), shape.cols()) {}
};

void apply_update(Matrix& p, const Matrix& g, AdamState& st, const TrainConfig& cfg, int step) {
  if (cfg.optimizer == Optimizer::Sgd) {
    for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] -= cfg.learning_rate * g.data()[i];
    return;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(b1, step);
  const double bc2 = 1.0 - std::pow(b2, step);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g.data()[i];
    st.m.data()[i] = b1 * st.m.data()[i] + (1.0 - b1) * gi;
    st.v.data()[i] = b2 * st.v.data()[i] + (1.0 - b2) * gi * gi;
    const double mh = st.m.data()[i] / bc1;
    const double vh = st.v.data()[i] / bc2;
    p.data()[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + eps);
  }
}

}  // namespace

TrainResult train(const std::vector<data::ClipFeatures>& dataset, ModelParams initial,
                  const TrainConfig& train_cfg, const AttentionConfig& attn_cfg,
                  ot::SelectionStrategy strategy, int t_frames, const ot::SinkhornConfig& ot_cfg) {
  train_cfg.validate();
  attn_cfg.validate();
  initial.validate();
  if (dataset.empty()) throw BadParamsError("train dataset is empty");

  TrainResult res;
  res.params = std::move(initial);
  Rng rng(train_cfg.seed);

  auto select_all = [&](const ModelParams& p, ot::SelectionStrategy s) {
    std::vector<std::vector<int>> sel(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      sel[i] = ot::select_frames(dataset[i], s, t_frames, p, ot_cfg);
    }
    return sel;
  };
  // With per-epoch reselection the epoch-0 baseline uses the fixed central
  // window: untrained scores are noise, and selecting with the same untrained
  // weights that the loss uses would bias the baseline downward. Model-based
  // selection is refreshed at the start of every training epoch instead.
  std::vector<std::vector<int>> selected =
      train_cfg.reselect_every_epoch && strategy != ot::SelectionStrategy::None
          ? select_all(res.params, ot::SelectionStrategy::None)
          : select_all(res.params, strategy);

  auto eval_epoch = [&](const std::vector<std::size_t>& order, bool update, AdamState* states,
                        int* step) {
    LossBreakdown sums;
    std::size_t count = 0;
    for (std::size_t ofs = 0; ofs < order.size(); ofs += train_cfg.batch_size) {
      std::vector<BatchItem> batch;
      for (std::size_t i = ofs; i < std::min(order.size(), ofs + train_cfg.batch_size); ++i) {
        batch.push_back({&dataset[order[i]], selected[order[i]]});
      }
      LossBreakdown bd;
      num::GradBundle gb = total_loss_and_grads(batch, res.params, train_cfg, attn_cfg, &bd);
      sums.total += bd.total * batch.size();
      sums.global_part += bd.global_part * batch.size();
      sums.local_part += bd.local_part * batch.size();
      count += batch.size();
      if (update) {
        ++*step;
        apply_update(res.params.W_f, gb.grads.at("W_f"), states[0], train_cfg, *step);
        apply_update(res.params.W_g, gb.grads.at("W_g"), states[1], train_cfg, *step);
        apply_update(res.params.W_f_prime, gb.grads.at("W_f_prime"), states[2], train_cfg, *step);
        apply_update(res.params.W_g_prime, gb.grads.at("W_g_prime"), states[3], train_cfg, *step);
      }
    }
    sums.total /= count;
    sums.global_part /= count;
    sums.local_part /= count;
    return sums;
  };

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  const LossBreakdown init = eval_epoch(order, false, nullptr, nullptr);
  res.log.push_back({0, init.global_part, init.local_part, init.total});

  AdamState states[4] = {AdamState(res.params.W_f), AdamState(res.params.W_g),
                         AdamState(res.params.W_f_prime), AdamState(res.params.W_g_prime)};
  int step = 0;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    if (train_cfg.reselect_every_epoch && strategy != ot::SelectionStrategy::None) {
      selected = select_all(res.params, strategy);
    }
    rng.shuffle(order);
    const LossBreakdown bd = eval_epoch(order, true, states, &step);
    res.log.push_back({epoch, bd.global_part, bd.local_part, bd.total});
  }
  return res;
}

num::Matrix rollout_heatmap(const AttentionTrace& trace, const std::vector<int>& query_word_indices,
                            double residual_weight, std::size_t frames) {
  if (query_word_indices.empty()) throw EmptyQueryError("rollout query");
  const LayerTrace* last_cross = nullptr;
  const LayerTrace* self_layer = nullptr;
  for (const auto& l : trace.layers) {
    if (l.kind == AttentionLayerKind::Cross) last_cross = &l;
    if (l.kind == AttentionLayerKind::Self) self_layer = &l;
  }
  if (!last_cross) throw BadParamsError("trace has no cross layer");
  const Matrix& cross = last_cross->video_attn;  // TN x K
  const std::size_t tn = cross.rows();
  if (frames == 0 || tn % frames != 0) throw DimMismatchError("rollout frames");
  const std::size_t cells = tn / frames;

  for (int k : query_word_indices) {
    if (k < 0 || static_cast<std::size_t>(k) >= cross.cols()) {
      throw DimMismatchError("rollout query index out of range");
    }
  }

  // R = (w*I + (1-w)*A_self) * A_cross; without a self layer this is A_cross.
  Matrix relevance(tn, cross.cols());
  if (self_layer) {
    const Matrix& a_self = self_layer->video_attn;
    Matrix mix(tn, tn);
    for (std::size_t i = 0; i < tn; ++i) {
      for (std::size_t j = 0; j < tn; ++j) {
        mix.at(i, j) = (1.0 - residual_weight) * a_self.at(i, j) + (i == j ? residual_weight : 0.0);
      }
    }
    relevance = num::matmul(mix, cross);
  } else {
    relevance = cross;
  }

  std::vector<double> raw(tn, 0.0);
  for (std::size_t i = 0; i < tn; ++i) {
    for (int k : query_word_indices) raw[i] += relevance.at(i, static_cast<std::size_t>(k));
  }
  double mn = raw[0], mx = raw[0];
  for (double v : raw) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  Matrix out(frames, cells);
  if (mx - mn >= 1e-15) {
    for (std::size_t i = 0; i < tn; ++i) {
      out.data()[i] = (raw[i] - mn) / (mx - mn);
    }
  }
  return out;
}

}  // namespace stground::net
