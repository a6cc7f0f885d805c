#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stground/features.hpp"
#include "stground/params.hpp"
#include "stground/sinkhorn.hpp"
#include "stground/tape.hpp"

namespace stground::net {

enum class AttentionLayerKind { Cross, Self };

// Attention layers are parameter-free (cosine / scaled dot); all trainable
// capacity lives in the four projection matrices.
struct AttentionConfig {
  std::vector<AttentionLayerKind> stack{AttentionLayerKind::Cross, AttentionLayerKind::Self,
                                        AttentionLayerKind::Cross};
  double residual_weight = 0.5;

  void validate() const;  // at least one Cross; stack ends with Cross
};

enum class Optimizer { Sgd, AdaptiveMoments };

struct TrainConfig {
  int batch_size = 64;
  double margin = 0.1;  // delta
  double learning_rate = 1e-4;
  int epochs = 10;
  bool use_global = true;
  bool use_local = true;
  Optimizer optimizer = Optimizer::AdaptiveMoments;
  std::uint64_t seed = 0;
  bool reselect_every_epoch = true;

  void validate() const;
};

struct LayerTrace {
  AttentionLayerKind kind;
  num::Matrix video_attn;  // Cross: TN x K, Self: TN x TN
  num::Matrix text_attn;   // Cross: K x TN, Self: K x K
};

struct AttentionTrace {
  std::vector<LayerTrace> layers;
};

struct ProjectedTokens {
  num::Matrix video_tokens;   // TN x d', unit rows
  num::Matrix word_tokens;    // K x d', unit rows
  num::Matrix frame_globals;  // T x d', unit rows
  num::Matrix sentence;       // 1 x d', unit row
};

ProjectedTokens project_tokens(const data::ClipFeatures& clip, const std::vector<int>& selected,
                               const ModelParams& params);

struct CrossAttentionOut {
  num::Matrix contextual;  // M x d'
  num::Matrix attn;        // M x L, row-stochastic
};
CrossAttentionOut cross_attention(const num::Matrix& queries, const num::Matrix& keys_values);

struct SelfAttentionOut {
  num::Matrix tokens;  // M x d'
  num::Matrix attn;    // M x M, row-stochastic
};
SelfAttentionOut self_attention(const num::Matrix& tokens);

struct LocalForwardOut {
  num::Vector video_mean;  // mean over TN final video tokens, un-normalized
  num::Vector word_mean;   // mean over K final word tokens
  AttentionTrace trace;
};
LocalForwardOut local_forward(const data::ClipFeatures& clip, const std::vector<int>& selected,
                              const ModelParams& params, const AttentionConfig& attn_cfg);

// Margin NCE over B (X, Y) pairs; imposters are the other batch elements in
// both directions. Vectors must be unit-norm.
double nce_loss(const std::vector<std::pair<num::Vector, num::Vector>>& pairs, double margin);

struct BatchItem {
  const data::ClipFeatures* clip;
  std::vector<int> selected;
};

struct LossBreakdown {
  double total = 0.0;
  double global_part = 0.0;
  double local_part = 0.0;
};

num::GradBundle total_loss_and_grads(const std::vector<BatchItem>& batch,
                                     const ModelParams& params, const TrainConfig& train_cfg,
                                     const AttentionConfig& attn_cfg,
                                     LossBreakdown* breakdown = nullptr);

struct EpochLog {
  int epoch = 0;  // 0 is the pre-training evaluation
  double loss_global = 0.0;
  double loss_local = 0.0;
  double loss_total = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

TrainResult train(const std::vector<data::ClipFeatures>& dataset, ModelParams initial,
                  const TrainConfig& train_cfg, const AttentionConfig& attn_cfg,
                  ot::SelectionStrategy strategy, int t_frames, const ot::SinkhornConfig& ot_cfg);

// Rollout over the self layer (residual-mixed) and the last cross layer.
// Returns frames x N heatmaps, min-max normalized over the whole clip; a flat
// raw map normalizes to all zeros.
num::Matrix rollout_heatmap(const AttentionTrace& trace, const std::vector<int>& query_word_indices,
                            double residual_weight, std::size_t frames);

}  // namespace stground::net
