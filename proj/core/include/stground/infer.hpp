#pragma once

#include <vector>

#include "stground/features.hpp"
#include "stground/model.hpp"
#include "stground/params.hpp"

namespace stground::infer {

struct InferConfig {
  double theta_temporal = 0.5;   // cosine threshold for background filtering
  double tau_spatial = 0.01;     // heatmap mask threshold
  double background_score = 0.5; // constant similarity for background slots

  void validate() const;
};

struct FrameLabel {
  int label = data::kBackground;
  double best_similarity = 0.0;
};

// Per-frame argmax over the class pool on global-projection cosine; below
// theta means background. Ties go to the lower class_id.
std::vector<FrameLabel> temporal_classify(const data::ClipFeatures& video,
                                          const data::LabelBank& bank,
                                          const net::ModelParams& params,
                                          const InferConfig& cfg);

struct LabelSegment {
  int class_id = 0;
  int start = 0;
  int end = 0;  // exclusive
};

// Maximal runs of identical non-background labels.
std::vector<LabelSegment> segments_from_labels(const std::vector<int>& labels);

data::SpatioTemporalPrediction st_ground(const data::ClipFeatures& video,
                                         const data::LabelBank& bank,
                                         const net::ModelParams& params,
                                         const net::AttentionConfig& attn_cfg,
                                         const InferConfig& cfg, double frame_width,
                                         double frame_height);

// Frames x transcript-slot similarities for a transcript of class ids
// (background entries scored at cfg.background_score).
num::Matrix transcript_similarity(const data::ClipFeatures& video, const data::LabelBank& bank,
                                  const std::vector<int>& transcript,
                                  const net::ModelParams& params, const InferConfig& cfg);

// Monotone DP assignment of frames to transcript slots; every slot gets at
// least one frame. Returns per-frame slot indices.
std::vector<int> align_transcript(const num::Matrix& sim);

// Bilinear upsample of a row-major sqrt(N) x sqrt(N) cell map to w x h pixels,
// sampling at pixel centers with edge clamping.
num::Matrix upsample_bilinear(const std::vector<double>& cells, int grid_side, int w, int h);

}  // namespace stground::infer
