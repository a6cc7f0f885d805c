#pragma once

#include <map>

#include "stground/features.hpp"

namespace stground::data {

struct SynthConfig {
  int classes = 4;
  int videos = 4;
  int frames_per_video = 48;
  int train_clips = 64;
  int candidate_frames = 16;  // U
  int planted_frames = 8;     // frames per clip that carry the class signal
  int grid_cells = 16;        // N, perfect square
  int dim = 32;               // d
  int words_per_clip = 4;     // K; one carrier word, the rest distractors
  double signal = 1.0;        // prototype scale before normalization
  double noise_sigma = 0.1;
  // Scale of the per-clip latent direction shared between a clip's visual
  // tokens and its words; models instance-level correspondence (the narration
  // describes this clip, not just its class). 0 disables it.
  double latent_scale = 1.0;
  // Fraction of each latent direction drawn inside the span of the class
  // prototypes; ties instance variation to the class subspace so projections
  // that keep positives aligned also keep class directions alive.
  double latent_span_frac = 0.0;
  // Planted frame globals are scaled by a per-frame visibility drawn from
  // [visibility_min, 1] before noise, so some planted frames are weak.
  double visibility_min = 1.0;
  // Noise applied to the clip sentence; < 0 means use noise_sigma.
  double sentence_sigma = -1.0;
  int planted_cells = 4;      // cells per planted frame
  double frame_width = 320;
  double frame_height = 240;
  std::uint64_t seed = 0;

  void validate() const;
};

// Which frames/cells the generator planted, for oracle tests.
struct PlantedClipInfo {
  int class_id = 0;
  std::vector<int> planted_frames;
  std::map<int, std::vector<int>> planted_cells;  // frame -> cell indices
  std::map<int, PixelBox> boxes;                  // frame -> pixel hull of planted block
};

struct SynthDataset {
  std::vector<ClipFeatures> clips;
  std::vector<PlantedClipInfo> clip_info;
  LabelBank bank;
  std::vector<ClipFeatures> videos;
  std::vector<VideoGt> gts;
};

// Plants one unit prototype per class into frames/cells/words and records
// exactly what was planted. Deterministic in cfg.seed; all stored values are
// quantized to 32-bit floats so file round trips are exact.
SynthDataset synth_generate(const SynthConfig& cfg);

}  // namespace stground::data
