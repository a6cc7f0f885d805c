#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stground/features.hpp"
#include "stground/params.hpp"

namespace stground::data {

// All files are UTF-8 JSON (single objects) or JSON-lines (per-frame /
// per-video streams). Numeric values are stored at 32-bit precision; the
// save->load round trip is bit-exact.

void save_clip_features(const ClipFeatures& cf, const std::filesystem::path& path);
ClipFeatures load_clip_features(const std::filesystem::path& path);

void save_label_bank(const LabelBank& bank, const std::filesystem::path& path);
LabelBank load_label_bank(const std::filesystem::path& path);

void save_video_gts(const std::vector<VideoGt>& gts, const std::filesystem::path& path);
std::vector<VideoGt> load_video_gts(const std::filesystem::path& path);

void save_predictions(const std::vector<SpatioTemporalPrediction>& preds,
                      const std::filesystem::path& path);
std::vector<SpatioTemporalPrediction> load_predictions(const std::filesystem::path& path);

void save_model_params(const net::ModelParams& params, const std::filesystem::path& path);
net::ModelParams load_model_params(const std::filesystem::path& path);

}  // namespace stground::data
