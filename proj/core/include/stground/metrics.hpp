#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stground/features.hpp"

namespace stground::metrics {

struct EvalReport {
  std::map<std::string, double> values;
  std::map<int, double> per_class;
  long hits = 0;
  long misses = 0;
  long tp = 0, fp = 0, fn = 0;
  std::map<std::string, double> config_echo;
};

struct PointSample {
  double x = 0, y = 0;
  data::PixelBox box;
};

// hits / (hits + misses); a point on the box boundary is a hit (closed box).
double pointing_game(const std::vector<PointSample>& samples, long* hits_out = nullptr,
                     long* misses_out = nullptr);

struct SpatialDet {
  std::string video_id;
  int frame = 0;
  int class_id = 0;
  double confidence = 0.0;
  std::vector<std::uint8_t> mask;  // grid cells
  int grid_side = 0;
};

struct SpatialGt {
  std::string video_id;
  int frame = 0;
  int class_id = 0;
  data::PixelBox box;
  double frame_width = 0, frame_height = 0;
};

// Rasterizes the box onto the grid (cell counted inside if its center is
// inside the closed box).
std::vector<std::uint8_t> rasterize_box(const data::PixelBox& box, int grid_side, double w,
                                        double h);

double mask_iou(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

// Per-class AP with exact PR area; a detection is correct when its mask IoU
// against the rasterized GT box exceeds iou_thr. mAP over classes with GT.
double spatial_map(const std::vector<SpatialDet>& dets, const std::vector<SpatialGt>& gts,
                   double iou_thr, std::map<int, double>* per_class = nullptr);

struct TubeDet {
  std::string video_id;
  int class_id = 0;
  double confidence = 0.0;
  int start_frame = 0;
  std::vector<std::vector<std::uint8_t>> masks;  // one grid mask per frame
};

struct TubeGt {
  std::string video_id;
  int class_id = 0;
  int start_frame = 0;
  std::vector<std::vector<std::uint8_t>> masks;
};

// Voxel IoU between two tubes on the shared grid.
double tube_iou(const TubeDet& det, const TubeGt& gt);

// Greedy confidence-ordered one-to-one matching, AP per class, mean over
// classes; one value per requested threshold.
std::vector<double> video_map(const std::vector<TubeDet>& dets, const std::vector<TubeGt>& gts,
                              const std::vector<double>& iou_thresholds);

struct CombinedFrame {
  int predicted_label = data::kBackground;
  double point_x = 0, point_y = 0;
  int gt_label = data::kBackground;
  data::PixelBox gt_box;
};

// Per class c: TP frames (label correct and point inside box) over the union
// of frames predicted c and frames with GT c; mean over classes present in GT.
double iou_pointing_game(const std::vector<CombinedFrame>& frames,
                         std::map<int, double>* per_class = nullptr);

struct Interval {
  int class_id = 0;
  int start = 0;
  int end = 0;  // exclusive, half-open frames
};

struct TemporalScores {
  std::vector<double> iod;      // per GT instance
  std::vector<double> jaccard;  // per GT instance
  double mean_iod = 0.0;
  double mean_jaccard = 0.0;
};

// Each GT instance is matched to the same-class prediction with maximal
// overlap; unmatched GT scores 0.
TemporalScores iod_jaccard(const std::vector<Interval>& preds, const std::vector<Interval>& gts);

}  // namespace stground::metrics
