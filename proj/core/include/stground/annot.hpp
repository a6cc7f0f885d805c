#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stground/features.hpp"

namespace stground::bench {

enum class AnnotatorFlag { Point, CantSolve, Corrupt };

struct AnnotatorEntry {
  AnnotatorFlag flag = AnnotatorFlag::Point;
  double x = 0, y = 0;  // valid when flag == Point
};

// Raw keypoint labels for one (video, frame, class), up to 5 annotators.
struct KeypointRecord {
  std::string video_id;
  int frame_index = 0;
  int class_id = 0;
  std::vector<AnnotatorEntry> annotators;
  double frame_width = 0, frame_height = 0;

  void validate() const;
};

struct BenchConfig {
  int majority_k = 3;
  double bbox_margin_frac = 0.05;  // of W and of H, per side
  double widespread_area = 60000.0;  // pixels^2

  void validate() const;
};

struct Point {
  double x = 0, y = 0;
};

struct FrameAggregate {
  bool present = false;
  std::vector<Point> points;
  Point centroid;
};

// Majority vote: present iff >= majority_k annotators placed a point.
// Corrupt entries count neither as points nor toward the denominator.
FrameAggregate aggregate_frame(const KeypointRecord& rec, const BenchConfig& cfg);

// Axis-aligned hull of the points, expanded by the margin fraction of W/H
// per side, clamped to the frame.
data::PixelBox points_to_bbox(const std::vector<Point>& points, double w, double h,
                              const BenchConfig& cfg);

struct BoundarySegment {
  int start = 0;
  int end = 0;  // exclusive
};

// Maximal runs of present frames.
std::vector<BoundarySegment> refine_boundaries(const std::vector<bool>& present);

double widespread_fraction(const std::vector<data::PixelBox>& boxes, const BenchConfig& cfg);

// z-quantile at 1-(1-alpha)/2; N0 = z^2/eps^2 * p(1-p); finite population
// correction N_S = floor(N0*N / (N0 + N - 1)).
long qc_sample_size(double alpha, double eps, double p, long population);

struct AgreementRates {
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double disagree_rate = 0.0;
};

AgreementRates qc_agreement(const std::vector<bool>& specialist,
                            const std::vector<bool>& aggregated);

struct ActionClip {
  int start = 0;
  int end = 0;  // exclusive
  int action_start = 0;
  int action_end = 0;
};

// Pads each segment [a,b) to [a-(b-a), b+(b-a)), clamped to the video, so the
// action occupies the middle third when unclamped.
std::vector<ActionClip> build_single_action_clips(const data::VideoGt& gt);

// Inverse standard-normal CDF (Acklam's rational approximation, relative
// error below 1.15e-9).
double normal_quantile(double p);

}  // namespace stground::bench
