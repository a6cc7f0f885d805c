#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stground/matrix.hpp"

namespace stground::data {

inline constexpr int kBackground = -1;
inline constexpr int kFormatVersion = 1;

struct WordToken {
  std::string text;
  num::Vector vec;
};

// Per-clip token embeddings: U frames x N grid tokens plus per-frame and
// sentence-level globals. N is a perfect square (row-major grid, cell
// (r, c) at index r * sqrt(N) + c).
struct ClipFeatures {
  std::string video_id;
  std::string clip_id;
  std::size_t d = 0;
  std::size_t frames = 0;      // U
  std::size_t grid_cells = 0;  // N
  std::vector<num::Vector> grid;          // U * N, frame-major
  std::vector<num::Vector> frame_global;  // U
  std::vector<WordToken> words;           // K
  num::Vector sentence;
  double fps = 1.0;
  double start_s = 0.0;

  const num::Vector& cell(std::size_t frame, std::size_t n) const {
    return grid[frame * grid_cells + n];
  }
  std::size_t word_count() const { return words.size(); }

  void validate() const;  // throws SchemaError naming the violated invariant
};

struct LabelClass {
  int class_id = 0;
  std::string name;
  std::vector<num::Vector> words;
  num::Vector sentence;
};

struct LabelBank {
  std::vector<LabelClass> classes;
  void validate() const;
};

struct PixelBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {  // closed box
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

struct GtSegment {
  int class_id = 0;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  std::vector<PixelBox> boxes;  // one per frame in [start, end)
};

struct VideoGt {
  std::string video_id;
  double width = 0, height = 0;
  int frame_count = 0;
  std::vector<GtSegment> segments;
  std::vector<int> ordered_transcript;  // class_id or kBackground
  void validate() const;
};

struct FramePrediction {
  int frame_index = 0;
  int label = kBackground;
  std::vector<double> heatmap;       // N scores in [0,1]
  double argmax_x = 0, argmax_y = 0; // pixel
  std::vector<std::uint8_t> mask;    // heatmap >= tau
  double best_similarity = 0.0;
};

struct PredSegment {
  int class_id = 0;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  double confidence = 0.0;
};

struct SpatioTemporalPrediction {
  std::string video_id;
  std::vector<FramePrediction> frames;
  std::vector<PredSegment> segments;
};

// Narrows every numeric field to 32-bit floats in place, so a following
// save/load round trip is bit-exact.
void quantize_f32(ClipFeatures& cf);
void quantize_f32(LabelBank& bank);

}  // namespace stground::data
