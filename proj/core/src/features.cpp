#include "stground/features.hpp"

#include <cmath>
#include <set>
#include <string>

namespace stground::data {

namespace {
bool is_perfect_square(std::size_t n) {
  const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return r * r == n;
}

void quantize(num::Vector& v) {
  for (std::size_t i = 0; i < v.dim(); ++i) v[i] = static_cast<double>(static_cast<float>(v[i]));
}
}  // namespace

void ClipFeatures::validate() const {
  if (frames < 1) throw SchemaError("clip " + clip_id + ": U >= 1");
  if (word_count() < 1) throw SchemaError("clip " + clip_id + ": K >= 1");
  if (!is_perfect_square(grid_cells)) throw SchemaError("clip " + clip_id + ": N must be a perfect square");
  if (grid.size() != frames * grid_cells) {
    throw SchemaError("clip " + clip_id + ": grid length != U*N");
  }
  if (frame_global.size() != frames) throw SchemaError("clip " + clip_id + ": frame_global length != U");
  for (const auto& v : grid) {
    if (v.dim() != d) throw SchemaError("clip " + clip_id + ": grid vector dim != d");
  }
  for (const auto& v : frame_global) {
    if (v.dim() != d) throw SchemaError("clip " + clip_id + ": frame_global dim != d");
  }
  for (const auto& w : words) {
    if (w.vec.dim() != d) throw SchemaError("clip " + clip_id + ": word dim != d");
  }
  if (sentence.dim() != d) throw SchemaError("clip " + clip_id + ": sentence dim != d");
  if (fps <= 0) throw SchemaError("clip " + clip_id + ": fps must be positive");
  if (start_s < 0) throw SchemaError("clip " + clip_id + ": start_s must be non-negative");
}

void LabelBank::validate() const {
  std::set<std::string> names;
  const std::size_t d = classes.empty() ? 0 : classes.front().sentence.dim();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    if (c.class_id != static_cast<int>(i)) throw SchemaError("bank: class_ids must be dense 0..C-1");
    if (!names.insert(c.name).second) throw SchemaError("bank: duplicate class name " + c.name);
    if (c.sentence.dim() != d) throw SchemaError("bank: sentence dim mismatch");
    for (const auto& w : c.words) {
      if (w.dim() != d) throw SchemaError("bank: word dim mismatch");
    }
  }
}

void VideoGt::validate() const {
  for (const auto& s : segments) {
    if (!(0 <= s.start_frame && s.start_frame < s.end_frame && s.end_frame <= frame_count)) {
      throw SchemaError("gt " + video_id + ": segment out of bounds");
    }
    if (s.boxes.size() != static_cast<std::size_t>(s.end_frame - s.start_frame)) {
      throw SchemaError("gt " + video_id + ": box per frame in segment");
    }
    for (const auto& b : s.boxes) {
      if (!(0 <= b.x0 && b.x0 <= b.x1 && b.x1 <= width && 0 <= b.y0 && b.y0 <= b.y1 &&
            b.y1 <= height)) {
        throw SchemaError("gt " + video_id + ": box outside frame");
      }
    }
  }
}

void quantize_f32(ClipFeatures& cf) {
  for (auto& v : cf.grid) quantize(v);
  for (auto& v : cf.frame_global) quantize(v);
  for (auto& w : cf.words) quantize(w.vec);
  quantize(cf.sentence);
  cf.fps = static_cast<double>(static_cast<float>(cf.fps));
  cf.start_s = static_cast<double>(static_cast<float>(cf.start_s));
}

void quantize_f32(LabelBank& bank) {
  for (auto& c : bank.classes) {
    for (auto& w : c.words) quantize(w);
    quantize(c.sentence);
  }
}

}  // namespace stground::data
