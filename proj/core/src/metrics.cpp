#include "stground/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace stground::metrics {

double pointing_game(const std::vector<PointSample>& samples, long* hits_out, long* misses_out) {
  if (samples.empty()) throw NoSamplesError("pointing_game");
  long hits = 0;
  for (const auto& s : samples) {
    if (s.box.contains(s.x, s.y)) ++hits;
  }
  const long misses = static_cast<long>(samples.size()) - hits;
  if (hits_out) *hits_out = hits;
  if (misses_out) *misses_out = misses;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<std::uint8_t> rasterize_box(const data::PixelBox& box, int grid_side, double w,
                                        double h) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(grid_side) * grid_side, 0);
  for (int r = 0; r < grid_side; ++r) {
    const double cy = (r + 0.5) * h / grid_side;
    for (int c = 0; c < grid_side; ++c) {
      const double cx = (c + 0.5) * w / grid_side;
      if (box.contains(cx, cy)) mask[r * grid_side + c] = 1;
    }
  }
  return mask;
}

double mask_iou(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) throw DimMismatchError("mask_iou");
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool av = a[i] != 0, bv = b[i] != 0;
    inter += av && bv;
    uni += av || bv;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Exact area under the PR curve: sum of precision-at-TP times 1/Ngt.
double ap_from_flags(const std::vector<bool>& tp_flags, long gt_count) {
  if (gt_count == 0) return 0.0;
  double ap = 0.0;
  long tp = 0;
  for (std::size_t i = 0; i < tp_flags.size(); ++i) {
    if (tp_flags[i]) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(i + 1) / static_cast<double>(gt_count);
    }
  }
  return ap;
}

}  // namespace

double spatial_map(const std::vector<SpatialDet>& dets, const std::vector<SpatialGt>& gts,
                   double iou_thr, std::map<int, double>* per_class) {
  if (gts.empty()) throw NoSamplesError("spatial_map: no ground truth");
  std::set<int> classes;
  for (const auto& g : gts) classes.insert(g.class_id);

  double sum = 0.0;
  for (int cls : classes) {
    std::vector<const SpatialDet*> cls_dets;
    for (const auto& d : dets) {
      if (d.class_id == cls) cls_dets.push_back(&d);
    }
    std::stable_sort(cls_dets.begin(), cls_dets.end(), [](const SpatialDet* a, const SpatialDet* b) {
      if (a->confidence != b->confidence) return a->confidence > b->confidence;
      return std::tie(a->video_id, a->frame) < std::tie(b->video_id, b->frame);
    });
    std::vector<const SpatialGt*> cls_gts;
    for (const auto& g : gts) {
      if (g.class_id == cls) cls_gts.push_back(&g);
    }
    std::vector<bool> gt_used(cls_gts.size(), false);
    std::vector<bool> tp_flags;
    for (const SpatialDet* d : cls_dets) {
      double best_iou = 0.0;
      std::size_t best_g = cls_gts.size();
      for (std::size_t gi = 0; gi < cls_gts.size(); ++gi) {
        const SpatialGt* g = cls_gts[gi];
        if (gt_used[gi] || g->video_id != d->video_id || g->frame != d->frame) continue;
        const auto raster =
            rasterize_box(g->box, d->grid_side, g->frame_width, g->frame_height);
        const double iou = mask_iou(d->mask, raster);
        if (iou > best_iou) {
          best_iou = iou;
          best_g = gi;
        }
      }
      const bool tp = best_iou > iou_thr && best_g < cls_gts.size();
      if (tp) gt_used[best_g] = true;
      tp_flags.push_back(tp);
    }
    const double ap = ap_from_flags(tp_flags, static_cast<long>(cls_gts.size()));
    if (per_class) (*per_class)[cls] = ap;
    sum += ap;
  }
  return sum / static_cast<double>(classes.size());
}

double tube_iou(const TubeDet& det, const TubeGt& gt) {
  long inter = 0, uni = 0;
  const int det_end = det.start_frame + static_cast<int>(det.masks.size());
  const int gt_end = gt.start_frame + static_cast<int>(gt.masks.size());
  const int lo = std::min(det.start_frame, gt.start_frame);
  const int hi = std::max(det_end, gt_end);
  for (int f = lo; f < hi; ++f) {
    const std::vector<std::uint8_t>* dm =
        (f >= det.start_frame && f < det_end) ? &det.masks[f - det.start_frame] : nullptr;
    const std::vector<std::uint8_t>* gm =
        (f >= gt.start_frame && f < gt_end) ? &gt.masks[f - gt.start_frame] : nullptr;
    if (!dm && !gm) continue;  // gap between disjoint spans
    const std::size_t cells = dm ? dm->size() : gm->size();
    for (std::size_t i = 0; i < cells; ++i) {
      const bool dv = dm && (*dm)[i] != 0;
      const bool gv = gm && (*gm)[i] != 0;
      inter += dv && gv;
      uni += dv || gv;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> video_map(const std::vector<TubeDet>& dets, const std::vector<TubeGt>& gts,
                              const std::vector<double>& iou_thresholds) {
  if (gts.empty()) throw NoSamplesError("video_map: no ground truth");
  std::set<int> classes;
  for (const auto& g : gts) classes.insert(g.class_id);

  std::vector<double> result;
  for (double thr : iou_thresholds) {
    double sum = 0.0;
    for (int cls : classes) {
      std::vector<const TubeDet*> cls_dets;
      for (const auto& d : dets) {
        if (d.class_id == cls) cls_dets.push_back(&d);
      }
      std::stable_sort(cls_dets.begin(), cls_dets.end(), [](const TubeDet* a, const TubeDet* b) {
        if (a->confidence != b->confidence) return a->confidence > b->confidence;
        return std::tie(a->video_id, a->start_frame) < std::tie(b->video_id, b->start_frame);
      });
      std::vector<const TubeGt*> cls_gts;
      for (const auto& g : gts) {
        if (g.class_id == cls) cls_gts.push_back(&g);
      }
      std::vector<bool> gt_used(cls_gts.size(), false);
      std::vector<bool> tp_flags;
      for (const TubeDet* d : cls_dets) {
        double best_iou = 0.0;
        std::size_t best_g = cls_gts.size();
        for (std::size_t gi = 0; gi < cls_gts.size(); ++gi) {
          if (gt_used[gi] || cls_gts[gi]->video_id != d->video_id) continue;
          const double iou = tube_iou(*d, *cls_gts[gi]);
          if (iou > best_iou) {
            best_iou = iou;
            best_g = gi;
          }
        }
        const bool tp = best_iou >= thr && best_g < cls_gts.size();
        if (tp) gt_used[best_g] = true;
        tp_flags.push_back(tp);
      }
      sum += ap_from_flags(tp_flags, static_cast<long>(cls_gts.size()));
    }
    result.push_back(sum / static_cast<double>(classes.size()));
  }
  return result;
}

double iou_pointing_game(const std::vector<CombinedFrame>& frames,
                         std::map<int, double>* per_class) {
  if (frames.empty()) throw NoSamplesError("iou_pointing_game");
  std::set<int> gt_classes;
  for (const auto& f : frames) {
    if (f.gt_label != data::kBackground) gt_classes.insert(f.gt_label);
  }
  if (gt_classes.empty()) throw NoSamplesError("iou_pointing_game: no GT classes");
  double sum = 0.0;
  for (int cls : gt_classes) {
    long tp = 0, uni = 0;
    for (const auto& f : frames) {
      const bool pred_c = f.predicted_label == cls;
      const bool gt_c = f.gt_label == cls;
      if (pred_c || gt_c) ++uni;
      if (pred_c && gt_c && f.gt_box.contains(f.point_x, f.point_y)) ++tp;
    }
    const double score = uni == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(uni);
    if (per_class) (*per_class)[cls] = score;
    sum += score;
  }
  return sum / static_cast<double>(gt_classes.size());
}

TemporalScores iod_jaccard(const std::vector<Interval>& preds, const std::vector<Interval>& gts) {
  TemporalScores out;
  for (const auto& g : gts) {
    const Interval* best = nullptr;
    int best_overlap = 0;
    for (const auto& p : preds) {
      if (p.class_id != g.class_id) continue;
      const int ov = std::max(0, std::min(g.end, p.end) - std::max(g.start, p.start));
      if (ov > best_overlap) {
        best_overlap = ov;
        best = &p;
      }
    }
    if (!best) {
      out.iod.push_back(0.0);
      out.jaccard.push_back(0.0);
      continue;
    }
    const int inter = best_overlap;
    const int det_len = best->end - best->start;
    const int uni = (g.end - g.start) + det_len - inter;
    out.iod.push_back(static_cast<double>(inter) / det_len);
    out.jaccard.push_back(static_cast<double>(inter) / uni);
  }
  for (double v : out.iod) out.mean_iod += v;
  for (double v : out.jaccard) out.mean_jaccard += v;
  if (!out.iod.empty()) {
    out.mean_iod /= out.iod.size();
    out.mean_jaccard /= out.jaccard.size();
  }
  return out;
}

}  // namespace stground::metrics
