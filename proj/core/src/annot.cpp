#include "stground/annot.hpp"

#include <algorithm>
#include <cmath>

#include "stground/errors.hpp"

namespace stground::bench {

void KeypointRecord::validate() const {
  if (annotators.size() > 5) throw BadParamsError("at most 5 annotator entries");
  if (frame_width <= 0 || frame_height <= 0) throw BadParamsError("frame geometry must be positive");
  for (const auto& a : annotators) {
    if (a.flag != AnnotatorFlag::Point) continue;
    if (a.x < 0 || a.x > frame_width || a.y < 0 || a.y > frame_height) {
      throw BadParamsError("annotator point outside the frame");
    }
  }
}

void BenchConfig::validate() const {
  if (majority_k < 1 || majority_k > 5) throw BadParamsError("majority_k must be in [1,5]");
  if (bbox_margin_frac < 0) throw BadParamsError("bbox margin must be >= 0");
  if (widespread_area <= 0) throw BadParamsError("widespread area must be positive");
}

FrameAggregate aggregate_frame(const KeypointRecord& rec, const BenchConfig& cfg) {
  rec.validate();
  cfg.validate();
  FrameAggregate out;
  for (const auto& a : rec.annotators) {
    // corrupt entries drop out of the vote entirely
    if (a.flag == AnnotatorFlag::Point) out.points.push_back({a.x, a.y});
  }
  out.present = static_cast<int>(out.points.size()) >= cfg.majority_k;
  if (out.present) {
    for (const auto& p : out.points) {
      out.centroid.x += p.x;
      out.centroid.y += p.y;
    }
    out.centroid.x /= static_cast<double>(out.points.size());
    out.centroid.y /= static_cast<double>(out.points.size());
  }
  return out;
}

data::PixelBox points_to_bbox(const std::vector<Point>& points, double w, double h,
                              const BenchConfig& cfg) {
  cfg.validate();
  if (points.empty()) throw NoPointsError("points_to_bbox");
  double x0 = points[0].x, x1 = points[0].x, y0 = points[0].y, y1 = points[0].y;
  for (const auto& p : points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  data::PixelBox box;
  box.x0 = std::max(0.0, x0 - cfg.bbox_margin_frac * w);
  box.y0 = std::max(0.0, y0 - cfg.bbox_margin_frac * h);
  box.x1 = std::min(w, x1 + cfg.bbox_margin_frac * w);
  box.y1 = std::min(h, y1 + cfg.bbox_margin_frac * h);
  return box;
}

std::vector<BoundarySegment> refine_boundaries(const std::vector<bool>& present) {
  std::vector<BoundarySegment> out;
  int run_start = -1;
  for (std::size_t i = 0; i <= present.size(); ++i) {
    const bool on = i < present.size() && present[i];
    if (on && run_start < 0) run_start = static_cast<int>(i);
    if (!on && run_start >= 0) {
      out.push_back({run_start, static_cast<int>(i)});
      run_start = -1;
    }
  }
  return out;
}

double widespread_fraction(const std::vector<data::PixelBox>& boxes, const BenchConfig& cfg) {
  cfg.validate();
  if (boxes.empty()) throw NoSamplesError("widespread_fraction");
  long wide = 0;
  for (const auto& b : boxes) {
    if ((b.x1 - b.x0) * (b.y1 - b.y0) > cfg.widespread_area) ++wide;
  }
  return static_cast<double>(wide) / static_cast<double>(boxes.size());
}

double normal_quantile(double p) {
  if (p <= 0 || p >= 1) throw BadParamsError("quantile needs p in (0,1)");
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    const double q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

long qc_sample_size(double alpha, double eps, double p, long population) {
  if (alpha <= 0 || alpha >= 1) throw BadParamsError("alpha must be in (0,1)");
  if (eps <= 0 || eps >= 1) throw BadParamsError("eps must be in (0,1)");
  if (p < 0 || p > 1) throw BadParamsError("p must be in [0,1]");
  if (population < 1) throw BadParamsError("population must be >= 1");
  const double z = normal_quantile(1.0 - (1.0 - alpha) / 2.0);
  const double n0 = z * z / (eps * eps) * p * (1.0 - p);
  if (n0 == 0.0) return 0;
  const double ns = n0 * static_cast<double>(population) /
                    (n0 + static_cast<double>(population) - 1.0);
  return static_cast<long>(std::floor(ns));
}

AgreementRates qc_agreement(const std::vector<bool>& specialist,
                            const std::vector<bool>& aggregated) {
  if (specialist.size() != aggregated.size() || specialist.empty()) {
    throw DimMismatchError("qc_agreement frame sets");
  }
  long fp = 0, fn = 0;
  for (std::size_t i = 0; i < specialist.size(); ++i) {
    if (aggregated[i] && !specialist[i]) ++fp;
    if (!aggregated[i] && specialist[i]) ++fn;
  }
  const double n = static_cast<double>(specialist.size());
  AgreementRates out;
  out.fp_rate = fp / n;
  out.fn_rate = fn / n;
  out.disagree_rate = (fp + fn) / n;
  return out;
}

std::vector<ActionClip> build_single_action_clips(const data::VideoGt& gt) {
  std::vector<ActionClip> out;
  for (const auto& seg : gt.segments) {
    const int len = seg.end_frame - seg.start_frame;
    ActionClip c;
    c.start = std::max(0, seg.start_frame - len);
    c.end = std::min(gt.frame_count, seg.end_frame + len);
    c.action_start = seg.start_frame;
    c.action_end = seg.end_frame;
    out.push_back(c);
  }
  return out;
}

}  // namespace stground::bench
