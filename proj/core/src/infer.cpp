#include "stground/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stground::infer {

using num::Matrix;
using num::Vector;

void InferConfig::validate() const {
  if (theta_temporal < -1.0 || theta_temporal > 1.0) {
    throw BadParamsError("theta_temporal must be in [-1,1]");
  }
  if (tau_spatial < 0.0 || tau_spatial > 1.0) throw BadParamsError("tau_spatial must be in [0,1]");
}

namespace {

Vector project_unit(const Vector& v, const Matrix& w) {
  if (v.dim() != w.rows()) throw DimMismatchError("projection");
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t i = 0; i < v.dim(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += v[i] * w.at(i, j);
  }
  return num::l2_normalize(Vector(std::move(out)));
}

}  // namespace

std::vector<FrameLabel> temporal_classify(const data::ClipFeatures& video,
                                          const data::LabelBank& bank,
                                          const net::ModelParams& params,
                                          const InferConfig& cfg) {
  cfg.validate();
  if (bank.classes.empty()) throw BadParamsError("label bank is empty");
  std::vector<Vector> class_sent;
  for (const auto& c : bank.classes) class_sent.push_back(project_unit(c.sentence, params.W_g));

  std::vector<FrameLabel> out(video.frames);
  for (std::size_t u = 0; u < video.frames; ++u) {
    const Vector f = project_unit(video.frame_global[u], params.W_f);
    int best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < class_sent.size(); ++c) {
      const double s = num::dot(f, class_sent[c]);
      if (s > best_sim) {
        best_sim = s;
        best = static_cast<int>(c);
      }
    }
    out[u].best_similarity = best_sim;
    out[u].label = best_sim >= cfg.theta_temporal ? best : data::kBackground;
  }
  return out;
}

std::vector<LabelSegment> segments_from_labels(const std::vector<int>& labels) {
  std::vector<LabelSegment> out;
  int run_start = 0;
  for (std::size_t i = 0; i <= labels.size(); ++i) {
    if (i == labels.size() || (i > 0 && labels[i] != labels[i - 1])) {
      if (i > 0 && labels[run_start] != data::kBackground) {
        out.push_back({labels[run_start], run_start, static_cast<int>(i)});
      }
      run_start = static_cast<int>(i);
    }
  }
  return out;
}

Matrix upsample_bilinear(const std::vector<double>& cells, int grid_side, int w, int h) {
  Matrix out(h, w);
  for (int py = 0; py < h; ++py) {
    // map pixel centers onto cell-center coordinates, clamped at the border
    const double gy = std::clamp((py + 0.5) * grid_side / h - 0.5, 0.0,
                                 static_cast<double>(grid_side - 1));
    const int r0 = static_cast<int>(gy);
    const int r1 = std::min(r0 + 1, grid_side - 1);
    const double fy = gy - r0;
    for (int px = 0; px < w; ++px) {
      const double gx = std::clamp((px + 0.5) * grid_side / w - 0.5, 0.0,
                                   static_cast<double>(grid_side - 1));
      const int c0 = static_cast<int>(gx);
      const int c1 = std::min(c0 + 1, grid_side - 1);
      const double fx = gx - c0;
      const double top = cells[r0 * grid_side + c0] * (1 - fx) + cells[r0 * grid_side + c1] * fx;
      const double bot = cells[r1 * grid_side + c0] * (1 - fx) + cells[r1 * grid_side + c1] * fx;
      out.at(py, px) = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

data::SpatioTemporalPrediction st_ground(const data::ClipFeatures& video,
                                         const data::LabelBank& bank,
                                         const net::ModelParams& params,
                                         const net::AttentionConfig& attn_cfg,
                                         const InferConfig& cfg, double frame_width,
                                         double frame_height) {
  cfg.validate();
  const std::vector<FrameLabel> labels = temporal_classify(video, bank, params, cfg);
  const int grid_side =
      static_cast<int>(std::llround(std::sqrt(static_cast<double>(video.grid_cells))));

  // The spatial branch sees the whole action vocabulary; the query picks out
  // the predicted class's words, so attention mass on other classes' words
  // provides the contrast.
  data::ClipFeatures branch = video;
  branch.words.clear();
  std::vector<std::pair<int, int>> class_word_span;  // [begin, end) per class
  for (const auto& c : bank.classes) {
    const int begin = static_cast<int>(branch.words.size());
    for (std::size_t w = 0; w < c.words.size(); ++w) {
      branch.words.push_back({c.name + "_" + std::to_string(w), c.words[w]});
    }
    class_word_span.emplace_back(begin, static_cast<int>(branch.words.size()));
  }

  data::SpatioTemporalPrediction pred;
  pred.video_id = video.video_id;
  for (std::size_t u = 0; u < video.frames; ++u) {
    data::FramePrediction fp;
    fp.frame_index = static_cast<int>(u);
    fp.label = labels[u].label;
    fp.best_similarity = labels[u].best_similarity;
    fp.heatmap.assign(video.grid_cells, 0.0);
    fp.mask.assign(video.grid_cells, 0);
    if (fp.label != data::kBackground) {
      const net::LocalForwardOut fwd =
          net::local_forward(branch, {static_cast<int>(u)}, params, attn_cfg);
      std::vector<int> query;
      const auto [qb, qe] = class_word_span[fp.label];
      for (int k = qb; k < qe; ++k) query.push_back(k);
      const Matrix hm = net::rollout_heatmap(fwd.trace, query, attn_cfg.residual_weight, 1);
      for (std::size_t n = 0; n < video.grid_cells; ++n) {
        fp.heatmap[n] = hm.data()[n];
        fp.mask[n] = fp.heatmap[n] >= cfg.tau_spatial ? 1 : 0;
      }
      const Matrix up = upsample_bilinear(fp.heatmap, grid_side, static_cast<int>(frame_width),
                                          static_cast<int>(frame_height));
      int best_px = 0, best_py = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t py = 0; py < up.rows(); ++py) {
        for (std::size_t px = 0; px < up.cols(); ++px) {
          if (up.at(py, px) > best) {
            best = up.at(py, px);
            best_py = static_cast<int>(py);
            best_px = static_cast<int>(px);
          }
        }
      }
      fp.argmax_x = best_px + 0.5;
      fp.argmax_y = best_py + 0.5;
    }
    pred.frames.push_back(std::move(fp));
  }

  std::vector<int> raw_labels;
  for (const auto& l : labels) raw_labels.push_back(l.label);
  for (const LabelSegment& s : segments_from_labels(raw_labels)) {
    double sim = 0.0;
    for (int f = s.start; f < s.end; ++f) sim += labels[f].best_similarity;
    pred.segments.push_back({s.class_id, s.start, s.end, sim / (s.end - s.start)});
  }
  return pred;
}

Matrix transcript_similarity(const data::ClipFeatures& video, const data::LabelBank& bank,
                             const std::vector<int>& transcript, const net::ModelParams& params,
                             const InferConfig& cfg) {
  if (transcript.empty()) throw BadParamsError("transcript is empty");
  std::vector<Vector> class_sent;
  for (const auto& c : bank.classes) class_sent.push_back(project_unit(c.sentence, params.W_g));
  Matrix sim(video.frames, transcript.size());
  for (std::size_t u = 0; u < video.frames; ++u) {
    const Vector f = project_unit(video.frame_global[u], params.W_f);
    for (std::size_t s = 0; s < transcript.size(); ++s) {
      sim.at(u, s) = transcript[s] == data::kBackground
                         ? cfg.background_score
                         : num::dot(f, class_sent.at(transcript[s]));
    }
  }
  return sim;
}

std::vector<int> align_transcript(const num::Matrix& sim) {
  const std::size_t frames = sim.rows();
  const std::size_t slots = sim.cols();
  if (slots == 0) throw BadParamsError("alignment needs >= 1 slot");
  if (frames < slots) throw InfeasibleAlignmentError("fewer frames than slots");

  // Matrix validates finiteness, so unreachable states carry a huge finite
  // sentinel instead of -inf; it stays dominated by every reachable path.
  constexpr double kUnreachable = std::numeric_limits<double>::lowest() / 4;
  Matrix dp(frames, slots, kUnreachable);
  // stay[i][j]: best predecessor keeps the same slot (pushes transitions early)
  std::vector<std::vector<std::uint8_t>> stay(frames, std::vector<std::uint8_t>(slots, 0));
  dp.at(0, 0) = sim.at(0, 0);
  for (std::size_t i = 1; i < frames; ++i) {
    for (std::size_t j = 0; j < slots && j <= i; ++j) {
      const double from_stay = dp.at(i - 1, j);
      const double from_adv = j > 0 ? dp.at(i - 1, j - 1) : kUnreachable;
      if (from_stay >= from_adv) {
        dp.at(i, j) = from_stay + sim.at(i, j);
        stay[i][j] = 1;
      } else {
        dp.at(i, j) = from_adv + sim.at(i, j);
      }
    }
  }
  std::vector<int> assign(frames);
  std::size_t j = slots - 1;
  for (std::size_t i = frames; i-- > 0;) {
    assign[i] = static_cast<int>(j);
    if (i > 0 && !stay[i][j]) --j;
  }
  return assign;
}

}  // namespace stground::infer
