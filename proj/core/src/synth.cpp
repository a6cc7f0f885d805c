#include "stground/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace stground::data {

using num::Rng;
using num::Vector;

namespace {

Vector random_unit(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  for (auto& x : v) x = rng.normal();
  return num::l2_normalize(Vector(std::move(v)));
}

Vector noisy(const Vector& proto, double scale, double sigma, Rng& rng) {
  std::vector<double> v(proto.dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * proto[i] + sigma * rng.normal();
  return num::l2_normalize(Vector(std::move(v)));
}

// visibility * (prototype + clip latent) plus noise.
Vector noisy_latent(const Vector& proto, const Vector& latent, double scale, double visibility,
                    double sigma, Rng& rng) {
  std::vector<double> v(proto.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = visibility * (scale * proto[i] + latent[i]) + sigma * rng.normal();
  }
  return num::l2_normalize(Vector(std::move(v)));
}

Vector pure_noise(std::size_t d, double sigma, Rng& rng) {
  // sigma only shifts the magnitude before normalization; keep the draw count
  // identical across sigma values so streams stay comparable.
  std::vector<double> v(d);
  for (auto& x : v) x = (sigma > 0 ? sigma : 1.0) * rng.normal();
  return num::l2_normalize(Vector(std::move(v)));
}

std::vector<int> pick_distinct(int count, int limit, Rng& rng) {
  std::vector<int> all(limit);
  std::iota(all.begin(), all.end(), 0);
  rng.shuffle(all);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

struct Block {
  int r0, c0, rows, cols;  // grid cells
};

Block pick_block(int grid_side, int cell_count, Rng& rng) {
  int rows = static_cast<int>(std::sqrt(static_cast<double>(cell_count)));
  while (rows > 1 && cell_count % rows != 0) --rows;
  int cols = cell_count / rows;
  rows = std::min(rows, grid_side);
  cols = std::min(cols, grid_side);
  Block b;
  b.rows = rows;
  b.cols = cols;
  b.r0 = static_cast<int>(rng.below(grid_side - rows + 1));
  b.c0 = static_cast<int>(rng.below(grid_side - cols + 1));
  return b;
}

std::vector<int> block_cells(const Block& b, int grid_side) {
  std::vector<int> cells;
  for (int r = b.r0; r < b.r0 + b.rows; ++r) {
    for (int c = b.c0; c < b.c0 + b.cols; ++c) cells.push_back(r * grid_side + c);
  }
  return cells;
}

PixelBox block_box(const Block& b, int grid_side, double w, double h) {
  const double cw = w / grid_side;
  const double ch = h / grid_side;
  return {b.c0 * cw, b.r0 * ch, (b.c0 + b.cols) * cw, (b.r0 + b.rows) * ch};
}

}  // namespace

void SynthConfig::validate() const {
  if (classes < 1 || videos < 0 || frames_per_video < 1 || train_clips < 0 ||
      candidate_frames < 1 || planted_frames < 1 || grid_cells < 1 || dim < 1 ||
      words_per_clip < 1 || planted_cells < 1) {
    throw BadParamsError("synth config counts must be positive");
  }
  if (planted_frames > candidate_frames) throw BadParamsError("planted_frames > U");
  if (signal <= 0) throw BadParamsError("signal must be positive");
  if (noise_sigma < 0) throw BadParamsError("noise sigma must be non-negative");
  if (latent_span_frac < 0 || latent_span_frac > 1) {
    throw BadParamsError("latent_span_frac must be in [0, 1]");
  }
  if (visibility_min <= 0 || visibility_min > 1) {
    throw BadParamsError("visibility_min must be in (0, 1]");
  }
  const int side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(grid_cells))));
  if (side * side != grid_cells) throw BadParamsError("grid_cells must be a perfect square");
  if (planted_cells > grid_cells) throw BadParamsError("planted_cells > N");
}

SynthDataset synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int grid_side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(cfg.grid_cells))));
  SynthDataset out;

  std::vector<Vector> protos;
  for (int c = 0; c < cfg.classes; ++c) protos.push_back(random_unit(cfg.dim, rng));

  for (int c = 0; c < cfg.classes; ++c) {
    LabelClass lc;
    lc.class_id = c;
    lc.name = "action_" + std::to_string(c);
    lc.words = {protos[c]};
    lc.sentence = protos[c];
    out.bank.classes.push_back(std::move(lc));
  }
  quantize_f32(out.bank);

  for (int i = 0; i < cfg.train_clips; ++i) {
    const int c = i % cfg.classes;
    ClipFeatures cf;
    cf.video_id = "train";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "clip_%04d", i);
    cf.clip_id = buf;
    cf.d = cfg.dim;
    cf.frames = cfg.candidate_frames;
    cf.grid_cells = cfg.grid_cells;
    cf.fps = 1.0;
    cf.start_s = 0.0;

    PlantedClipInfo info;
    info.class_id = c;
    info.planted_frames = pick_distinct(cfg.planted_frames, cfg.candidate_frames, rng);

    Vector latent(cfg.dim, 0.0);
    if (cfg.latent_scale > 0) {
      const Vector dir = random_unit(cfg.dim, rng);
      Vector mixed(cfg.dim, 0.0);
      if (cfg.latent_span_frac > 0) {
        std::vector<double> span(cfg.dim, 0.0);
        for (const auto& proto : protos) {
          const double g = rng.normal();
          for (int j = 0; j < cfg.dim; ++j) span[j] += g * proto[j];
        }
        const Vector span_dir = num::l2_normalize(Vector(std::move(span)));
        const double f = cfg.latent_span_frac;
        const double o = std::sqrt(std::max(0.0, 1.0 - f * f));
        for (int j = 0; j < cfg.dim; ++j) mixed[j] = f * span_dir[j] + o * dir[j];
        mixed = num::l2_normalize(mixed);
      } else {
        mixed = dir;
      }
      for (std::size_t i = 0; i < latent.dim(); ++i) latent[i] = cfg.latent_scale * mixed[i];
    }

    for (int u = 0; u < cfg.candidate_frames; ++u) {
      const bool planted = std::binary_search(info.planted_frames.begin(),
                                              info.planted_frames.end(), u);
      std::vector<int> cells;
      if (planted) {
        const Block blk = pick_block(grid_side, cfg.planted_cells, rng);
        cells = block_cells(blk, grid_side);
        info.planted_cells[u] = cells;
        info.boxes[u] = block_box(blk, grid_side, cfg.frame_width, cfg.frame_height);
        const double vis = rng.uniform(cfg.visibility_min, 1.0);
        cf.frame_global.push_back(
            noisy_latent(protos[c], latent, cfg.signal, vis, cfg.noise_sigma, rng));
      } else {
        cf.frame_global.push_back(pure_noise(cfg.dim, cfg.noise_sigma, rng));
      }
      for (int n = 0; n < cfg.grid_cells; ++n) {
        const bool hot = planted && std::find(cells.begin(), cells.end(), n) != cells.end();
        cf.grid.push_back(hot ? noisy_latent(protos[c], latent, cfg.signal, 1.0, cfg.noise_sigma, rng)
                              : pure_noise(cfg.dim, cfg.noise_sigma, rng));
      }
    }
    for (int k = 0; k < cfg.words_per_clip; ++k) {
      cf.words.push_back({"word_" + std::to_string(k),
                          noisy_latent(protos[c], latent, cfg.signal, 1.0, cfg.noise_sigma, rng)});
    }
    const double ss = cfg.sentence_sigma < 0 ? cfg.noise_sigma : cfg.sentence_sigma;
    cf.sentence = noisy_latent(protos[c], latent, cfg.signal, 1.0, ss, rng);
    quantize_f32(cf);
    cf.validate();
    out.clips.push_back(std::move(cf));
    out.clip_info.push_back(std::move(info));
  }

  for (int v = 0; v < cfg.videos; ++v) {
    ClipFeatures cf;
    cf.video_id = "video_" + std::to_string(v);
    cf.clip_id = cf.video_id;
    cf.d = cfg.dim;
    cf.frames = cfg.frames_per_video;
    cf.grid_cells = cfg.grid_cells;
    cf.fps = 1.0;
    cf.start_s = 0.0;

    VideoGt gt;
    gt.video_id = cf.video_id;
    gt.width = cfg.frame_width;
    gt.height = cfg.frame_height;
    gt.frame_count = cfg.frames_per_video;

    // Alternate background runs and action segments until the video is full.
    int frame = 0;
    bool background = true;
    while (frame < cfg.frames_per_video) {
      const int len = std::min<int>(4 + static_cast<int>(rng.below(5)),
                                    cfg.frames_per_video - frame);
      if (background) {
        gt.ordered_transcript.push_back(kBackground);
        for (int f = 0; f < len; ++f) {
          cf.frame_global.push_back(pure_noise(cfg.dim, cfg.noise_sigma, rng));
          for (int n = 0; n < cfg.grid_cells; ++n) {
            cf.grid.push_back(pure_noise(cfg.dim, cfg.noise_sigma, rng));
          }
        }
      } else {
        const int c = static_cast<int>(rng.below(cfg.classes));
        gt.ordered_transcript.push_back(c);
        GtSegment seg;
        seg.class_id = c;
        seg.start_frame = frame;
        seg.end_frame = frame + len;
        const Block blk = pick_block(grid_side, cfg.planted_cells, rng);
        const auto cells = block_cells(blk, grid_side);
        for (int f = 0; f < len; ++f) {
          seg.boxes.push_back(block_box(blk, grid_side, cfg.frame_width, cfg.frame_height));
          cf.frame_global.push_back(noisy(protos[c], cfg.signal, cfg.noise_sigma, rng));
          for (int n = 0; n < cfg.grid_cells; ++n) {
            const bool hot = std::find(cells.begin(), cells.end(), n) != cells.end();
            cf.grid.push_back(hot ? noisy(protos[c], cfg.signal, cfg.noise_sigma, rng)
                                  : pure_noise(cfg.dim, cfg.noise_sigma, rng));
          }
        }
        gt.segments.push_back(std::move(seg));
      }
      frame += len;
      background = !background;
    }

    cf.words.push_back({"none", pure_noise(cfg.dim, cfg.noise_sigma, rng)});
    cf.sentence = pure_noise(cfg.dim, cfg.noise_sigma, rng);
    quantize_f32(cf);
    cf.validate();
    gt.validate();
    out.videos.push_back(std::move(cf));
    out.gts.push_back(std::move(gt));
  }

  return out;
}

}  // namespace stground::data
