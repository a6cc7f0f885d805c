// stg: command-line front end for the grounding toolkit. Every subcommand is
// deterministic given --seed and echoes its full configuration next to its
// outputs.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stground/annot.hpp"
#include "stground/errors.hpp"
#include "stground/infer.hpp"
#include "stground/io.hpp"
#include "stground/metrics.hpp"
#include "stground/model.hpp"
#include "stground/sinkhorn.hpp"
#include "stground/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stground;

namespace {

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("STGROUND_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

// Runs fn(i) for i in [0, n) on `threads` workers; results are indexed, so
// the caller's merge order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

void write_run_config(const json& cfg, const fs::path& dir) {
  write_json_file(cfg, dir / "run_config.json");
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<data::ClipFeatures> load_clip_dir(const fs::path& dir) {
  std::vector<data::ClipFeatures> out;
  for (const auto& p : sorted_files(dir)) out.push_back(data::load_clip_features(p));
  return out;
}

ot::SelectionStrategy parse_strategy(const std::string& s) {
  if (s == "none") return ot::SelectionStrategy::None;
  if (s == "global") return ot::SelectionStrategy::Global;
  if (s == "local") return ot::SelectionStrategy::Local;
  if (s == "sinkhorn") return ot::SelectionStrategy::Sinkhorn;
  throw BadParamsError("unknown strategy: " + s);
}

net::AttentionConfig parse_stack(const std::string& s, double residual_weight) {
  net::AttentionConfig cfg;
  cfg.residual_weight = residual_weight;
  cfg.stack.clear();
  for (char c : s) {
    if (c == 'c') {
      cfg.stack.push_back(net::AttentionLayerKind::Cross);
    } else if (c == 's') {
      cfg.stack.push_back(net::AttentionLayerKind::Self);
    } else {
      throw BadParamsError(std::string("stack letters must be c or s, got '") + c + "'");
    }
  }
  cfg.validate();
  return cfg;
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const data::SynthConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const data::SynthDataset ds = data::synth_generate(cfg);
  fs::create_directories(out_dir / "clips");
  fs::create_directories(out_dir / "videos");

  char name[64];
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    std::snprintf(name, sizeof(name), "clip_%04zu.json", i);
    data::save_clip_features(ds.clips[i], out_dir / "clips" / name);
  }
  for (std::size_t i = 0; i < ds.videos.size(); ++i) {
    std::snprintf(name, sizeof(name), "video_%04zu.json", i);
    data::save_clip_features(ds.videos[i], out_dir / "videos" / name);
  }
  data::save_label_bank(ds.bank, out_dir / "bank.json");
  data::save_video_gts(ds.gts, out_dir / "gt.jsonl");

  std::ofstream planted(out_dir / "planted.jsonl");
  for (std::size_t i = 0; i < ds.clip_info.size(); ++i) {
    const auto& info = ds.clip_info[i];
    json rec = {{"clip_id", ds.clips[i].clip_id},
                {"class_id", info.class_id},
                {"planted_frames", info.planted_frames}};
    json cells = json::object();
    for (const auto& [frame, cs] : info.planted_cells) cells[std::to_string(frame)] = cs;
    rec["planted_cells"] = cells;
    planted << rec.dump() << "\n";
  }

  write_run_config(json{{"subcommand", "synth"},
                        {"classes", cfg.classes},
                        {"videos", cfg.videos},
                        {"frames_per_video", cfg.frames_per_video},
                        {"train_clips", cfg.train_clips},
                        {"candidate_frames", cfg.candidate_frames},
                        {"planted_frames", cfg.planted_frames},
                        {"grid_cells", cfg.grid_cells},
                        {"dim", cfg.dim},
                        {"words_per_clip", cfg.words_per_clip},
                        {"signal", cfg.signal},
                        {"noise_sigma", cfg.noise_sigma},
                        {"latent_scale", cfg.latent_scale},
                        {"latent_span_frac", cfg.latent_span_frac},
                        {"visibility_min", cfg.visibility_min},
                        {"sentence_sigma", cfg.sentence_sigma},
                        {"planted_cells", cfg.planted_cells},
                        {"frame_width", cfg.frame_width},
                        {"frame_height", cfg.frame_height},
                        {"seed", cfg.seed}},
                   out_dir);
  return 0;
}

// ---- select ---------------------------------------------------------------

int cmd_select(const fs::path& data_dir, const std::string& params_path,
               const std::string& strategy, int t_frames, const ot::SinkhornConfig& ot_cfg,
               std::uint64_t seed, int d_prime, const fs::path& out_path, int threads) {
  ot_cfg.validate();
  const auto clips = load_clip_dir(data_dir / "clips");
  if (clips.empty()) throw NoSamplesError("no clips under " + (data_dir / "clips").string());

  net::ModelParams params;
  if (!params_path.empty()) {
    params = data::load_model_params(params_path);
  } else {
    num::Rng rng(seed);
    params = net::ModelParams::random_init(clips[0].d, d_prime, rng);
  }

  const ot::SelectionStrategy strat = parse_strategy(strategy);
  std::vector<std::vector<int>> selections(clips.size());
  parallel_for(clips.size(), threads, [&](std::size_t i) {
    selections[i] = ot::select_frames(clips[i], strat, t_frames, params, ot_cfg);
  });

  std::ofstream out(out_path);
  if (!out) throw Error("cannot open for writing: " + out_path.string());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    out << json{{"clip_id", clips[i].clip_id}, {"frames", selections[i]}}.dump() << "\n";
  }
  write_run_config(json{{"subcommand", "select"},
                        {"strategy", strategy},
                        {"t_frames", t_frames},
                        {"epsilon", ot_cfg.epsilon},
                        {"max_iters", ot_cfg.max_iters},
                        {"tol", ot_cfg.tol},
                        {"seed", seed},
                        {"params", params_path},
                        {"threads", threads}},
                   out_path.parent_path().empty() ? "." : out_path.parent_path());
  return 0;
}

// ---- train ----------------------------------------------------------------

int cmd_train(const fs::path& data_dir, const fs::path& out_dir, net::TrainConfig train_cfg,
              const std::string& strategy, int t_frames, const ot::SinkhornConfig& ot_cfg,
              const std::string& stack, double residual_weight, int d_prime) {
  train_cfg.validate();
  ot_cfg.validate();
  const net::AttentionConfig attn_cfg = parse_stack(stack, residual_weight);
  const auto clips = load_clip_dir(data_dir / "clips");
  if (clips.empty()) throw NoSamplesError("no clips under " + (data_dir / "clips").string());

  num::Rng init_rng(train_cfg.seed);
  net::ModelParams init = net::ModelParams::random_init(clips[0].d, d_prime, init_rng);
  const net::TrainResult result =
      net::train(clips, std::move(init), train_cfg, attn_cfg, parse_strategy(strategy), t_frames,
                 ot_cfg);

  fs::create_directories(out_dir);
  data::save_model_params(result.params, out_dir / "params.json");
  std::ofstream log(out_dir / "train_log.jsonl");
  for (const auto& e : result.log) {
    log << json{{"epoch", e.epoch},
                {"loss_total", e.loss_total},
                {"loss_global", e.loss_global},
                {"loss_local", e.loss_local}}
               .dump()
        << "\n";
  }
  write_run_config(json{{"subcommand", "train"},
                        {"batch_size", train_cfg.batch_size},
                        {"margin", train_cfg.margin},
                        {"learning_rate", train_cfg.learning_rate},
                        {"epochs", train_cfg.epochs},
                        {"use_global", train_cfg.use_global},
                        {"use_local", train_cfg.use_local},
                        {"optimizer",
                         train_cfg.optimizer == net::Optimizer::Sgd ? "sgd" : "adaptive-moments"},
                        {"seed", train_cfg.seed},
                        {"reselect_every_epoch", train_cfg.reselect_every_epoch},
                        {"strategy", strategy},
                        {"t_frames", t_frames},
                        {"stack", stack},
                        {"residual_weight", residual_weight},
                        {"d_prime", d_prime},
                        {"epsilon", ot_cfg.epsilon}},
                   out_dir);
  return 0;
}

// ---- infer ----------------------------------------------------------------

int cmd_infer(const fs::path& data_dir, const fs::path& params_path, const fs::path& out_path,
              const infer::InferConfig& inf_cfg, const std::string& stack, double residual_weight,
              int threads) {
  inf_cfg.validate();
  const net::AttentionConfig attn_cfg = parse_stack(stack, residual_weight);
  const net::ModelParams params = data::load_model_params(params_path);
  const data::LabelBank bank = data::load_label_bank(data_dir / "bank.json");
  const auto videos = load_clip_dir(data_dir / "videos");
  const auto gts = data::load_video_gts(data_dir / "gt.jsonl");

  std::map<std::string, std::pair<double, double>> geometry;
  for (const auto& g : gts) geometry[g.video_id] = {g.width, g.height};

  std::vector<data::SpatioTemporalPrediction> preds(videos.size());
  parallel_for(videos.size(), threads, [&](std::size_t i) {
    const auto it = geometry.find(videos[i].video_id);
    if (it == geometry.end()) throw Error("no ground truth geometry for " + videos[i].video_id);
    preds[i] = infer::st_ground(videos[i], bank, params, attn_cfg, inf_cfg, it->second.first,
                                it->second.second);
  });

  data::save_predictions(preds, out_path);
  write_run_config(json{{"subcommand", "infer"},
                        {"theta_temporal", inf_cfg.theta_temporal},
                        {"tau_spatial", inf_cfg.tau_spatial},
                        {"stack", stack},
                        {"residual_weight", residual_weight},
                        {"params", params_path.string()},
                        {"threads", threads}},
                   out_path.parent_path().empty() ? "." : out_path.parent_path());
  return 0;
}

// ---- eval -----------------------------------------------------------------

struct GtFrameBox {
  int class_id;
  data::PixelBox box;
};

int cmd_eval(const fs::path& pred_path, const fs::path& gt_path, const std::string& metric,
             double iou_thr, std::vector<double> vmap_thrs, const std::string& dataset,
             const fs::path& out_path) {
  const auto preds = data::load_predictions(pred_path);
  const auto gts = data::load_video_gts(gt_path);

  std::map<std::string, const data::VideoGt*> gt_by_id;
  for (const auto& g : gts) gt_by_id[g.video_id] = &g;

  // per (video, frame) ground-truth class and box
  std::map<std::string, std::map<int, GtFrameBox>> gt_frames;
  for (const auto& g : gts) {
    for (const auto& seg : g.segments) {
      for (int f = seg.start_frame; f < seg.end_frame; ++f) {
        gt_frames[g.video_id][f] = {seg.class_id, seg.boxes.at(f - seg.start_frame)};
      }
    }
  }

  json values = json::object();
  json per_class = json::object();
  const bool all = metric == "all";

  if (all || metric == "pg") {
    std::vector<metrics::PointSample> samples;
    for (const auto& p : preds) {
      const auto vit = gt_frames.find(p.video_id);
      if (vit == gt_frames.end()) continue;
      for (const auto& f : p.frames) {
        const auto fit = vit->second.find(f.frame_index);
        if (fit == vit->second.end()) continue;
        samples.push_back({f.argmax_x, f.argmax_y, fit->second.box});
      }
    }
    long hits = 0, misses = 0;
    values["pointing_game"] = metrics::pointing_game(samples, &hits, &misses);
    values["pointing_hits"] = hits;
    values["pointing_misses"] = misses;
  }

  if (all || metric == "smap") {
    std::vector<metrics::SpatialDet> dets;
    std::vector<metrics::SpatialGt> sgts;
    for (const auto& p : preds) {
      for (const auto& f : p.frames) {
        if (f.label == data::kBackground) continue;
        metrics::SpatialDet d;
        d.video_id = p.video_id;
        d.frame = f.frame_index;
        d.class_id = f.label;
        d.confidence = f.best_similarity;
        d.mask = f.mask;
        d.grid_side = static_cast<int>(std::llround(std::sqrt(double(f.mask.size()))));
        dets.push_back(std::move(d));
      }
    }
    for (const auto& g : gts) {
      for (const auto& seg : g.segments) {
        for (int f = seg.start_frame; f < seg.end_frame; ++f) {
          sgts.push_back({g.video_id, f, seg.class_id, seg.boxes.at(f - seg.start_frame), g.width,
                          g.height});
        }
      }
    }
    std::map<int, double> pc;
    values["spatial_map"] = metrics::spatial_map(dets, sgts, iou_thr, &pc);
    for (const auto& [c, v] : pc) per_class["smap_" + std::to_string(c)] = v;
  }

  if (all || metric == "vmap") {
    std::vector<metrics::TubeDet> tdets;
    std::vector<metrics::TubeGt> tgts;
    for (const auto& p : preds) {
      for (const auto& seg : p.segments) {
        metrics::TubeDet d;
        d.video_id = p.video_id;
        d.class_id = seg.class_id;
        d.confidence = seg.confidence;
        d.start_frame = seg.start_frame;
        for (int f = seg.start_frame; f < seg.end_frame; ++f) {
          d.masks.push_back(p.frames.at(f).mask);
        }
        tdets.push_back(std::move(d));
      }
    }
    for (const auto& g : gts) {
      for (const auto& seg : g.segments) {
        metrics::TubeGt t;
        t.video_id = g.video_id;
        t.class_id = seg.class_id;
        t.start_frame = seg.start_frame;
        int side = 0;
        for (const auto& p : preds) {
          if (p.video_id == g.video_id && !p.frames.empty()) {
            side = static_cast<int>(std::llround(std::sqrt(double(p.frames[0].mask.size()))));
          }
        }
        if (side == 0) throw Error("no prediction grid for video " + g.video_id);
        for (int f = seg.start_frame; f < seg.end_frame; ++f) {
          t.masks.push_back(metrics::rasterize_box(seg.boxes.at(f - seg.start_frame), side,
                                                   g.width, g.height));
        }
        tgts.push_back(std::move(t));
      }
    }
    const std::vector<double> vmap = metrics::video_map(tdets, tgts, vmap_thrs);
    for (std::size_t i = 0; i < vmap_thrs.size(); ++i) {
      char key[48];
      std::snprintf(key, sizeof(key), "video_map@%.2f", vmap_thrs[i]);
      values[key] = vmap[i];
    }
  }

  if (all || metric == "iou-pg") {
    std::vector<metrics::CombinedFrame> frames;
    for (const auto& p : preds) {
      const auto vit = gt_frames.find(p.video_id);
      for (const auto& f : p.frames) {
        metrics::CombinedFrame cf;
        cf.predicted_label = f.label;
        cf.point_x = f.argmax_x;
        cf.point_y = f.argmax_y;
        if (vit != gt_frames.end()) {
          const auto fit = vit->second.find(f.frame_index);
          if (fit != vit->second.end()) {
            cf.gt_label = fit->second.class_id;
            cf.gt_box = fit->second.box;
          }
        }
        frames.push_back(cf);
      }
    }
    std::map<int, double> pc;
    values["iou_pointing_game"] = metrics::iou_pointing_game(frames, &pc);
    for (const auto& [c, v] : pc) per_class["iou_pg_" + std::to_string(c)] = v;
  }

  if (all || metric == "temporal") {
    std::vector<metrics::Interval> pred_iv, gt_iv;
    for (const auto& p : preds) {
      for (const auto& s : p.segments) pred_iv.push_back({s.class_id, s.start_frame, s.end_frame});
    }
    for (const auto& g : gts) {
      for (const auto& s : g.segments) gt_iv.push_back({s.class_id, s.start_frame, s.end_frame});
    }
    const metrics::TemporalScores ts = metrics::iod_jaccard(pred_iv, gt_iv);
    values["mean_iod"] = ts.mean_iod;
    values["mean_jaccard"] = ts.mean_jaccard;
  }

  const json report = {{"dataset", dataset},
                       {"values", values},
                       {"per_class", per_class},
                       {"config",
                        {{"metric", metric},
                         {"iou_thr", iou_thr},
                         {"vmap_thrs", vmap_thrs},
                         {"pred", pred_path.string()},
                         {"gt", gt_path.string()}}}};
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json_file(report, out_path);
  }
  return 0;
}

// ---- annot ----------------------------------------------------------------

bench::KeypointRecord parse_keypoint_line(const std::string& line, const std::string& file,
                                          long lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(file + ":" + std::to_string(lineno) + ": " + e.what());
  }
  bench::KeypointRecord rec;
  try {
    rec.video_id = j.at("video_id").get<std::string>();
    rec.frame_index = j.at("frame_index").get<int>();
    rec.class_id = j.at("class_id").get<int>();
    rec.frame_width = j.at("frame_width").get<double>();
    rec.frame_height = j.at("frame_height").get<double>();
    for (const auto& a : j.at("annotators")) {
      bench::AnnotatorEntry e;
      const std::string flag = a.at("flag").get<std::string>();
      if (flag == "point") {
        e.flag = bench::AnnotatorFlag::Point;
        e.x = a.at("x").get<double>();
        e.y = a.at("y").get<double>();
      } else if (flag == "cant_solve") {
        e.flag = bench::AnnotatorFlag::CantSolve;
      } else if (flag == "corrupt") {
        e.flag = bench::AnnotatorFlag::Corrupt;
      } else {
        throw SchemaError("unknown annotator flag: " + flag);
      }
      rec.annotators.push_back(e);
    }
  } catch (const json::exception& e) {
    throw SchemaError(file + ":" + std::to_string(lineno) + ": " + e.what());
  }
  return rec;
}

std::vector<bench::KeypointRecord> load_keypoints(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<bench::KeypointRecord> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.push_back(parse_keypoint_line(line, path.string(), lineno));
  }
  return out;
}

int cmd_annot_aggregate(const fs::path& in_path, const fs::path& out_path,
                        const bench::BenchConfig& cfg) {
  const auto recs = load_keypoints(in_path);
  std::ofstream out(out_path);
  if (!out) throw Error("cannot open for writing: " + out_path.string());
  for (const auto& rec : recs) {
    const bench::FrameAggregate agg = bench::aggregate_frame(rec, cfg);
    json pts = json::array();
    for (const auto& p : agg.points) pts.push_back({{"x", p.x}, {"y", p.y}});
    json j = {{"video_id", rec.video_id},
              {"frame_index", rec.frame_index},
              {"class_id", rec.class_id},
              {"frame_width", rec.frame_width},
              {"frame_height", rec.frame_height},
              {"present", agg.present},
              {"points", pts}};
    if (agg.present) j["centroid"] = {{"x", agg.centroid.x}, {"y", agg.centroid.y}};
    out << j.dump() << "\n";
  }
  return 0;
}

int cmd_annot_bbox(const fs::path& in_path, const fs::path& out_path,
                   const bench::BenchConfig& cfg) {
  const auto recs = load_keypoints(in_path);
  std::ofstream out(out_path);
  if (!out) throw Error("cannot open for writing: " + out_path.string());
  for (const auto& rec : recs) {
    const bench::FrameAggregate agg = bench::aggregate_frame(rec, cfg);
    if (!agg.present) continue;
    const data::PixelBox box =
        bench::points_to_bbox(agg.points, rec.frame_width, rec.frame_height, cfg);
    out << json{{"video_id", rec.video_id},
                {"frame_index", rec.frame_index},
                {"class_id", rec.class_id},
                {"box", {box.x0, box.y0, box.x1, box.y1}}}
               .dump()
        << "\n";
  }
  return 0;
}

int cmd_annot_widespread(const fs::path& in_path, const bench::BenchConfig& cfg,
                         const fs::path& out_path) {
  std::ifstream in(in_path);
  if (!in) throw Error("cannot open: " + in_path.string());
  std::vector<data::PixelBox> boxes;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto& b = j.at("box");
      boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                       b.at(3).get<double>()});
    } catch (const json::exception& e) {
      throw ParseError(in_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  const double frac = bench::widespread_fraction(boxes, cfg);
  const json j = {{"widespread_fraction", frac},
                  {"area_threshold", cfg.widespread_area},
                  {"boxes", boxes.size()}};
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(j, out_path);
  }
  return 0;
}

int cmd_annot_clips(const fs::path& gt_path, const fs::path& out_path) {
  const auto gts = data::load_video_gts(gt_path);
  std::ofstream out(out_path);
  if (!out) throw Error("cannot open for writing: " + out_path.string());
  for (const auto& g : gts) {
    for (const auto& c : bench::build_single_action_clips(g)) {
      out << json{{"video_id", g.video_id},
                  {"start", c.start},
                  {"end", c.end},
                  {"action_start", c.action_start},
                  {"action_end", c.action_end}}
                 .dump()
          << "\n";
    }
  }
  return 0;
}

// ---- report ---------------------------------------------------------------

int cmd_report(const std::vector<std::string>& inputs, const fs::path& out_path) {
  json rows = json::array();
  for (const auto& in : inputs) {
    std::ifstream f(in);
    if (!f) throw Error("cannot open: " + in);
    json rep;
    try {
      f >> rep;
    } catch (const json::exception& e) {
      throw ParseError(in + ": " + e.what());
    }
    const std::string dataset = rep.value("dataset", in);
    for (const auto& [metric, value] : rep.at("values").items()) {
      rows.push_back({{"dataset", dataset}, {"metric", metric}, {"value", value}});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const json& a, const json& b) {
    return std::tie(a.at("dataset").get_ref<const std::string&>(),
                    a.at("metric").get_ref<const std::string&>()) <
           std::tie(b.at("dataset").get_ref<const std::string&>(),
                    b.at("metric").get_ref<const std::string&>());
  });
  const json table = {{"rows", rows}};
  if (out_path.empty()) {
    std::cout << table.dump(2) << "\n";
  } else {
    write_json_file(table, out_path);
  }
  for (const auto& r : rows) {
    std::cout << r.at("dataset").get<std::string>() << "  " << r.at("metric").get<std::string>()
              << "  " << r.at("value").dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grounding toolkit"};
  app.require_subcommand(1);

  // synth
  data::SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--classes", synth_cfg.classes);
  synth->add_option("--videos", synth_cfg.videos);
  synth->add_option("--frames-per-video", synth_cfg.frames_per_video);
  synth->add_option("--train-clips", synth_cfg.train_clips);
  synth->add_option("--candidate-frames", synth_cfg.candidate_frames);
  synth->add_option("--planted-frames", synth_cfg.planted_frames);
  synth->add_option("--grid-cells", synth_cfg.grid_cells);
  synth->add_option("--dim", synth_cfg.dim);
  synth->add_option("--words-per-clip", synth_cfg.words_per_clip);
  synth->add_option("--signal", synth_cfg.signal);
  synth->add_option("--noise-sigma", synth_cfg.noise_sigma);
  synth->add_option("--latent-scale", synth_cfg.latent_scale);
  synth->add_option("--latent-span-frac", synth_cfg.latent_span_frac);
  synth->add_option("--visibility-min", synth_cfg.visibility_min);
  synth->add_option("--sentence-sigma", synth_cfg.sentence_sigma);
  synth->add_option("--planted-cells", synth_cfg.planted_cells);
  synth->add_option("--frame-width", synth_cfg.frame_width);
  synth->add_option("--frame-height", synth_cfg.frame_height);
  synth->add_option("--seed", synth_cfg.seed);

  // select
  std::string sel_data, sel_params, sel_strategy = "sinkhorn", sel_out;
  int sel_t = 8, sel_threads = 0, sel_dprime = 64;
  std::uint64_t sel_seed = 0;
  ot::SinkhornConfig sel_ot;
  auto* select = app.add_subcommand("select", "score and select frames per clip");
  select->add_option("--data", sel_data, "dataset directory")->required();
  select->add_option("--params", sel_params, "trained params.json (random init if omitted)");
  select->add_option("--strategy", sel_strategy, "none|global|local|sinkhorn");
  select->add_option("-T,--t-frames", sel_t);
  select->add_option("--epsilon", sel_ot.epsilon);
  select->add_option("--max-iters", sel_ot.max_iters);
  select->add_option("--tol", sel_ot.tol);
  select->add_option("--seed", sel_seed);
  select->add_option("--d-prime", sel_dprime);
  select->add_option("-o,--out", sel_out, "output jsonl")->required();
  select->add_option("--threads", sel_threads);

  // train
  std::string tr_data, tr_out, tr_strategy = "sinkhorn", tr_stack = "csc", tr_opt = "adaptive-moments";
  int tr_t = 8, tr_dprime = 64;
  double tr_residual = 0.5;
  net::TrainConfig tr_cfg;
  ot::SinkhornConfig tr_ot;
  auto* train = app.add_subcommand("train", "train the four projections");
  train->add_option("--data", tr_data, "dataset directory")->required();
  train->add_option("-o,--out", tr_out, "output directory")->required();
  train->add_option("--batch-size", tr_cfg.batch_size);
  train->add_option("--margin", tr_cfg.margin);
  train->add_option("--lr", tr_cfg.learning_rate);
  train->add_option("--epochs", tr_cfg.epochs);
  train->add_option("--use-global", tr_cfg.use_global);
  train->add_option("--use-local", tr_cfg.use_local);
  train->add_option("--optimizer", tr_opt, "sgd|adaptive-moments");
  train->add_option("--seed", tr_cfg.seed);
  train->add_option("--reselect-every-epoch", tr_cfg.reselect_every_epoch);
  train->add_option("--strategy", tr_strategy);
  train->add_option("-T,--t-frames", tr_t);
  train->add_option("--epsilon", tr_ot.epsilon);
  train->add_option("--stack", tr_stack, "attention stack, letters c/s, e.g. csc");
  train->add_option("--residual-weight", tr_residual);
  train->add_option("--d-prime", tr_dprime);

  // infer
  std::string inf_data, inf_params, inf_out, inf_stack = "csc";
  double inf_residual = 0.5;
  int inf_threads = 0;
  infer::InferConfig inf_cfg;
  auto* infer_cmd = app.add_subcommand("infer", "temporal + spatial grounding on videos");
  infer_cmd->add_option("--data", inf_data, "dataset directory")->required();
  infer_cmd->add_option("--params", inf_params, "trained params.json")->required();
  infer_cmd->add_option("-o,--out", inf_out, "output jsonl")->required();
  infer_cmd->add_option("--theta", inf_cfg.theta_temporal);
  infer_cmd->add_option("--tau", inf_cfg.tau_spatial);
  infer_cmd->add_option("--stack", inf_stack);
  infer_cmd->add_option("--residual-weight", inf_residual);
  infer_cmd->add_option("--threads", inf_threads);

  // eval
  std::string ev_pred, ev_gt, ev_metric = "all", ev_dataset = "synthetic", ev_out;
  double ev_iou = 0.5;
  std::vector<double> ev_vmap_thrs{0.1, 0.2, 0.3, 0.4, 0.5};
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--pred", ev_pred, "predictions jsonl")->required();
  eval_cmd->add_option("--gt", ev_gt, "ground truth jsonl")->required();
  eval_cmd->add_option("--metric", ev_metric, "pg|smap|vmap|iou-pg|temporal|all");
  eval_cmd->add_option("--iou-thr", ev_iou);
  eval_cmd->add_option("--vmap-thrs", ev_vmap_thrs)->delimiter(',');
  eval_cmd->add_option("--dataset", ev_dataset);
  eval_cmd->add_option("-o,--out", ev_out, "report json (stdout if omitted)");

  // annot
  bench::BenchConfig bench_cfg;
  auto* annot = app.add_subcommand("annot", "benchmark construction arithmetic");
  annot->require_subcommand(1);
  std::string an_in, an_out;
  auto* agg = annot->add_subcommand("aggregate", "majority-vote per frame");
  agg->add_option("--in", an_in)->required();
  agg->add_option("-o,--out", an_out)->required();
  agg->add_option("--majority-k", bench_cfg.majority_k);
  std::string bb_in, bb_out;
  auto* bbox = annot->add_subcommand("bbox", "union-of-points boxes");
  bbox->add_option("--in", bb_in)->required();
  bbox->add_option("-o,--out", bb_out)->required();
  bbox->add_option("--margin", bench_cfg.bbox_margin_frac);
  bbox->add_option("--majority-k", bench_cfg.majority_k);
  std::string ws_in, ws_out;
  auto* wide = annot->add_subcommand("widespread", "fraction of boxes above the area threshold");
  wide->add_option("--in", ws_in)->required();
  wide->add_option("--area", bench_cfg.widespread_area);
  wide->add_option("-o,--out", ws_out);
  double ss_alpha = 0.95, ss_eps = 0.03, ss_p = 0.5;
  long ss_n = 0;
  std::string ss_out;
  auto* ssize = annot->add_subcommand("sample-size", "QC sample size with finite population factor");
  ssize->add_option("--alpha", ss_alpha);
  ssize->add_option("--eps", ss_eps);
  ssize->add_option("--p", ss_p);
  ssize->add_option("--N", ss_n)->required();
  ssize->add_option("-o,--out", ss_out);
  std::string cl_gt, cl_out;
  auto* clips_cmd = annot->add_subcommand("clips", "single-action clips around each segment");
  clips_cmd->add_option("--gt", cl_gt)->required();
  clips_cmd->add_option("-o,--out", cl_out)->required();

  // report
  std::vector<std::string> rep_inputs;
  std::string rep_out;
  auto* report = app.add_subcommand("report", "merge eval reports into one table");
  report->add_option("--inputs", rep_inputs, "report json files")->required();
  report->add_option("-o,--out", rep_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return cmd_synth(synth_cfg, synth_out);
    if (*select) {
      return cmd_select(sel_data, sel_params, sel_strategy, sel_t, sel_ot, sel_seed, sel_dprime,
                        sel_out, resolve_threads(sel_threads));
    }
    if (*train) {
      if (tr_opt == "sgd") {
        tr_cfg.optimizer = net::Optimizer::Sgd;
      } else if (tr_opt == "adaptive-moments") {
        tr_cfg.optimizer = net::Optimizer::AdaptiveMoments;
      } else {
        throw BadParamsError("unknown optimizer: " + tr_opt);
      }
      return cmd_train(tr_data, tr_out, tr_cfg, tr_strategy, tr_t, tr_ot, tr_stack, tr_residual,
                       tr_dprime);
    }
    if (*infer_cmd) {
      return cmd_infer(inf_data, inf_params, inf_out, inf_cfg, inf_stack, inf_residual,
                       resolve_threads(inf_threads));
    }
    if (*eval_cmd) return cmd_eval(ev_pred, ev_gt, ev_metric, ev_iou, ev_vmap_thrs, ev_dataset, ev_out);
    if (*annot) {
      if (*agg) return cmd_annot_aggregate(an_in, an_out, bench_cfg);
      if (*bbox) return cmd_annot_bbox(bb_in, bb_out, bench_cfg);
      if (*wide) return cmd_annot_widespread(ws_in, bench_cfg, ws_out);
      if (*ssize) {
        const long n = bench::qc_sample_size(ss_alpha, ss_eps, ss_p, ss_n);
        const json j = {{"sample_size", n},
                        {"alpha", ss_alpha},
                        {"eps", ss_eps},
                        {"p", ss_p},
                        {"population", ss_n}};
        if (ss_out.empty()) {
          std::cout << j.dump(2) << "\n";
        } else {
          write_json_file(j, ss_out);
        }
        return 0;
      }
      if (*clips_cmd) return cmd_annot_clips(cl_gt, cl_out);
    }
    if (*report) return cmd_report(rep_inputs, rep_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
