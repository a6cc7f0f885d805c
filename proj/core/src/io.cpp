#include "stground/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace stground::data {

using nlohmann::json;

namespace {

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

json vec_to_json(const num::Vector& v) {
  json a = json::array();
  for (std::size_t i = 0; i < v.dim(); ++i) a.push_back(f32(v[i]));
  return a;
}

num::Vector vec_from_json(const json& a, const std::string& field) {
  if (!a.is_array()) throw ParseError("field '" + field + "' must be an array");
  std::vector<double> d;
  d.reserve(a.size());
  for (const auto& x : a) {
    if (!x.is_number()) throw ParseError("field '" + field + "' has a non-numeric entry");
    d.push_back(f32(x.get<double>()));
  }
  return num::Vector(std::move(d));
}

const json& need(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw ParseError(std::string("missing field '") + field + "'");
  return *it;
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON in " + path.string());
  return j;
}

void check_version(const json& j, const std::filesystem::path& path) {
  if (need(j, "format_version").get<int>() != kFormatVersion) {
    throw ParseError("unsupported format_version in " + path.string());
  }
}

void write_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << j.dump() << "\n";
}

}  // namespace

void save_clip_features(const ClipFeatures& cf, const std::filesystem::path& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["video_id"] = cf.video_id;
  j["clip_id"] = cf.clip_id;
  j["d"] = cf.d;
  j["U"] = cf.frames;
  j["N"] = cf.grid_cells;
  j["fps"] = f32(cf.fps);
  j["start_s"] = f32(cf.start_s);
  json grid = json::array();
  for (const auto& v : cf.grid) grid.push_back(vec_to_json(v));
  j["grid"] = std::move(grid);
  json fg = json::array();
  for (const auto& v : cf.frame_global) fg.push_back(vec_to_json(v));
  j["frame_global"] = std::move(fg);
  json words = json::array();
  for (const auto& w : cf.words) words.push_back({{"text", w.text}, {"vec", vec_to_json(w.vec)}});
  j["words"] = std::move(words);
  j["sentence"] = vec_to_json(cf.sentence);
  write_file(j, path);
}

ClipFeatures load_clip_features(const std::filesystem::path& path) {
  const json j = parse_file(path);
  check_version(j, path);
  ClipFeatures cf;
  try {
    cf.video_id = need(j, "video_id").get<std::string>();
    cf.clip_id = need(j, "clip_id").get<std::string>();
    cf.d = need(j, "d").get<std::size_t>();
    cf.frames = need(j, "U").get<std::size_t>();
    cf.grid_cells = need(j, "N").get<std::size_t>();
    cf.fps = need(j, "fps").get<double>();
    cf.start_s = need(j, "start_s").get<double>();
    for (const auto& v : need(j, "grid")) cf.grid.push_back(vec_from_json(v, "grid"));
    for (const auto& v : need(j, "frame_global")) {
      cf.frame_global.push_back(vec_from_json(v, "frame_global"));
    }
    for (const auto& w : need(j, "words")) {
      cf.words.push_back({need(w, "text").get<std::string>(), vec_from_json(need(w, "vec"), "words.vec")});
    }
    cf.sentence = vec_from_json(need(j, "sentence"), "sentence");
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  cf.validate();
  return cf;
}

void save_label_bank(const LabelBank& bank, const std::filesystem::path& path) {
  json j;
  j["format_version"] = kFormatVersion;
  json classes = json::array();
  for (const auto& c : bank.classes) {
    json words = json::array();
    for (const auto& w : c.words) words.push_back(vec_to_json(w));
    classes.push_back({{"class_id", c.class_id},
                       {"name", c.name},
                       {"words", std::move(words)},
                       {"sentence", vec_to_json(c.sentence)}});
  }
  j["classes"] = std::move(classes);
  write_file(j, path);
}

LabelBank load_label_bank(const std::filesystem::path& path) {
  const json j = parse_file(path);
  check_version(j, path);
  LabelBank bank;
  try {
    for (const auto& c : need(j, "classes")) {
      LabelClass lc;
      lc.class_id = need(c, "class_id").get<int>();
      lc.name = need(c, "name").get<std::string>();
      for (const auto& w : need(c, "words")) lc.words.push_back(vec_from_json(w, "words"));
      lc.sentence = vec_from_json(need(c, "sentence"), "sentence");
      bank.classes.push_back(std::move(lc));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  bank.validate();
  return bank;
}

void save_video_gts(const std::vector<VideoGt>& gts, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (const auto& gt : gts) {
    json j;
    j["format_version"] = kFormatVersion;
    j["video_id"] = gt.video_id;
    j["width"] = f32(gt.width);
    j["height"] = f32(gt.height);
    j["frame_count"] = gt.frame_count;
    json segs = json::array();
    for (const auto& s : gt.segments) {
      json boxes = json::array();
      for (const auto& b : s.boxes) {
        boxes.push_back({f32(b.x0), f32(b.y0), f32(b.x1), f32(b.y1)});
      }
      segs.push_back({{"class_id", s.class_id},
                      {"start_frame", s.start_frame},
                      {"end_frame", s.end_frame},
                      {"boxes", std::move(boxes)}});
    }
    j["segments"] = std::move(segs);
    j["ordered_transcript"] = gt.ordered_transcript;
    out << j.dump() << "\n";
  }
}

std::vector<VideoGt> load_video_gts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<VideoGt> gts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    check_version(j, path);
    VideoGt gt;
    try {
      gt.video_id = need(j, "video_id").get<std::string>();
      gt.width = need(j, "width").get<double>();
      gt.height = need(j, "height").get<double>();
      gt.frame_count = need(j, "frame_count").get<int>();
      for (const auto& s : need(j, "segments")) {
        GtSegment seg;
        seg.class_id = need(s, "class_id").get<int>();
        seg.start_frame = need(s, "start_frame").get<int>();
        seg.end_frame = need(s, "end_frame").get<int>();
        for (const auto& b : need(s, "boxes")) {
          if (!b.is_array() || b.size() != 4) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": box must be [x0,y0,x1,y1]");
          }
          seg.boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                               b[3].get<double>()});
        }
        gt.segments.push_back(std::move(seg));
      }
      gt.ordered_transcript = need(j, "ordered_transcript").get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    gt.validate();
    gts.push_back(std::move(gt));
  }
  return gts;
}

void save_predictions(const std::vector<SpatioTemporalPrediction>& preds,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (const auto& p : preds) {
    for (const auto& f : p.frames) {
      json j;
      j["format_version"] = kFormatVersion;
      j["video_id"] = p.video_id;
      j["frame_index"] = f.frame_index;
      j["label"] = f.label;
      json hm = json::array();
      for (double v : f.heatmap) hm.push_back(f32(v));
      j["heatmap"] = std::move(hm);
      j["argmax_point"] = {f32(f.argmax_x), f32(f.argmax_y)};
      j["mask"] = f.mask;
      j["best_similarity"] = f32(f.best_similarity);
      out << j.dump() << "\n";
    }
  }
}

std::vector<SpatioTemporalPrediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<SpatioTemporalPrediction> preds;
  std::map<std::string, std::size_t> index;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    check_version(j, path);
    FramePrediction f;
    std::string video_id;
    try {
      video_id = need(j, "video_id").get<std::string>();
      f.frame_index = need(j, "frame_index").get<int>();
      f.label = need(j, "label").get<int>();
      for (const auto& v : need(j, "heatmap")) f.heatmap.push_back(f32(v.get<double>()));
      const auto& pt = need(j, "argmax_point");
      if (!pt.is_array() || pt.size() != 2) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": argmax_point must be [x,y]");
      }
      f.argmax_x = pt[0].get<double>();
      f.argmax_y = pt[1].get<double>();
      f.mask = need(j, "mask").get<std::vector<std::uint8_t>>();
      f.best_similarity = need(j, "best_similarity").get<double>();
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (f.mask.size() != f.heatmap.size()) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": mask length != heatmap length");
    }
    auto [it, inserted] = index.try_emplace(video_id, preds.size());
    if (inserted) {
      preds.push_back({});
      preds.back().video_id = video_id;
    }
    preds[it->second].frames.push_back(std::move(f));
  }
  // Rebuild derived segments: maximal runs of identical non-background labels.
  for (auto& p : preds) {
    int run_start = -1;
    int run_label = kBackground;
    double sim_sum = 0.0;
    auto flush = [&](int end_frame) {
      if (run_label != kBackground && run_start >= 0) {
        const int len = end_frame - run_start;
        p.segments.push_back({run_label, run_start, end_frame, sim_sum / len});
      }
    };
    int prev_index = -1;
    for (const auto& f : p.frames) {
      if (f.label != run_label || f.frame_index != prev_index + 1) {
        flush(prev_index + 1);
        run_start = f.frame_index;
        run_label = f.label;
        sim_sum = 0.0;
      }
      sim_sum += f.best_similarity;
      prev_index = f.frame_index;
    }
    flush(prev_index + 1);
  }
  return preds;
}

void save_model_params(const net::ModelParams& params, const std::filesystem::path& path) {
  auto mat = [](const num::Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(f32(m.at(r, c)));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  json j;
  j["format_version"] = kFormatVersion;
  j["d"] = params.d();
  j["d_prime"] = params.d_prime();
  j["W_f"] = mat(params.W_f);
  j["W_g"] = mat(params.W_g);
  j["W_f_prime"] = mat(params.W_f_prime);
  j["W_g_prime"] = mat(params.W_g_prime);
  write_file(j, path);
}

net::ModelParams load_model_params(const std::filesystem::path& path) {
  const json j = parse_file(path);
  check_version(j, path);
  auto mat = [&](const char* field) {
    const json& rows = need(j, field);
    if (!rows.is_array() || rows.empty()) throw ParseError(std::string(field) + " must be a 2D array");
    const std::size_t cols = rows[0].size();
    std::vector<double> data;
    for (const auto& row : rows) {
      if (row.size() != cols) throw ParseError(std::string(field) + " is ragged");
      for (const auto& v : row) data.push_back(f32(v.get<double>()));
    }
    return num::Matrix(rows.size(), cols, std::move(data));
  };
  net::ModelParams p{mat("W_f"), mat("W_g"), mat("W_f_prime"), mat("W_g_prime")};
  p.validate();
  return p;
}

}  // namespace stground::data
