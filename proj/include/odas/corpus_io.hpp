#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "odas/binary_io.hpp"
#include "odas/dataset.hpp"

namespace odas {

// Annotations: {"videos":[{"id","fps","num_frames","instances":[{"class","start_sec","end_sec","ambiguous_start"}]}]}

inline nlohmann::json annotations_to_json(std::span<const VideoAnnotation> videos) {
  nlohmann::json doc;
  doc["videos"] = nlohmann::json::array();
  for (const auto& v : videos) {
    nlohmann::json jv;
    jv["id"] = v.video_id;
    jv["fps"] = v.fps;
    jv["num_frames"] = v.num_frames;
    jv["instances"] = nlohmann::json::array();
    for (const auto& inst : v.instances) {
      jv["instances"].push_back({{"class", inst.action_class},
                                 {"start_sec", inst.start_sec},
                                 {"end_sec", inst.end_sec},
                                 {"ambiguous_start", inst.ambiguous_start}});
    }
    doc["videos"].push_back(std::move(jv));
  }
  return doc;
}

inline std::vector<VideoAnnotation> annotations_from_json(const nlohmann::json& doc) {
  std::vector<VideoAnnotation> out;
  try {
    for (const auto& jv : doc.at("videos")) {
      VideoAnnotation v;
      v.video_id = jv.at("id").get<std::string>();
      v.fps = jv.at("fps").get<double>();
      v.num_frames = jv.at("num_frames").get<int>();
      require(std::isfinite(v.fps) && v.fps > 0.0, ErrorKind::format, v.video_id + ": fps must be positive");
      for (const auto& ji : jv.at("instances")) {
        ActionInstance inst;
        inst.action_class = ji.at("class").get<int>();
        inst.start_sec = ji.at("start_sec").get<double>();
        inst.end_sec = ji.at("end_sec").get<double>();
        inst.ambiguous_start = ji.value("ambiguous_start", false);
        v.instances.push_back(inst);
      }
      out.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("annotation JSON: ") + e.what());
  }
  return out;
}

inline std::vector<VideoAnnotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::input, "cannot open annotations " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
  return annotations_from_json(doc);
}

inline void save_annotations(const std::filesystem::path& path, std::span<const VideoAnnotation> videos) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path.string());
  out << annotations_to_json(videos).dump(2) << '\n';
}

// ODFS: "ODFS" u32 dim u32 count, then count×dim little-endian f32, row-major.

inline void write_feature_stream(std::ostream& out, const FeatureStream& fs) {
  io::write_magic(out, "ODFS");
  io::write_le(out, static_cast<std::uint32_t>(fs.dim()));
  io::write_le(out, static_cast<std::uint32_t>(fs.count()));
  for (double v : fs.values()) io::write_f32(out, static_cast<float>(v));
}

inline FeatureStream read_feature_stream(std::istream& in, const std::string& video_id) {
  io::expect_magic(in, "ODFS");
  const auto dim = io::read_le<std::uint32_t>(in);
  const auto count = io::read_le<std::uint32_t>(in);
  require(dim >= 1 && dim <= (1u << 20), ErrorKind::format, video_id + ": implausible feature dimension");
  require(count >= 1, ErrorKind::format, video_id + ": empty feature stream");
  FeatureStream fs(video_id, static_cast<int>(dim));
  std::vector<double> row(dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    for (auto& v : row) v = static_cast<double>(io::read_f32(in));
    fs.push_back(row);
  }
  return fs;
}

inline void save_feature_stream(const std::filesystem::path& path, const FeatureStream& fs) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path.string());
  write_feature_stream(out, fs);
}

inline FeatureStream load_feature_stream(const std::filesystem::path& path, const std::string& video_id) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::input, "cannot open feature file " + path.string());
  return read_feature_stream(in, video_id);
}

/// On-disk corpus: <dir>/annotations.json and <dir>/features/<video_id>.odfs.
struct Corpus {
  std::vector<VideoAnnotation> annotations;
  std::vector<FeatureStream> streams;
};

inline void save_corpus(const std::filesystem::path& dir, std::span<const VideoAnnotation> annotations,
                        std::span<const FeatureStream> streams) {
  std::filesystem::create_directories(dir / "features");
  save_annotations(dir / "annotations.json", annotations);
  for (const auto& s : streams) save_feature_stream(dir / "features" / (s.video_id() + ".odfs"), s);
}

inline Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus c;
  c.annotations = load_annotations(dir / "annotations.json");
  for (const auto& a : c.annotations) {
    c.streams.push_back(load_feature_stream(dir / "features" / (a.video_id + ".odfs"), a.video_id));
  }
  return c;
}

}  // namespace odas
