#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odas/binary_io.hpp"
#include "odas/error.hpp"

namespace odas {

using Vector = std::vector<double>;

/// Class ids are 1-based: actions 1..K, background K+1, hard negative K+2.
using ClassId = int;

/// Network and windowing hyper-parameters shared by every module.
struct ModelConfig {
  int num_action_classes = 5;
  int feature_dim = 32;
  int fc_hidden_dim = 64;
  int noise_dim = 100;
  int gen_hidden_dim = 64;
  double lambda = 0.01;
  int window_len = 16;
  int stride = 1;

  ClassId background_class() const { return num_action_classes + 1; }
  ClassId hard_negative_class() const { return num_action_classes + 2; }
  /// Width of the discriminator head during training (actions, background, fake).
  int train_outputs() const { return num_action_classes + 2; }
  /// Width of the head at inference; the fake class is dropped.
  int infer_outputs() const { return num_action_classes + 1; }

  bool is_action(ClassId c) const { return c >= 1 && c <= num_action_classes; }

  void validate() const {
    require(num_action_classes >= 1, ErrorKind::config, "num_action_classes must be >= 1");
    require(feature_dim >= 1 && fc_hidden_dim >= 1 && noise_dim >= 1 && gen_hidden_dim >= 1,
            ErrorKind::config, "all layer dimensions must be >= 1");
    require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::config, "lambda must be >= 0");
    require(window_len >= 1, ErrorKind::config, "window_len must be >= 1");
    require(stride >= 1, ErrorKind::config, "stride must be >= 1");
  }
};

enum class Role : std::uint8_t { start, follow_up, inside, background };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::start: return "start";
    case Role::follow_up: return "follow_up";
    case Role::inside: return "inside";
    case Role::background: return "background";
  }
  return "?";
}

/// One fixed-length window, summarized by its feature vector and labelled by its last frame.
class WindowSample {
 public:
  WindowSample(std::string video_id, int end_frame, double end_time, Vector features, ClassId label,
               Role role, const ModelConfig& cfg)
      : video_id_(std::move(video_id)),
        end_frame_(end_frame),
        end_time_(end_time),
        features_(std::move(features)),
        label_(label),
        role_(role) {
    require(static_cast<int>(features_.size()) == cfg.feature_dim, ErrorKind::shape,
            "window features have " + std::to_string(features_.size()) + " entries, expected " +
                std::to_string(cfg.feature_dim));
    require(std::all_of(features_.begin(), features_.end(), [](double v) { return std::isfinite(v); }),
            ErrorKind::format, "window features must be finite");
    require(label_ >= 1 && label_ <= cfg.background_class(), ErrorKind::contract,
            "window label out of range 1..K+1");
    if (role_ == Role::start || role_ == Role::follow_up || role_ == Role::inside) {
      require(cfg.is_action(label_), ErrorKind::contract,
              std::string(to_string(role_)) + " window must carry an action label");
    } else {
      require(label_ == cfg.background_class(), ErrorKind::contract,
              "background window must carry label K+1");
    }
    require(std::isfinite(end_time_) && end_time_ >= 0.0, ErrorKind::contract, "end_time must be >= 0");
  }

  const std::string& video_id() const { return video_id_; }
  int end_frame() const { return end_frame_; }
  double end_time() const { return end_time_; }
  std::span<const double> features() const { return features_; }
  ClassId label() const { return label_; }
  Role role() const { return role_; }

  WindowSample with_role(Role role, const ModelConfig& cfg) const {
    return WindowSample(video_id_, end_frame_, end_time_, features_, label_, role, cfg);
  }

  friend bool operator==(const WindowSample&, const WindowSample&) = default;

 private:
  std::string video_id_;
  int end_frame_;
  double end_time_;
  Vector features_;
  ClassId label_;
  Role role_;
};

/// A start window and the window immediately following it, fully inside the same instance.
class StartPair {
 public:
  StartPair(WindowSample start, WindowSample follow_up)
      : start_(std::move(start)), follow_up_(std::move(follow_up)) {
    require(start_.role() == Role::start, ErrorKind::contract, "pair start must have role start");
    require(follow_up_.role() == Role::follow_up, ErrorKind::contract,
            "pair follow-up must have role follow_up");
    require(start_.video_id() == follow_up_.video_id(), ErrorKind::contract,
            "paired windows must come from one video");
    require(follow_up_.end_time() > start_.end_time(), ErrorKind::contract,
            "follow-up window must end after the start window");
    require(start_.label() == follow_up_.label(), ErrorKind::contract, "paired labels must match");
  }

  const WindowSample& start() const { return start_; }
  const WindowSample& follow_up() const { return follow_up_; }
  ClassId label() const { return start_.label(); }

 private:
  WindowSample start_;
  WindowSample follow_up_;
};

struct ASGroundTruth {
  std::string video_id;
  double as_time = 0.0;
  ClassId action_class = 1;
  bool ambiguous = false;
};

struct ASPrediction {
  std::string video_id;
  double time = 0.0;
  ClassId action_class = 1;
  double score = 0.0;

  friend bool operator==(const ASPrediction&, const ASPrediction&) = default;
};

struct EvalConfig {
  std::vector<double> offset_thresholds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double ap_depth = 1.0;

  void validate() const {
    require(!offset_thresholds.empty(), ErrorKind::config, "at least one offset threshold required");
    require(std::is_sorted(offset_thresholds.begin(), offset_thresholds.end()), ErrorKind::config,
            "offset thresholds must be sorted ascending");
    require(offset_thresholds.front() > 0.0, ErrorKind::config, "offset thresholds must be > 0");
    require(ap_depth > 0.0 && ap_depth <= 1.0, ErrorKind::config, "ap_depth must be in (0, 1]");
  }
};

struct DetectionCounts {
  int num_gt = 0;
  int true_positives = 0;
  int false_positives = 0;
};

struct CurvePoint {
  double offset = 0.0;
  ClassId action_class = 1;
  double recall = 0.0;
  double precision = 0.0;
};

/// Keys are (action class, offset threshold in seconds).
struct EvalReport {
  EvalConfig config;
  std::map<std::pair<ClassId, double>, double> per_class_ap;
  std::map<double, double> map_per_offset;
  double average_map = 0.0;
  std::map<std::pair<ClassId, double>, DetectionCounts> counts;
  /// Precision/recall after each ranked prediction, per (offset, class).
  std::vector<CurvePoint> curves;
};

// WindowSample binary form: video id, end frame, end time, label, role, features (f64).

inline void write_window_sample(std::ostream& out, const WindowSample& s) {
  io::write_string(out, s.video_id());
  io::write_le(out, static_cast<std::uint32_t>(s.end_frame()));
  io::write_f64(out, s.end_time());
  io::write_le(out, static_cast<std::uint32_t>(s.label()));
  io::write_le(out, static_cast<std::uint8_t>(s.role()));
  io::write_le(out, static_cast<std::uint32_t>(s.features().size()));
  for (double v : s.features()) io::write_f64(out, v);
}

inline WindowSample read_window_sample(std::istream& in, const ModelConfig& cfg) {
  auto video_id = io::read_string(in);
  auto end_frame = static_cast<int>(io::read_le<std::uint32_t>(in));
  double end_time = io::read_f64(in);
  auto label = static_cast<ClassId>(io::read_le<std::uint32_t>(in));
  auto role_byte = io::read_le<std::uint8_t>(in);
  require(role_byte <= static_cast<std::uint8_t>(Role::background), ErrorKind::format, "bad role byte");
  auto n = io::read_le<std::uint32_t>(in);
  Vector features(n);
  for (auto& v : features) v = io::read_f64(in);
  return WindowSample(std::move(video_id), end_frame, end_time, std::move(features), label,
                      static_cast<Role>(role_byte), cfg);
}

}  // namespace odas
