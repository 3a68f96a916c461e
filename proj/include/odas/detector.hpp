#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "odas/core.hpp"
#include "odas/dataset.hpp"
#include "odas/eval.hpp"
#include "odas/nn.hpp"

namespace odas {

/// Network output for one window: argmax class over the K+1 test-time classes and its probability.
struct WindowDecision {
  ClassId cls = 0;
  double score = 0.0;
};

/// Ties resolve to the lowest class id.
inline WindowDecision decide(std::span<const double> probabilities) {
  require(!probabilities.empty(), ErrorKind::shape, "empty probability vector");
  auto it = std::max_element(probabilities.begin(), probabilities.end());
  return {static_cast<ClassId>(it - probabilities.begin()) + 1, *it};
}

/// Per-stream state for action-start emission.
class DetectorState {
 public:
  DetectorState(std::string video_id, int num_action_classes, double threshold)
      : video_id_(std::move(video_id)), num_action_classes_(num_action_classes), threshold_(threshold) {
    require(num_action_classes >= 1, ErrorKind::config, "num_action_classes must be >= 1");
    require(threshold >= 0.0 && threshold <= 1.0, ErrorKind::config, "threshold must be in [0,1]");
  }

  double threshold() const { return threshold_; }
  std::optional<ClassId> previous_class() const { return previous_; }

  /// Emits an action start at t iff the class is an action, differs from the class at the previous
  /// window, and its score exceeds the threshold. The previous class is updated unconditionally.
  std::optional<ASPrediction> step(const WindowDecision& decision, double t) {
    require(std::isfinite(t), ErrorKind::stream, "non-finite window time");
    require(!last_time_ || t > *last_time_, ErrorKind::stream,
            video_id_ + ": window times must strictly increase");
    require(decision.cls >= 1 && decision.cls <= num_action_classes_ + 1, ErrorKind::contract,
            "decision class outside 1..K+1");
    last_time_ = t;
    const bool is_action = decision.cls <= num_action_classes_;
    const bool changed = !previous_ || *previous_ != decision.cls;
    previous_ = decision.cls;
    if (is_action && changed && decision.score > threshold_) {
      return ASPrediction{video_id_, t, decision.cls, decision.score};
    }
    return std::nullopt;
  }

  std::optional<ASPrediction> step(std::span<const double> probabilities, double t) {
    require(static_cast<int>(probabilities.size()) == num_action_classes_ + 1, ErrorKind::shape,
            "expected K+1 class probabilities");
    return step(decide(probabilities), t);
  }

  /// Runs the model (K+1 head) on one window.
  std::optional<ASPrediction> step(const nn::Discriminator& model, std::span<const double> features, double t) {
    auto [fc7, logits] = nn::disc_forward(model, features, nn::Mode::infer);
    return step(nn::softmax(logits), t);
  }

 private:
  std::string video_id_;
  int num_action_classes_;
  double threshold_;
  std::optional<ClassId> previous_;
  std::optional<double> last_time_;
};

/// K+1 probabilities from splitting unit mass uniformly over the simplex (normalized exponentials).
inline Vector random_guess(std::mt19937_64& rng, int num_action_classes) {
  std::exponential_distribution<double> expo(1.0);
  Vector p(static_cast<std::size_t>(num_action_classes + 1));
  double sum = 0.0;
  for (double& v : p) {
    v = expo(rng);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

/// Per-window decisions for one stream, computed once and re-thresholded cheaply.
struct ScoredStream {
  std::string video_id;
  std::vector<double> times;
  std::vector<WindowDecision> decisions;
};

/// Windows ending at frames 0, stride, 2·stride, ...; window time is end_frame / fps.
inline ScoredStream score_stream(const nn::Discriminator& model, const FeatureStream& fs, double fps, int stride,
                                 int num_frames = -1) {
  require(stride >= 1, ErrorKind::config, "stride must be >= 1");
  require(fs.dim() == model.feature_dim(), ErrorKind::shape,
          fs.video_id() + ": feature dimension " + std::to_string(fs.dim()) + " does not match model input " +
              std::to_string(model.feature_dim()));
  const int n = num_frames < 0 ? fs.count() : std::min(num_frames, fs.count());
  ScoredStream out;
  out.video_id = fs.video_id();
  std::vector<int> ends;
  for (int e = 0; e < n; e += stride) ends.push_back(e);
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < ends.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, ends.size() - start);
    nn::Matrix x(len, static_cast<std::size_t>(fs.dim()));
    for (std::size_t i = 0; i < len; ++i) {
      auto w = fs.window(ends[start + i]);
      std::copy(w.begin(), w.end(), x.row(i).begin());
    }
    auto pass = model.forward(x, nn::Mode::infer);
    for (std::size_t i = 0; i < len; ++i) {
      out.times.push_back(ends[start + i] / fps);
      out.decisions.push_back(decide(nn::softmax(pass.logits.row(i))));
    }
  }
  return out;
}

/// Random-guess baseline in place of network scores, same window schedule as score_stream.
inline ScoredStream random_guess_stream(std::mt19937_64& rng, const std::string& video_id, int num_frames,
                                        double fps, int stride, int num_action_classes) {
  ScoredStream out;
  out.video_id = video_id;
  for (int e = 0; e < num_frames; e += stride) {
    out.times.push_back(e / fps);
    out.decisions.push_back(decide(random_guess(rng, num_action_classes)));
  }
  return out;
}

inline std::vector<ASPrediction> emit_predictions(const ScoredStream& s, int num_action_classes, double threshold) {
  DetectorState state(s.video_id, num_action_classes, threshold);
  std::vector<ASPrediction> out;
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    if (auto p = state.step(s.decisions[i], s.times[i])) out.push_back(std::move(*p));
  }
  return out;
}

inline std::vector<ASPrediction> emit_predictions(std::span<const ScoredStream> streams, int num_action_classes,
                                                  double threshold) {
  std::vector<ASPrediction> out;
  for (const auto& s : streams) {
    auto p = emit_predictions(s, num_action_classes, threshold);
    out.insert(out.end(), p.begin(), p.end());
  }
  std::stable_sort(out.begin(), out.end(), [](const ASPrediction& a, const ASPrediction& b) {
    return a.video_id != b.video_id ? a.video_id < b.video_id : a.time < b.time;
  });
  return out;
}

/// {0.05, 0.10, ..., 0.95}
inline std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i * 0.05);
  return grid;
}

struct ThresholdSearch {
  double threshold = 0.0;
  double average_map = 0.0;
  std::vector<std::pair<double, double>> scores;  // (threshold, average mAP) per grid value
};

/// Grid value maximizing average mAP on the given streams; ties go to the larger threshold.
inline ThresholdSearch grid_search_threshold(std::span<const ScoredStream> streams,
                                             std::span<const ASGroundTruth> ground_truth, std::span<const double> grid,
                                             const EvalConfig& eval_cfg, int num_action_classes) {
  require(!grid.empty(), ErrorKind::config, "threshold grid must not be empty");
  ThresholdSearch best;
  bool first = true;
  for (double theta : grid) {
    require(theta >= 0.0 && theta <= 1.0, ErrorKind::config, "threshold grid values must lie in [0,1]");
    auto preds = emit_predictions(streams, num_action_classes, theta);
    const double score = evaluate(preds, ground_truth, eval_cfg, num_action_classes).average_map;
    best.scores.emplace_back(theta, score);
    if (first || score > best.average_map || (score == best.average_map && theta > best.threshold)) {
      best.threshold = theta;
      best.average_map = score;
      first = false;
    }
  }
  return best;
}

inline ThresholdSearch grid_search_threshold(const nn::Discriminator& model, std::span<const FeatureStream> streams,
                                             std::span<const VideoAnnotation> annotations,
                                             std::span<const double> grid, const EvalConfig& eval_cfg,
                                             int stride = 1) {
  std::map<std::string, const VideoAnnotation*> by_id;
  for (const auto& a : annotations) by_id[a.video_id] = &a;
  std::vector<ScoredStream> scored;
  for (const auto& s : streams) {
    auto it = by_id.find(s.video_id());
    require(it != by_id.end(), ErrorKind::data, "no annotation for stream " + s.video_id());
    scored.push_back(score_stream(model, s, it->second->fps, stride, it->second->num_frames));
  }
  return grid_search_threshold(scored, ground_truths(annotations), grid, eval_cfg, model.num_action_classes());
}

// Predictions CSV: video_id,time_sec,class_id,score; fixed 6 decimals, ordered by (video_id, time).

inline void write_predictions_csv(std::ostream& out, std::span<const ASPrediction> preds) {
  std::vector<ASPrediction> sorted(preds.begin(), preds.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const ASPrediction& a, const ASPrediction& b) {
    return a.video_id != b.video_id ? a.video_id < b.video_id : a.time < b.time;
  });
  std::ostringstream line;
  line << std::fixed << std::setprecision(6);
  for (const auto& p : sorted) {
    line.str("");
    line << p.video_id << ',' << p.time << ',' << p.action_class << ',' << p.score << '\n';
    out << line.str();
  }
}

/// Parses the predictions CSV. Blank lines and a leading header line are skipped.
inline std::vector<ASPrediction> read_predictions_csv(std::istream& in) {
  std::vector<ASPrediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("video_id,", 0) == 0) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    auto bad = [&](const std::string& why) {
      fail(ErrorKind::format, "predictions line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 4) bad("expected 4 fields");
    if (fields[0].empty()) bad("empty video_id");
    ASPrediction p;
    p.video_id = fields[0];
    try {
      std::size_t used = 0;
      p.time = std::stod(fields[1], &used);
      if (used != fields[1].size()) bad("bad time");
      p.action_class = std::stoi(fields[2], &used);
      if (used != fields[2].size()) bad("bad class id");
      p.score = std::stod(fields[3], &used);
      if (used != fields[3].size()) bad("bad score");
    } catch (const std::logic_error&) {
      bad("unparseable number");
    }
    if (!std::isfinite(p.time) || p.time < 0.0) bad("time must be >= 0");
    if (!std::isfinite(p.score) || p.score < 0.0 || p.score > 1.0) bad("score must be in [0,1]");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace odas
