#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "odas/core.hpp"
#include "odas/error.hpp"

namespace odas {

struct ActionInstance {
  ClassId action_class = 1;
  double start_sec = 0.0;
  double end_sec = 0.0;
  bool ambiguous_start = false;
};

struct VideoAnnotation {
  std::string video_id;
  double fps = 30.0;
  int num_frames = 0;
  std::vector<ActionInstance> instances;

  double duration() const { return num_frames / fps; }

  void validate(const ModelConfig& cfg) const {
    require(std::isfinite(fps) && fps > 0.0, ErrorKind::format, video_id + ": fps must be positive");
    require(num_frames >= 1, ErrorKind::format, video_id + ": num_frames must be positive");
    for (const auto& inst : instances) {
      require(cfg.is_action(inst.action_class), ErrorKind::format,
              video_id + ": instance class " + std::to_string(inst.action_class) + " outside 1..K");
      require(inst.start_sec >= 0.0 && inst.start_sec < inst.end_sec && inst.end_sec <= duration() + 1e-9,
              ErrorKind::format, video_id + ": instance bounds must satisfy 0 <= start < end <= duration");
    }
    for (std::size_t i = 0; i < instances.size(); ++i)
      for (std::size_t j = i + 1; j < instances.size(); ++j) {
        const auto& a = instances[i];
        const auto& b = instances[j];
        const bool overlap = a.start_sec < b.end_sec && b.start_sec < a.end_sec;
        require(!(overlap && a.action_class == b.action_class), ErrorKind::format,
                video_id + ": overlapping instances of the same class");
      }
  }
};

/// One feature vector per window, indexed by the window's last frame.
class FeatureStream {
 public:
  FeatureStream() = default;
  FeatureStream(std::string video_id, int dim) : video_id_(std::move(video_id)), dim_(dim) {
    require(dim >= 1, ErrorKind::format, "feature stream dimension must be >= 1");
  }

  const std::string& video_id() const { return video_id_; }
  int dim() const { return dim_; }
  int count() const { return dim_ == 0 ? 0 : static_cast<int>(values_.size() / static_cast<std::size_t>(dim_)); }

  std::span<const double> window(int end_frame) const {
    return {values_.data() + static_cast<std::size_t>(end_frame) * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }

  void push_back(std::span<const double> features) {
    require(static_cast<int>(features.size()) == dim_, ErrorKind::shape, "feature width mismatch");
    require(std::all_of(features.begin(), features.end(), [](double v) { return std::isfinite(v); }),
            ErrorKind::format, video_id_ + ": non-finite feature value");
    values_.insert(values_.end(), features.begin(), features.end());
  }

  std::span<const double> values() const { return values_; }

  friend bool operator==(const FeatureStream&, const FeatureStream&) = default;

 private:
  std::string video_id_;
  int dim_ = 0;
  std::vector<double> values_;
};

/// Inclusive frame range [first, last]; empty when last < first.
struct FrameSpan {
  int first = 0;
  int last = -1;
  bool empty() const { return last < first; }
  bool contains(int f) const { return f >= first && f <= last; }
};

/// Frame f covers [f/fps, (f+1)/fps); it belongs to an instance iff start <= f/fps < end.
inline FrameSpan instance_frames(const ActionInstance& inst, double fps, int num_frames) {
  constexpr double kSlack = 1e-9;
  FrameSpan s;
  s.first = static_cast<int>(std::ceil(inst.start_sec * fps - kSlack));
  s.last = std::min(static_cast<int>(std::ceil(inst.end_sec * fps - kSlack)) - 1, num_frames - 1);
  return s;
}

/// Instance owning a frame: among those containing it, the one that started last (ties: lowest class).
inline std::optional<std::size_t> owning_instance(const VideoAnnotation& ann, int frame) {
  std::optional<std::size_t> best;
  FrameSpan best_span;
  for (std::size_t i = 0; i < ann.instances.size(); ++i) {
    auto span = instance_frames(ann.instances[i], ann.fps, ann.num_frames);
    if (!span.contains(frame)) continue;
    if (!best || span.first > best_span.first ||
        (span.first == best_span.first &&
         ann.instances[i].action_class < ann.instances[*best].action_class)) {
      best = i;
      best_span = span;
    }
  }
  return best;
}

/// Role and label of the window ending at `end_frame`, resolved against the owner of its last frame.
/// Frames before 0 count as background padding.
inline std::pair<ClassId, Role> classify_window(const VideoAnnotation& ann, int end_frame, const ModelConfig& cfg) {
  auto owner = owning_instance(ann, end_frame);
  if (!owner) return {cfg.background_class(), Role::background};
  const auto& inst = ann.instances[*owner];
  const auto span = instance_frames(inst, ann.fps, ann.num_frames);
  const int window_first = end_frame - cfg.window_len + 1;
  // The window always contains its own last frame, so it holds the start frame iff
  // the start frame is not earlier than the window's first frame.
  if (span.first >= window_first) return {inst.action_class, Role::start};
  return {inst.action_class, Role::inside};
}

/// One sample per frame of the video; the sample at index e is the window ending at frame e.
inline std::vector<WindowSample> build_window_dataset(const VideoAnnotation& ann, const FeatureStream& fs,
                                                      const ModelConfig& cfg) {
  require(std::isfinite(ann.fps) && ann.fps > 0.0, ErrorKind::format, ann.video_id + ": fps must be positive");
  require(fs.count() > 0, ErrorKind::format, ann.video_id + ": empty feature stream");
  require(fs.count() >= ann.num_frames, ErrorKind::format,
          ann.video_id + ": feature stream has " + std::to_string(fs.count()) + " windows but video has " +
              std::to_string(ann.num_frames) + " frames");
  require(fs.dim() == cfg.feature_dim, ErrorKind::shape,
          ann.video_id + ": feature dimension " + std::to_string(fs.dim()) + " != " +
              std::to_string(cfg.feature_dim));
  ann.validate(cfg);
  std::vector<WindowSample> out;
  out.reserve(static_cast<std::size_t>(ann.num_frames));
  for (int e = 0; e < ann.num_frames; ++e) {
    auto [label, role] = classify_window(ann, e, cfg);
    auto f = fs.window(e);
    out.emplace_back(ann.video_id, e, e / ann.fps, Vector(f.begin(), f.end()), label, role, cfg);
  }
  return out;
}

/// Pairs each start window ending at t with the window ending at t+L when frames t+1..t+L
/// all lie inside the same instance. Start windows without such a follow-up stay unpaired.
inline std::vector<StartPair> build_start_pairs(std::span<const WindowSample> samples, const VideoAnnotation& ann,
                                                const ModelConfig& cfg) {
  std::map<int, const WindowSample*> by_end;
  for (const auto& s : samples) {
    if (s.video_id() == ann.video_id) by_end[s.end_frame()] = &s;
  }
  std::vector<StartPair> pairs;
  for (const auto& s : samples) {
    if (s.video_id() != ann.video_id || s.role() != Role::start) continue;
    const int t = s.end_frame();
    auto owner = owning_instance(ann, t);
    if (!owner) continue;
    const auto span = instance_frames(ann.instances[*owner], ann.fps, ann.num_frames);
    const int follow_end = t + cfg.window_len;
    if (!span.contains(t + 1) || !span.contains(follow_end)) continue;
    // Every frame in t+1..t+L must still be owned by this instance.
    bool owned = true;
    for (int f = t + 1; f <= follow_end && owned; ++f) owned = owning_instance(ann, f) == owner;
    if (!owned) continue;
    auto it = by_end.find(follow_end);
    if (it == by_end.end() || it->second->label() != s.label()) continue;
    pairs.emplace_back(s, it->second->with_role(Role::follow_up, cfg));
  }
  return pairs;
}

/// Point-level ground truth derived from annotations (one AS per instance).
inline std::vector<ASGroundTruth> ground_truths(std::span<const VideoAnnotation> annotations) {
  std::vector<ASGroundTruth> out;
  for (const auto& ann : annotations)
    for (const auto& inst : ann.instances)
      out.push_back({ann.video_id, inst.start_sec, inst.action_class, inst.ambiguous_start});
  return out;
}

/// Training pools for the window classifier.
struct TrainingData {
  std::vector<WindowSample> starts;
  /// Inside and background windows (follow-up windows are inside windows and stay here too).
  std::vector<WindowSample> others;
  std::vector<StartPair> pairs;
};

inline TrainingData build_training_data(std::span<const VideoAnnotation> annotations,
                                        std::span<const FeatureStream> streams, const ModelConfig& cfg) {
  std::map<std::string, const FeatureStream*> by_id;
  for (const auto& s : streams) by_id[s.video_id()] = &s;
  TrainingData data;
  for (const auto& ann : annotations) {
    auto it = by_id.find(ann.video_id);
    require(it != by_id.end(), ErrorKind::data, "no feature stream for video " + ann.video_id);
    auto samples = build_window_dataset(ann, *it->second, cfg);
    auto pairs = build_start_pairs(samples, ann, cfg);
    for (auto& p : pairs) data.pairs.push_back(std::move(p));
    for (auto& s : samples) {
      if (s.role() == Role::start) {
        data.starts.push_back(std::move(s));
      } else {
        data.others.push_back(std::move(s));
      }
    }
  }
  return data;
}

// Synthetic corpora.

struct SynthConfig {
  std::uint64_t seed = 7;
  int num_action_classes = 5;
  int feature_dim = 32;
  int num_videos = 200;
  /// Index of the first generated video. Videos are generated independently per index, so a
  /// held-out split is the same seed with a later first_video.
  int first_video = 0;
  int window_len = 16;
  double fps = 6.0;
  int frames_per_video = 900;
  int min_instances = 1;
  int max_instances = 3;
  int min_instance_frames = 60;
  int max_instance_frames = 200;
  int min_gap_frames = 60;
  /// Scale of the per-class cluster centers (coordinates are |N(0,1)|·scale).
  double center_scale = 1.0;
  /// Per-frame noise standard deviation; window features average L frames.
  double frame_noise = 0.5;
  /// Background stretches whose frames lean toward an action without becoming one.
  int max_distractors = 0;
  int distractor_frames = 30;
  double distractor_mix = 0.5;
  double ambiguous_fraction = 0.0;
  std::string id_prefix = "video_";

  void validate() const {
    require(num_action_classes >= 2, ErrorKind::config, "synthetic corpus needs at least 2 action classes");
    require(feature_dim >= 2, ErrorKind::config, "synthetic corpus needs feature_dim >= 2");
    require(num_videos >= 1, ErrorKind::config, "num_videos must be >= 1");
    require(first_video >= 0, ErrorKind::config, "first_video must be >= 0");
    require(window_len >= 1, ErrorKind::config, "window_len must be >= 1");
    require(std::isfinite(fps) && fps > 0.0, ErrorKind::config, "fps must be positive");
    require(min_instances >= 0 && max_instances >= min_instances, ErrorKind::config, "bad instance count range");
    require(min_instance_frames >= 1 && max_instance_frames >= min_instance_frames, ErrorKind::config,
            "bad instance length range");
    require(min_gap_frames >= 1, ErrorKind::config, "min_gap_frames must be >= 1");
    require(frames_per_video >= max_instances * (max_instance_frames + min_gap_frames) + min_gap_frames,
            ErrorKind::config, "frames_per_video too short for the requested instances");
    require(center_scale > 0.0 && frame_noise >= 0.0, ErrorKind::config, "bad cluster parameters");
    require(max_distractors >= 0 && distractor_frames >= 1, ErrorKind::config, "bad distractor parameters");
    require(distractor_mix >= 0.0 && distractor_mix <= 1.0, ErrorKind::config, "distractor_mix must be in [0,1]");
    require(ambiguous_fraction >= 0.0 && ambiguous_fraction <= 1.0, ErrorKind::config,
            "ambiguous_fraction must be in [0,1]");
  }
};

struct SynthCorpus {
  std::vector<VideoAnnotation> annotations;
  std::vector<FeatureStream> streams;
  /// centers[0] is background, centers[k] action k.
  std::vector<Vector> centers;
  double frame_noise = 0.0;

  /// Expected per-frame feature for a cluster: E[max(0, c + σ·ε)] per coordinate.
  Vector expected_frame_feature(int cluster) const {
    Vector m;
    for (double c : centers.at(static_cast<std::size_t>(cluster))) {
      if (frame_noise == 0.0) {
        m.push_back(std::max(c, 0.0));
        continue;
      }
      const double z = c / frame_noise;
      const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
      const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
      m.push_back(c * cdf + frame_noise * pdf);
    }
    return m;
  }
};

inline SynthCorpus synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  const auto dim = static_cast<std::size_t>(cfg.feature_dim);
  SynthCorpus corpus;
  corpus.frame_noise = cfg.frame_noise;
  {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int c = 0; c <= cfg.num_action_classes; ++c) {
      Vector center(dim);
      for (double& v : center) v = std::abs(normal(rng)) * cfg.center_scale;
      corpus.centers.push_back(std::move(center));
    }
  }
  const int last_video = cfg.first_video + cfg.num_videos - 1;
  const int width = std::max(1, static_cast<int>(std::to_string(last_video).size()));
  for (int v = cfg.first_video; v <= last_video; ++v) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(v), 0x0DA5u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    std::string id = std::to_string(v);
    id = cfg.id_prefix + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;

    VideoAnnotation ann;
    ann.video_id = id;
    ann.fps = cfg.fps;
    ann.num_frames = cfg.frames_per_video;

    // Per-frame mixing weights: frame_mix[f] = (cluster, weight of that cluster vs background).
    std::vector<int> frame_cluster(static_cast<std::size_t>(cfg.frames_per_video), 0);
    std::vector<double> frame_weight(static_cast<std::size_t>(cfg.frames_per_video), 0.0);

    const int n_inst = uniform_int(cfg.min_instances, cfg.max_instances);
    // Split the slack between gaps so all instances fit; gaps are at least min_gap_frames.
    std::vector<int> lengths;
    int used = 0;
    for (int i = 0; i < n_inst; ++i) {
      lengths.push_back(uniform_int(cfg.min_instance_frames, cfg.max_instance_frames));
      used += lengths.back() + cfg.min_gap_frames;
    }
    const int slack = cfg.frames_per_video - used - cfg.min_gap_frames;
    std::vector<int> cuts;
    for (int i = 0; i < n_inst; ++i) cuts.push_back(uniform_int(0, slack));
    std::sort(cuts.begin(), cuts.end());
    int cursor = 0;
    int prev_cut = 0;
    std::vector<std::pair<int, int>> gaps;  // background stretches [begin, end)
    for (int i = 0; i < n_inst; ++i) {
      const int gap = cfg.min_gap_frames + (cuts[static_cast<std::size_t>(i)] - prev_cut);
      prev_cut = cuts[static_cast<std::size_t>(i)];
      gaps.emplace_back(cursor, cursor + gap);
      const int first = cursor + gap;
      const int len = lengths[static_cast<std::size_t>(i)];
      const ClassId cls = uniform_int(1, cfg.num_action_classes);
      for (int f = first; f < first + len; ++f) {
        frame_cluster[static_cast<std::size_t>(f)] = cls;
        frame_weight[static_cast<std::size_t>(f)] = 1.0;
      }
      ActionInstance inst;
      inst.action_class = cls;
      inst.start_sec = first / cfg.fps;
      inst.end_sec = (first + len) / cfg.fps;
      inst.ambiguous_start = unit(rng) < cfg.ambiguous_fraction;
      ann.instances.push_back(inst);
      cursor = first + len;
    }
    gaps.emplace_back(cursor, cfg.frames_per_video);

    const int n_distract = cfg.max_distractors > 0 ? uniform_int(0, cfg.max_distractors) : 0;
    for (int k = 0; k < n_distract; ++k) {
      const auto& g = gaps[static_cast<std::size_t>(uniform_int(0, static_cast<int>(gaps.size()) - 1))];
      // Keep distractors clear of neighbouring instances by one window.
      const int lo = g.first + cfg.window_len;
      const int hi = g.second - cfg.window_len - cfg.distractor_frames;
      if (hi < lo) continue;
      const int first = uniform_int(lo, hi);
      const int cls = uniform_int(1, cfg.num_action_classes);
      for (int f = first; f < first + cfg.distractor_frames; ++f) {
        frame_cluster[static_cast<std::size_t>(f)] = cls;
        frame_weight[static_cast<std::size_t>(f)] = cfg.distractor_mix;
      }
    }

    // Frames -L+1..-1 are background padding so every frame ends a full window.
    const int pad = cfg.window_len - 1;
    const int total = cfg.frames_per_video + pad;
    std::vector<double> frames(static_cast<std::size_t>(total) * dim);
    for (int f = 0; f < total; ++f) {
      const int src = f - pad;
      const int cluster = src >= 0 ? frame_cluster[static_cast<std::size_t>(src)] : 0;
      const double w = src >= 0 ? frame_weight[static_cast<std::size_t>(src)] : 0.0;
      const auto& bg = corpus.centers[0];
      const auto& ac = corpus.centers[static_cast<std::size_t>(cluster)];
      for (std::size_t j = 0; j < dim; ++j) {
        const double mean = (1.0 - w) * bg[j] + w * ac[j];
        frames[static_cast<std::size_t>(f) * dim + j] = std::max(0.0, mean + cfg.frame_noise * normal(rng));
      }
    }

    FeatureStream stream(id, cfg.feature_dim);
    Vector window(dim);
    for (int e = 0; e < cfg.frames_per_video; ++e) {
      std::fill(window.begin(), window.end(), 0.0);
      for (int f = e; f < e + cfg.window_len; ++f) {
        const double* row = frames.data() + static_cast<std::size_t>(f) * dim;
        for (std::size_t j = 0; j < dim; ++j) window[j] += row[j];
      }
      // Stored at single precision, matching the on-disk feature format.
      for (double& x : window) x = static_cast<double>(static_cast<float>(x / cfg.window_len));
      stream.push_back(window);
    }
    corpus.annotations.push_back(std::move(ann));
    corpus.streams.push_back(std::move(stream));
  }
  return corpus;
}

}  // namespace odas
