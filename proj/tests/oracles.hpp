#pragma once

// Independent reference implementations used only by tests. They deliberately avoid the
// library's Matrix/forward/matching code paths and read raw parameters instead.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "odas/core.hpp"
#include "odas/dataset.hpp"
#include "odas/nn.hpp"

namespace oracle {

using odas::Vector;

inline Vector dense(const odas::nn::DenseLayer& l, const Vector& x, int rows) {
  Vector y;
  for (int o = 0; o < rows; ++o) {
    long double acc = 0.0L;
    for (int i = 0; i < l.in_dim(); ++i) acc += static_cast<long double>(l.weights(o, i)) * x[i];
    y.push_back(static_cast<double>(acc + l.bias[o]));
  }
  return y;
}

inline Vector relu(Vector v) {
  for (auto& x : v) x = std::max(0.0, x);
  return v;
}

struct DiscOut {
  Vector fc7;
  Vector logits;
};

inline DiscOut disc_forward(const odas::nn::Discriminator& d, const Vector& x, bool train_head) {
  auto h6 = relu(dense(d.fc6, x, d.fc6.out_dim()));
  auto h7 = relu(dense(d.fc7, h6, d.fc7.out_dim()));
  int rows = train_head ? d.fc8.out_dim() : d.fc8.out_dim() - 1;
  return {h7, dense(d.fc8, h7, rows)};
}

/// Batch-statistics forward of the generator, one column at a time.
inline std::vector<Vector> gen_forward_train(const odas::nn::Generator& g, const std::vector<Vector>& z) {
  auto bn = [](const odas::nn::BatchNormLayer& b, std::vector<Vector> x) {
    const std::size_t n = x.size();
    for (int j = 0; j < b.dim(); ++j) {
      double mean = 0;
      for (auto& r : x) mean += r[j];
      mean /= n;
      double var = 0;
      for (auto& r : x) var += (r[j] - mean) * (r[j] - mean);
      var /= n;
      for (auto& r : x) r[j] = b.gamma[j] * (r[j] - mean) / std::sqrt(var + b.epsilon) + b.beta[j];
    }
    return x;
  };
  std::vector<Vector> h;
  for (auto& zi : z) h.push_back(dense(g.fc1, zi, g.fc1.out_dim()));
  h = bn(g.bn1, h);
  for (auto& r : h) r = relu(r);
  std::vector<Vector> o;
  for (auto& r : h) o.push_back(dense(g.fc2, r, g.fc2.out_dim()));
  o = bn(g.bn2, o);
  for (auto& r : o) r = relu(r);
  return o;
}

// Window roles by direct per-frame inspection.

inline bool frame_in(const odas::ActionInstance& inst, int f, double fps) {
  const double t = f / fps;
  return t >= inst.start_sec - 1e-9 && t < inst.end_sec - 1e-9;
}

inline int as_frame(const odas::VideoAnnotation& a, std::size_t inst) {
  for (int f = 0; f < a.num_frames; ++f)
    if (frame_in(a.instances[inst], f, a.fps)) return f;
  return -1;
}

/// Among instances containing frame f, the one whose first frame is latest (ties: lowest class).
inline std::optional<std::size_t> owner(const odas::VideoAnnotation& a, int f) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    if (f < 0 || f >= a.num_frames || !frame_in(a.instances[i], f, a.fps)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const int cur = as_frame(a, *best);
    const int cand = as_frame(a, i);
    if (cand > cur || (cand == cur && a.instances[i].action_class < a.instances[*best].action_class)) best = i;
  }
  return best;
}

inline std::pair<int, odas::Role> window_role(const odas::VideoAnnotation& a, int end, int L, int K) {
  auto o = owner(a, end);
  if (!o) return {K + 1, odas::Role::background};
  const int asf = as_frame(a, *o);
  bool contains_as = false;
  bool all_inside = true;
  for (int f = end - L + 1; f <= end; ++f) {
    if (f == asf) contains_as = true;
    if (!(f >= 0 && frame_in(a.instances[*o], f, a.fps))) all_inside = false;
  }
  const int cls = a.instances[*o].action_class;
  if (contains_as) return {cls, odas::Role::start};
  if (all_inside) return {cls, odas::Role::inside};
  return {cls, odas::Role::background};  // unreachable when the last frame is owned
}

/// All (start_end, follow_end) pairs with follow_end = start_end + L fully owned by the same instance.
inline std::set<std::pair<int, int>> start_pairs(const odas::VideoAnnotation& a, int L, int K) {
  std::set<std::pair<int, int>> out;
  for (int t = 0; t < a.num_frames; ++t) {
    if (window_role(a, t, L, K).second != odas::Role::start) continue;
    auto o = owner(a, t);
    bool ok = t + L < a.num_frames;
    for (int f = t + 1; ok && f <= t + L; ++f) ok = owner(a, f) == o && frame_in(a.instances[*o], f, a.fps);
    if (ok) out.insert({t, t + L});
  }
  return out;
}

// Evaluation oracle: for every rank prefix, the maximum number of predictions that can be
// simultaneously matched to distinct in-range ground truths, by exhaustive search.

inline int max_matching(const std::vector<odas::ASPrediction>& ranked, std::size_t prefix,
                        const std::vector<odas::ASGroundTruth>& gts, double offset) {
  std::vector<std::size_t> live;
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!gts[g].ambiguous) live.push_back(g);
  // Enumerate every assignment: each prediction takes nothing or one free in-range ground truth.
  // Memoized over (prediction, used-ground-truth mask) so ≤ 20 × 2^6 states are visited.
  std::map<std::pair<std::size_t, unsigned>, int> memo;
  std::function<int(std::size_t, unsigned)> rec = [&](std::size_t p, unsigned used) -> int {
    if (p == prefix) return 0;
    auto key = std::make_pair(p, used);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int best = rec(p + 1, used);
    const auto& pr = ranked[p];
    for (std::size_t k = 0; k < live.size(); ++k) {
      const auto& g = gts[live[k]];
      if ((used >> k) & 1u) continue;
      if (pr.video_id != g.video_id || pr.action_class != g.action_class) continue;
      if (!(std::abs(pr.time - g.as_time) < offset)) continue;
      best = std::max(best, 1 + rec(p + 1, used | (1u << k)));
    }
    memo[key] = best;
    return best;
  };
  return rec(0, 0u);
}

inline std::vector<odas::ASPrediction> rank(std::vector<odas::ASPrediction> preds) {
  std::stable_sort(preds.begin(), preds.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.time != b.time) return a.time < b.time;
    return a.video_id < b.video_id;
  });
  return preds;
}

inline std::vector<bool> exhaustive_flags(const std::vector<odas::ASPrediction>& preds,
                                          const std::vector<odas::ASGroundTruth>& gts, double offset) {
  auto ranked = rank(preds);
  std::vector<bool> flags;
  int prev = 0;
  for (std::size_t r = 1; r <= ranked.size(); ++r) {
    const int cur = max_matching(ranked, r, gts, offset);
    flags.push_back(cur > prev);
    prev = cur;
  }
  return flags;
}

/// AP from its definition: mean of precision@k over the ranks where recall increases, for recall ≤ depth.
inline double definitional_ap(const std::vector<bool>& flags, int num_gt, double depth) {
  if (num_gt == 0) return 0.0;
  std::vector<double> precision, recall;
  int tp = 0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    tp += flags[k] ? 1 : 0;
    precision.push_back(static_cast<double>(tp) / (k + 1));
    recall.push_back(static_cast<double>(tp) / num_gt);
  }
  double sum = 0.0;
  double last_recall = 0.0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (recall[k] > last_recall && recall[k] <= depth + 1e-12) sum += precision[k];
    last_recall = recall[k];
  }
  return sum / (depth * num_gt);
}

/// Offline re-scan of a decision sequence applying the three emission conditions.
struct Decision {
  int cls;
  double score;
};

inline std::vector<std::size_t> rescan(const std::vector<Decision>& seq, int K, double theta) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const bool action = seq[t].cls <= K;
    const bool changed = t == 0 || seq[t - 1].cls != seq[t].cls;
    if (action && changed && seq[t].score > theta) out.push_back(t);
  }
  return out;
}

}  // namespace oracle
