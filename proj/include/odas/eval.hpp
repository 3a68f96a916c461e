#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "odas/core.hpp"

namespace odas {

/// Ranking used everywhere in evaluation: score descending, then earlier time, then video id.
inline bool ranks_before(const ASPrediction& a, const ASPrediction& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.time != b.time) return a.time < b.time;
  return a.video_id < b.video_id;
}

inline std::vector<std::size_t> rank_predictions(std::span<const ASPrediction> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ranks_before(preds[a], preds[b]); });
  return order;
}

struct MatchResult {
  /// Indices into the prediction list, in rank order.
  std::vector<std::size_t> order;
  /// true_positive[r] is the outcome for preds[order[r]].
  std::vector<bool> true_positive;
  /// matched_gt[r] is the index of the ground truth claimed by rank r, if any.
  std::vector<std::optional<std::size_t>> matched_gt;
  int num_gt = 0;
};

/// Point-level matching without duplicates. Predictions are visited in rank order; a prediction
/// is correct when it can claim a ground truth of the same video and class with |Δt| < offset.
/// It takes the nearest free ground truth when one is in range; otherwise it may re-seat earlier
/// correct predictions onto other in-range ground truths (an augmenting path), which never
/// turns an earlier hit into a miss. The resulting hit set is, for every rank prefix, as large as
/// any duplicate-free assignment allows. Ambiguous ground truths are ignored.
inline MatchResult match_predictions(std::span<const ASPrediction> preds, std::span<const ASGroundTruth> gts,
                                     double offset) {
  MatchResult res;
  std::vector<std::size_t> gt_index;
  std::map<std::pair<std::string, ClassId>, std::vector<std::size_t>> gt_by_key;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].ambiguous) continue;
    ++res.num_gt;
    gt_by_key[{gts[g].video_id, gts[g].action_class}].push_back(g);
  }
  res.order = rank_predictions(preds);
  const std::size_t n = preds.size();

  // Candidate ground truths per prediction, nearest first (ties: earlier time, then index).
  std::vector<std::vector<std::size_t>> candidates(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = preds[i];
    auto it = gt_by_key.find({p.video_id, p.action_class});
    if (it == gt_by_key.end()) continue;
    for (std::size_t g : it->second) {
      if (std::abs(p.time - gts[g].as_time) < offset) candidates[i].push_back(g);
    }
    std::sort(candidates[i].begin(), candidates[i].end(), [&](std::size_t a, std::size_t b) {
      const double da = std::abs(p.time - gts[a].as_time);
      const double db = std::abs(p.time - gts[b].as_time);
      if (da != db) return da < db;
      if (gts[a].as_time != gts[b].as_time) return gts[a].as_time < gts[b].as_time;
      return a < b;
    });
  }

  std::vector<std::optional<std::size_t>> owner(gts.size());  // gt -> prediction index
  std::vector<std::optional<std::size_t>> claim(n);           // prediction -> gt
  std::vector<int> visited(gts.size(), -1);
  int stamp = 0;

  // Depth-first augmenting path from prediction i.
  auto augment = [&](auto&& self, std::size_t i) -> bool {
    for (std::size_t g : candidates[i]) {
      if (visited[g] == stamp) continue;
      visited[g] = stamp;
      if (!owner[g] || self(self, *owner[g])) {
        owner[g] = i;
        claim[i] = g;
        return true;
      }
    }
    return false;
  };

  res.true_positive.assign(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = res.order[r];
    bool hit = false;
    for (std::size_t g : candidates[i]) {
      if (!owner[g]) {
        owner[g] = i;
        claim[i] = g;
        hit = true;
        break;
      }
    }
    if (!hit && !candidates[i].empty()) {
      ++stamp;
      hit = augment(augment, i);
    }
    res.true_positive[r] = hit;
  }
  res.matched_gt.resize(n);
  for (std::size_t r = 0; r < n; ++r) res.matched_gt[r] = claim[res.order[r]];
  return res;
}

/// Mean of the precisions at each hit whose cumulative recall is within `depth`, normalized by
/// depth·num_gt. depth = 1 is standard non-interpolated AP. Returns 0 when num_gt = 0.
inline double average_precision(const std::vector<bool>& ranked_flags, int num_gt, double depth = 1.0) {
  require(num_gt >= 0, ErrorKind::input, "num_gt must be >= 0");
  require(depth > 0.0 && depth <= 1.0, ErrorKind::config, "AP depth must be in (0,1]");
  if (num_gt == 0) return 0.0;
  const double budget = depth * num_gt;
  // Extended precision keeps simple rational results (e.g. 5/6) correctly rounded.
  long double sum = 0.0L;
  int hits = 0;
  for (std::size_t r = 0; r < ranked_flags.size(); ++r) {
    if (!ranked_flags[r]) continue;
    ++hits;
    if (hits > budget * (1.0 + 1e-12)) break;
    sum += static_cast<long double>(hits) / static_cast<long double>(r + 1);
  }
  return static_cast<double>(sum / budget);
}

/// Per-class AP for every offset, mAP per offset over classes that have ground truth, and their mean.
inline EvalReport evaluate(std::span<const ASPrediction> preds, std::span<const ASGroundTruth> gts,
                           const EvalConfig& cfg, int num_action_classes, bool with_curves = false) {
  cfg.validate();
  require(num_action_classes >= 1, ErrorKind::config, "num_action_classes must be >= 1");
  std::vector<std::vector<ASPrediction>> class_preds(static_cast<std::size_t>(num_action_classes) + 1);
  std::vector<std::vector<ASGroundTruth>> class_gts(static_cast<std::size_t>(num_action_classes) + 1);
  for (const auto& p : preds) {
    require(p.action_class >= 1 && p.action_class <= num_action_classes, ErrorKind::input,
            "prediction class id " + std::to_string(p.action_class) + " outside 1.." +
                std::to_string(num_action_classes));
    class_preds[static_cast<std::size_t>(p.action_class)].push_back(p);
  }
  for (const auto& g : gts) {
    require(g.action_class >= 1 && g.action_class <= num_action_classes, ErrorKind::input,
            "ground-truth class id " + std::to_string(g.action_class) + " outside 1.." +
                std::to_string(num_action_classes));
    class_gts[static_cast<std::size_t>(g.action_class)].push_back(g);
  }

  EvalReport report;
  report.config = cfg;
  for (double offset : cfg.offset_thresholds) {
    double sum = 0.0;
    int classes_with_gt = 0;
    for (ClassId c = 1; c <= num_action_classes; ++c) {
      const auto& cp = class_preds[static_cast<std::size_t>(c)];
      auto match = match_predictions(cp, class_gts[static_cast<std::size_t>(c)], offset);
      const double ap = average_precision(match.true_positive, match.num_gt, cfg.ap_depth);
      report.per_class_ap[{c, offset}] = ap;
      DetectionCounts counts;
      counts.num_gt = match.num_gt;
      counts.true_positives =
          static_cast<int>(std::count(match.true_positive.begin(), match.true_positive.end(), true));
      counts.false_positives = static_cast<int>(match.true_positive.size()) - counts.true_positives;
      report.counts[{c, offset}] = counts;
      if (match.num_gt > 0) {
        sum += ap;
        ++classes_with_gt;
      }
      if (with_curves && match.num_gt > 0) {
        int hits = 0;
        for (std::size_t r = 0; r < match.true_positive.size(); ++r) {
          if (match.true_positive[r]) ++hits;
          report.curves.push_back({offset, c, static_cast<double>(hits) / match.num_gt,
                                   static_cast<double>(hits) / static_cast<double>(r + 1)});
        }
      }
    }
    report.map_per_offset[offset] = classes_with_gt > 0 ? sum / classes_with_gt : 0.0;
  }
  double total = 0.0;
  for (double offset : cfg.offset_thresholds) total += report.map_per_offset[offset];
  report.average_map = total / static_cast<double>(cfg.offset_thresholds.size());
  return report;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["ap_depth"] = r.config.ap_depth;
  j["offsets"] = r.config.offset_thresholds;
  j["per_class_ap"] = nlohmann::json::array();
  for (const auto& [key, ap] : r.per_class_ap) {
    j["per_class_ap"].push_back({{"class", key.first}, {"offset", key.second}, {"ap", ap}});
  }
  j["map_per_offset"] = nlohmann::json::array();
  for (double offset : r.config.offset_thresholds) {
    j["map_per_offset"].push_back({{"offset", offset}, {"map", r.map_per_offset.at(offset)}});
  }
  j["average_map"] = r.average_map;
  j["counts"] = nlohmann::json::array();
  for (const auto& [key, c] : r.counts) {
    j["counts"].push_back({{"class", key.first},
                           {"offset", key.second},
                           {"num_gt", c.num_gt},
                           {"true_positives", c.true_positives},
                           {"false_positives", c.false_positives}});
  }
  return j;
}

/// Columns: offset,class,recall,precision.
inline void write_curves_csv(std::ostream& out, const EvalReport& r) {
  out << "offset,class,recall,precision\n";
  out << std::setprecision(10);
  for (const auto& p : r.curves) {
    out << p.offset << ',' << p.action_class << ',' << p.recall << ',' << p.precision << '\n';
  }
}

}  // namespace odas
