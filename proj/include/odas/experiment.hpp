#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "odas/cli.hpp"
#include "odas/corpus_io.hpp"
#include "odas/detector.hpp"
#include "odas/eval.hpp"

namespace odas::experiment {

/// One synthetic corpus cut into a training split and a held-out split. Both halves come from the
/// same generator call so they share cluster centers.
struct Split {
  Corpus train;
  Corpus test;
};

inline Split make_split(const cli::RunConfig& rc, int train_videos) {
  require(train_videos >= 1 && train_videos < rc.synth.num_videos, ErrorKind::config,
          "train split must leave at least one held-out video");
  auto corpus = synth_corpus(rc.synth);
  Split s;
  const auto n = static_cast<std::size_t>(train_videos);
  s.train.annotations.assign(corpus.annotations.begin(), corpus.annotations.begin() + static_cast<long>(n));
  s.train.streams.assign(corpus.streams.begin(), corpus.streams.begin() + static_cast<long>(n));
  s.test.annotations.assign(corpus.annotations.begin() + static_cast<long>(n), corpus.annotations.end());
  s.test.streams.assign(corpus.streams.begin() + static_cast<long>(n), corpus.streams.end());
  return s;
}

struct DetectionScore {
  double threshold = 0.0;
  double train_map = 0.0;
  double test_map = 0.0;
};

/// Threshold chosen by grid search on the training split, then applied to the held-out split.
/// A null model means random guessing, drawn from `guess_seed`.
inline DetectionScore score_detector(const nn::Discriminator* model, const cli::RunConfig& rc, const Split& split,
                                     int stride, std::uint64_t guess_seed = 0) {
  const int k = rc.model.num_action_classes;
  std::mt19937_64 rng(guess_seed);
  auto* guess = model == nullptr ? &rng : nullptr;
  auto train_scored = cli::score_corpus(model, split.train, stride, guess, k);
  auto search = grid_search_threshold(train_scored, ground_truths(split.train.annotations), rc.threshold_grid,
                                      rc.eval, k);
  auto test_scored = cli::score_corpus(model, split.test, stride, guess, k);
  auto preds = emit_predictions(test_scored, k, search.threshold);
  DetectionScore out;
  out.threshold = search.threshold;
  out.train_map = search.average_map;
  out.test_map = evaluate(preds, ground_truths(split.test.annotations), rc.eval, k).average_map;
  return out;
}

/// Canonical ablation grid: no method, each method alone, all three together.
inline std::vector<std::string> default_method_sets() { return {"none", "adaptive", "tc", "gan", "all"}; }

struct RunResult {
  std::string methods;
  std::uint64_t seed = 0;
  DetectionScore stride1;
  std::optional<DetectionScore> stride8;
};

struct AblationResult {
  std::vector<RunResult> runs;
  std::vector<DetectionScore> random_guess;  // one per seed

  std::vector<double> test_maps(const std::string& methods) const {
    std::vector<double> v;
    for (const auto& r : runs)
      if (r.methods == methods) v.push_back(r.stride1.test_map);
    return v;
  }
};

inline double median(std::vector<double> v) {
  require(!v.empty(), ErrorKind::contract, "median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct AblationOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> method_sets = default_method_sets();
  int train_videos = 150;
  /// Also measure the full-method model at this stride (0 disables).
  int extra_stride = 8;
  bool random_guess = true;
};

template <typename Progress>
AblationResult run_ablation(const cli::RunConfig& base, const AblationOptions& opt, Progress&& progress) {
  AblationResult result;
  for (std::uint64_t seed : opt.seeds) {
    cli::RunConfig rc = base;
    rc.seed = seed;
    rc.synth.seed = seed;
    rc.train.seed = seed;
    const auto split = make_split(rc, opt.train_videos);
    const auto data = build_training_data(split.train.annotations, split.train.streams, rc.model);
    for (const auto& m : opt.method_sets) {
      auto trained = cli::train_model(rc, cli::parse_methods(m), data);
      RunResult r;
      r.methods = m;
      r.seed = seed;
      r.stride1 = score_detector(&trained.discriminator, rc, split, 1);
      if (opt.extra_stride > 1 && m == "all") {
        r.stride8 = score_detector(&trained.discriminator, rc, split, opt.extra_stride);
      }
      progress(r);
      result.runs.push_back(r);
    }
    if (opt.random_guess) result.random_guess.push_back(score_detector(nullptr, rc, split, 1, seed ^ 0xA5A5u));
  }
  return result;
}

inline nlohmann::json to_json(const AblationResult& a) {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : a.runs) {
    nlohmann::json e{{"methods", r.methods},
                     {"seed", r.seed},
                     {"threshold", r.stride1.threshold},
                     {"train_average_map", r.stride1.train_map},
                     {"test_average_map", r.stride1.test_map}};
    if (r.stride8) e["stride8_test_average_map"] = r.stride8->test_map;
    j["runs"].push_back(e);
  }
  j["random_guess_test_average_map"] = nlohmann::json::array();
  for (const auto& g : a.random_guess) j["random_guess_test_average_map"].push_back(g.test_map);
  nlohmann::json med;
  std::vector<std::string> seen;
  for (const auto& r : a.runs)
    if (std::find(seen.begin(), seen.end(), r.methods) == seen.end()) seen.push_back(r.methods);
  for (const auto& m : seen) med[m] = median(a.test_maps(m));
  j["median_test_average_map"] = med;
  return j;
}

}  // namespace odas::experiment
