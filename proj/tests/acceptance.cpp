// Acceptance run: one PASS/FAIL line per headline criterion. Exit status is non-zero when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "odas/odas.hpp"
#include "oracles.hpp"

using namespace odas;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

struct EvalInstance {
  int K = 1;
  std::vector<ASPrediction> preds;
  std::vector<ASGroundTruth> gts;
};

EvalInstance random_eval_instance(std::mt19937_64& rng, double time_step) {
  EvalInstance in;
  in.K = std::uniform_int_distribution<int>(1, 5)(rng);
  const int n_pred = std::uniform_int_distribution<int>(0, 20)(rng);
  const int n_gt = std::uniform_int_distribution<int>(0, 6)(rng);
  const int n_vid = std::uniform_int_distribution<int>(1, 2)(rng);
  auto cls = [&] { return std::uniform_int_distribution<int>(1, in.K)(rng); };
  auto vid = [&] { return "v" + std::to_string(std::uniform_int_distribution<int>(0, n_vid - 1)(rng)); };
  auto time = [&] { return std::uniform_int_distribution<int>(0, 60)(rng) * time_step; };
  for (int g = 0; g < n_gt; ++g)
    in.gts.push_back({vid(), time(), cls(), std::uniform_int_distribution<int>(0, 9)(rng) == 0});
  for (int p = 0; p < n_pred; ++p)
    in.preds.push_back({vid(), time(), cls(), std::uniform_int_distribution<int>(1, 8)(rng) / 8.0});
  return in;
}

template <typename T>
std::vector<T> of_class(const std::vector<T>& v, int c) {
  std::vector<T> out;
  for (const auto& x : v)
    if (x.action_class == c) out.push_back(x);
  return out;
}

void oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  int flag_mismatches = 0;
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto in = random_eval_instance(rng, 0.25);
    for (double offset : {0.3, 1.0, 2.5}) {
      for (int c = 1; c <= in.K; ++c) {
        auto cp = of_class(in.preds, c);
        auto cg = of_class(in.gts, c);
        auto m = match_predictions(cp, cg, offset);
        auto flags = oracle::exhaustive_flags(cp, cg, offset);
        const int live = static_cast<int>(std::count_if(cg.begin(), cg.end(), [](auto& g) { return !g.ambiguous; }));
        if (m.true_positive != flags) ++flag_mismatches;
        worst = std::max(worst, std::abs(average_precision(m.true_positive, m.num_gt) -
                                         oracle::definitional_ap(flags, live, 1.0)));
        ++compared;
      }
    }
  }
  const double sec = seconds_since(t0);
  report(flag_mismatches == 0 && worst <= 1e-12 && sec < 10.0, "evaluation oracle equivalence",
         "1000 instances, " + std::to_string(compared) + " class/offset comparisons, " +
             std::to_string(flag_mismatches) + " flag mismatches, max |dAP| " + fmt(worst, 15) + ", " + fmt(sec, 2) +
             " s");
}

void hand_cases() {
  std::vector<ASGroundTruth> gts{{"v", 10.0, 1, false}};
  std::vector<ASPrediction> preds{{"v", 10.5, 1, 0.9}, {"v", 10.2, 1, 0.8}};
  auto m = match_predictions(preds, gts, 1.0);
  const int tp = static_cast<int>(std::count(m.true_positive.begin(), m.true_positive.end(), true));
  const int fp = static_cast<int>(m.true_positive.size()) - tp;
  const double ap = average_precision(m.true_positive, m.num_gt);
  const double ranked = average_precision({true, false, true}, 2);
  report(tp == 1 && fp == 1 && ap == 1.0 && ranked == 5.0 / 6.0, "hand-worked protocol cases",
         "duplicate example TP " + std::to_string(tp) + " FP " + std::to_string(fp) + " AP " + fmt(ap, 6) +
             "; [TP,FP,TP] with 2 GT AP " + fmt(ranked, 17) + (ranked == 5.0 / 6.0 ? " (== 5/6)" : " (!= 5/6)"));
}

void gradient_verification() {
  const auto t0 = Clock::now();
  struct Shape {
    int k, dim, hidden, noise, gen_hidden;
  };
  const Shape shapes[] = {{1, 4, 8, 6, 8},     {2, 6, 10, 8, 12},   {3, 8, 16, 10, 16},  {4, 12, 12, 16, 10},
                          {5, 16, 20, 12, 24}, {5, 32, 16, 20, 16}, {2, 10, 24, 4, 32},  {3, 20, 8, 30, 8},
                          {4, 5, 32, 8, 20},   {5, 24, 24, 24, 24}};
  int failed_losses = 0;
  std::size_t checked = 0;
  std::size_t nonsmooth = 0;
  std::size_t roundoff = 0;
  double worst = 0.0;
  std::string worst_where;
  for (int i = 0; i < 10; ++i) {
    ModelConfig cfg;
    cfg.num_action_classes = shapes[i].k;
    cfg.feature_dim = shapes[i].dim;
    cfg.fc_hidden_dim = shapes[i].hidden;
    cfg.noise_dim = shapes[i].noise;
    cfg.gen_hidden_dim = shapes[i].gen_hidden;
    cfg.lambda = 0.5;
    for (const auto& r : verify_loss_gradients(cfg, 1000 + static_cast<std::uint64_t>(i))) {
      failed_losses += r.result.passed() ? 0 : 1;
      checked += r.result.checked;
      nonsmooth += r.result.nonsmooth;
      roundoff += r.result.roundoff_limited;
      if (r.result.worst_rel_error > worst) {
        worst = r.result.worst_rel_error;
        worst_where = r.loss + " " + r.result.worst_param + "[" + std::to_string(r.result.worst_index) + "] config " +
                      std::to_string(i);
      }
    }
  }
  // The injected fault must be caught, otherwise a pass means nothing.
  ModelConfig cfg;
  cfg.feature_dim = 8;
  cfg.fc_hidden_dim = 16;
  bool fault_caught = false;
  for (const auto& r : verify_loss_gradients(cfg, 1, true))
    if (r.loss == "classification") fault_caught = !r.result.passed();
  const double sec = seconds_since(t0);
  const double nonsmooth_share = static_cast<double>(nonsmooth) / static_cast<double>(checked);
  report(failed_losses == 0 && fault_caught && nonsmooth_share < 0.05 && sec < 60.0, "gradient verification",
         "10 configs x 6 losses, " + std::to_string(checked) + " entries, " + std::to_string(failed_losses) +
             " failing losses, max rel err " + sci(worst) + " (" + worst_where + "), " +
             std::to_string(nonsmooth) + " kink-skipped, " + std::to_string(roundoff) +
             " at roundoff level, injected fault " + (fault_caught ? "caught" : "missed") + ", " + fmt(sec, 1) +
             " s");
}

void experiments(const cli::RunConfig& rc) {
  const auto t0 = Clock::now();
  experiment::AblationOptions opt;
  auto result = experiment::run_ablation(rc, opt, [](const experiment::RunResult& r) {
    std::cout << "  seed " << r.seed << " " << std::left << std::setw(9) << r.methods << std::right << " test mAP "
              << fmt(r.stride1.test_map) << (r.stride8 ? "  stride-8 " + fmt(r.stride8->test_map) : "")
              << std::endl;
  });
  const double sec = seconds_since(t0);

  std::map<std::string, double> med;
  for (const auto& m : opt.method_sets) med[m] = experiment::median(result.test_maps(m));
  bool singles_ok = true;
  bool all_is_max = true;
  for (const auto& m : opt.method_sets) {
    if (m != "none" && m != "all") singles_ok = singles_ok && med[m] >= med["none"];
    if (m != "all") all_is_max = all_is_max && med["all"] > med[m];
  }
  std::ostringstream medians;
  for (const auto& m : opt.method_sets) medians << m << " " << fmt(med[m]) << ", ";
  report(med["all"] > med["none"] && singles_ok && all_is_max && sec < 900.0, "method ordering",
         "median test average mAP over 5 seeds: " + medians.str() + fmt(sec, 0) + " s");

  double worst_random = 0.0;
  std::vector<double> randoms;
  for (const auto& g : result.random_guess) {
    worst_random = std::max(worst_random, g.test_map);
    randoms.push_back(g.test_map);
  }
  const auto trained = result.test_maps("all");
  const double worst_trained = *std::min_element(trained.begin(), trained.end());
  report(worst_random < 0.05 && worst_trained > 0.5, "random-guess gap",
         "random guess max " + fmt(worst_random) + " (median " + fmt(experiment::median(randoms)) +
             "), trained all-methods min " + fmt(worst_trained) + " (median " + fmt(med["all"]) + ")");

  std::vector<double> s8;
  double worst_ratio = 1e9;
  for (const auto& r : result.runs) {
    if (!r.stride8) continue;
    s8.push_back(r.stride8->test_map);
    worst_ratio = std::min(worst_ratio, r.stride8->test_map / r.stride1.test_map);
  }
  const double ratio = experiment::median(s8) / med["all"];
  report(ratio >= 0.9, "stride robustness",
         "all-methods median mAP stride 8 " + fmt(experiment::median(s8)) + " vs stride 1 " + fmt(med["all"]) +
             ", retention " + fmt(100.0 * ratio, 1) + "% (worst seed " + fmt(100.0 * worst_ratio, 1) + "%)");
}

void online_causality() {
  ModelConfig cfg;
  cfg.num_action_classes = 4;
  cfg.feature_dim = 8;
  cfg.fc_hidden_dim = 16;
  std::mt19937_64 rng(99);
  int mismatches = 0;
  std::size_t emissions = 0;
  for (int trial = 0; trial < 100; ++trial) {
    nn::Discriminator d(cfg, 500 + static_cast<std::uint64_t>(trial));
    const int n = std::uniform_int_distribution<int>(20, 400)(rng);
    FeatureStream fs("s" + std::to_string(trial), cfg.feature_dim);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Vector row(static_cast<std::size_t>(cfg.feature_dim));
    for (int i = 0; i < n; ++i) {
      for (double& v : row) v = static_cast<double>(static_cast<float>(u(rng)));
      fs.push_back(row);
    }
    const double fps = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? 6.0 : 30.0;
    const double theta = std::uniform_int_distribution<int>(0, 10)(rng) / 20.0;
    const auto full = emit_predictions(score_stream(d, fs, fps, 1), cfg.num_action_classes, theta);
    emissions += full.size();
    const int cut = std::uniform_int_distribution<int>(1, n)(rng);
    DetectorState state(fs.video_id(), cfg.num_action_classes, theta);
    std::vector<ASPrediction> prefix;
    for (int e = 0; e < cut; ++e)
      if (auto p = state.step(d, fs.window(e), e / fps)) prefix.push_back(*p);
    std::vector<ASPrediction> expect;
    for (const auto& p : full)
      if (p.time < cut / fps) expect.push_back(p);
    if (prefix != expect) ++mismatches;
  }
  report(mismatches == 0 && emissions > 0, "online causality",
         "100 streams, " + std::to_string(emissions) + " full-stream emissions, " + std::to_string(mismatches) +
             " prefix mismatches");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(const std::string& config) {
  const auto root = fs::temp_directory_path() / ("odas_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::string> outputs[2];
  bool commands_ok = true;
  for (int run = 0; run < 2; ++run) {
    const auto dir = root / ("run" + std::to_string(run));
    const auto p = [&](const char* name) { return (dir / name).string(); };
    const std::vector<std::vector<std::string>> steps{
        {"synth", "--config", config, "--num-videos", "150", "--out", p("train")},
        {"synth", "--config", config, "--first-video", "150", "--num-videos", "50", "--out", p("test")},
        {"train", "--config", config, "--data", p("train"), "--out", p("model.bin"), "--log", p("loss.csv")},
        {"detect", "--config", config, "--model", p("model.bin"), "--data", p("test"), "--train-data", p("train"),
         "--out", p("pred.csv")},
        {"evaluate", "--config", config, "--predictions", p("pred.csv"), "--ground-truth", p("test"), "--out",
         p("report.json")}};
    for (auto args : steps) {
      args.insert(args.begin(), "odas");
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream out;
      std::ostringstream err;
      if (cli::run(static_cast<int>(argv.size()), argv.data(), out, err) != 0) {
        commands_ok = false;
        std::cout << "  " << args[1] << " failed: " << err.str();
      }
    }
    for (const char* f : {"model.bin", "loss.csv", "pred.csv", "report.json"}) outputs[run].push_back(slurp(p(f)));
  }
  fs::remove_all(root);
  bool identical = commands_ok;
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < outputs[0].size(); ++i) {
    identical = identical && !outputs[0][i].empty() && outputs[0][i] == outputs[1][i];
    bytes += outputs[0][i].size();
  }
  report(identical, "determinism",
         "two independent synth/train/detect/evaluate runs; checkpoint, loss CSV, predictions CSV and report JSON " +
             std::string(identical ? "bit-identical" : "DIFFER") + " (" + std::to_string(bytes) + " bytes)");
}

void ap_monotonicity() {
  std::mt19937_64 rng(5150);
  EvalConfig cfg;  // offsets 1..10 s
  int violations = 0;
  int sequences = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto in = random_eval_instance(rng, 0.5);  // times over 0..30 s
    auto r = evaluate(in.preds, in.gts, cfg, in.K);
    for (int c = 1; c <= in.K; ++c) {
      ++sequences;
      double prev = 0.0;
      for (double off : cfg.offset_thresholds) {
        const double ap = r.per_class_ap.at({c, off});
        if (ap < prev) ++violations;
        prev = ap;
      }
    }
  }
  report(violations == 0, "AP monotonicity",
         "200 instances, " + std::to_string(sequences) + " per-class AP sequences over offsets 1..10 s, " +
             std::to_string(violations) + " decreases");
}

}  // namespace

int main() {
  const std::string config = std::string(ODAS_SOURCE_DIR) + "/configs/default.json";
  const auto rc = cli::load_config(config, std::nullopt);
  oracle_equivalence();
  hand_cases();
  gradient_verification();
  experiments(rc);
  online_causality();
  determinism(config);
  ap_monotonicity();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
