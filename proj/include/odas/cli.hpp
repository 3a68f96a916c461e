#pragma once

// Command-line front end. Every subcommand reads one JSON config (sections "model", "train",
// "synth", "eval", "detect" plus a top-level "seed"); flags override individual values.
// Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "odas/checkpoint.hpp"
#include "odas/corpus_io.hpp"
#include "odas/dataset.hpp"
#include "odas/detector.hpp"
#include "odas/eval.hpp"
#include "odas/gradcheck.hpp"
#include "odas/training.hpp"

namespace odas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Everything a run needs, resolved from defaults, the JSON config and the seed override.
struct RunConfig {
  std::uint64_t seed = 7;
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  EvalConfig eval;
  std::vector<double> threshold_grid = default_threshold_grid();
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& section, const char* key, T& field) {
  if (section.contains(key)) field = section.at(key).get<T>();
}

inline void check_known_keys(const nlohmann::json& section, const std::string& name,
                             std::initializer_list<const char*> keys) {
  require(section.is_object(), ErrorKind::config, "config section '" + name + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    require(known, ErrorKind::config, "unknown key '" + key + "' in config section '" + name + "'");
  }
}

inline nlohmann::json section(const nlohmann::json& doc, const char* name) {
  return doc.contains(name) ? doc.at(name) : nlohmann::json::object();
}

}  // namespace detail

/// Parses a config document. Unknown keys are rejected so that typos do not silently fall back
/// to defaults.
inline RunConfig parse_config(const nlohmann::json& doc) {
  RunConfig rc;
  try {
    require(doc.is_object(), ErrorKind::config, "config must be a JSON object");
    detail::check_known_keys(doc, "<root>", {"seed", "model", "train", "synth", "eval", "detect"});
    detail::read_field(doc, "seed", rc.seed);

    const auto m = detail::section(doc, "model");
    detail::check_known_keys(m, "model",
                             {"num_action_classes", "feature_dim", "fc_hidden_dim", "noise_dim", "gen_hidden_dim",
                              "lambda", "window_len", "stride"});
    detail::read_field(m, "num_action_classes", rc.model.num_action_classes);
    detail::read_field(m, "feature_dim", rc.model.feature_dim);
    detail::read_field(m, "fc_hidden_dim", rc.model.fc_hidden_dim);
    detail::read_field(m, "noise_dim", rc.model.noise_dim);
    detail::read_field(m, "gen_hidden_dim", rc.model.gen_hidden_dim);
    detail::read_field(m, "lambda", rc.model.lambda);
    detail::read_field(m, "window_len", rc.model.window_len);
    detail::read_field(m, "stride", rc.model.stride);

    const auto t = detail::section(doc, "train");
    detail::check_known_keys(t, "train",
                             {"batch_size", "lambda", "lr_pretrain", "lr_generator", "lr_discriminator", "momentum",
                              "pretrain_iters", "gan_iters", "adaptive_sampling"});
    rc.train.lambda = rc.model.lambda;
    detail::read_field(t, "batch_size", rc.train.batch_size);
    detail::read_field(t, "lambda", rc.train.lambda);
    detail::read_field(t, "lr_pretrain", rc.train.lr_pretrain);
    detail::read_field(t, "lr_generator", rc.train.lr_generator);
    detail::read_field(t, "lr_discriminator", rc.train.lr_discriminator);
    detail::read_field(t, "momentum", rc.train.momentum);
    detail::read_field(t, "pretrain_iters", rc.train.pretrain_iters);
    detail::read_field(t, "gan_iters", rc.train.gan_iters);
    detail::read_field(t, "adaptive_sampling", rc.train.adaptive_sampling);
    rc.model.lambda = rc.train.lambda;

    const auto s = detail::section(doc, "synth");
    detail::check_known_keys(s, "synth",
                             {"num_videos", "first_video", "fps", "frames_per_video", "min_instances", "max_instances",
                              "min_instance_frames", "max_instance_frames", "min_gap_frames", "center_scale",
                              "frame_noise", "max_distractors", "distractor_frames", "distractor_mix",
                              "ambiguous_fraction", "id_prefix"});
    detail::read_field(s, "num_videos", rc.synth.num_videos);
    detail::read_field(s, "first_video", rc.synth.first_video);
    detail::read_field(s, "fps", rc.synth.fps);
    detail::read_field(s, "frames_per_video", rc.synth.frames_per_video);
    detail::read_field(s, "min_instances", rc.synth.min_instances);
    detail::read_field(s, "max_instances", rc.synth.max_instances);
    detail::read_field(s, "min_instance_frames", rc.synth.min_instance_frames);
    detail::read_field(s, "max_instance_frames", rc.synth.max_instance_frames);
    detail::read_field(s, "min_gap_frames", rc.synth.min_gap_frames);
    detail::read_field(s, "center_scale", rc.synth.center_scale);
    detail::read_field(s, "frame_noise", rc.synth.frame_noise);
    detail::read_field(s, "max_distractors", rc.synth.max_distractors);
    detail::read_field(s, "distractor_frames", rc.synth.distractor_frames);
    detail::read_field(s, "distractor_mix", rc.synth.distractor_mix);
    detail::read_field(s, "ambiguous_fraction", rc.synth.ambiguous_fraction);
    detail::read_field(s, "id_prefix", rc.synth.id_prefix);

    const auto e = detail::section(doc, "eval");
    detail::check_known_keys(e, "eval", {"offsets", "ap_depth"});
    detail::read_field(e, "offsets", rc.eval.offset_thresholds);
    detail::read_field(e, "ap_depth", rc.eval.ap_depth);

    const auto d = detail::section(doc, "detect");
    detail::check_known_keys(d, "detect", {"threshold_grid"});
    detail::read_field(d, "threshold_grid", rc.threshold_grid);
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::config, std::string("config: ") + ex.what());
  }
  // The synthetic corpus always matches the model's label space and window geometry.
  rc.synth.num_action_classes = rc.model.num_action_classes;
  rc.synth.feature_dim = rc.model.feature_dim;
  rc.synth.window_len = rc.model.window_len;
  rc.model.validate();
  rc.train.validate();
  rc.eval.validate();
  return rc;
}

/// Seed precedence: explicit flag, then ODAS_SEED, then the config file.
inline void apply_seed(RunConfig& rc, std::optional<std::uint64_t> flag) {
  if (const char* env = std::getenv("ODAS_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      require(used == std::string(env).size(), ErrorKind::config, "ODAS_SEED must be an unsigned integer");
      rc.seed = v;
    } catch (const std::logic_error&) {
      fail(ErrorKind::config, "ODAS_SEED must be an unsigned integer");
    }
  }
  if (flag) rc.seed = *flag;
  rc.synth.seed = rc.seed;
  rc.train.seed = rc.seed;
}

inline RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_flag) {
  nlohmann::json doc = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::input, "cannot open config " + path);
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::config, path + ": " + ex.what());
    }
  }
  auto rc = parse_config(doc);
  apply_seed(rc, seed_flag);
  return rc;
}

/// Seeds for network initialization derived from the run seed.
inline std::uint64_t discriminator_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ull + 0xD1; }
inline std::uint64_t generator_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ull + 0x6E; }

struct Methods {
  bool adaptive = false;
  bool tc = false;
  bool gan = false;
};

inline Methods parse_methods(const std::string& list) {
  Methods m;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty() || item == "none") continue;
    if (item == "adaptive") {
      m.adaptive = true;
    } else if (item == "tc") {
      m.tc = true;
    } else if (item == "gan") {
      m.gan = true;
    } else if (item == "all") {
      m = {true, true, true};
    } else {
      fail(ErrorKind::config, "unknown method '" + item + "' (expected adaptive, tc, gan)");
    }
  }
  return m;
}

/// Result of training one model; the checkpoint always carries the generator.
struct TrainedModel {
  nn::Discriminator discriminator;
  nn::Generator generator;
  LossCurve curve;
};

/// Pretraining followed by optional GAN training with the selected methods switched on.
inline TrainedModel train_model(const RunConfig& rc, const Methods& methods, const TrainingData& data) {
  TrainConfig tc = rc.train;
  tc.adaptive_sampling = methods.adaptive;
  if (!methods.tc) tc.lambda = 0.0;
  if (!methods.gan) tc.gan_iters = 0;
  TrainedModel out{nn::Discriminator(rc.model, discriminator_seed(rc.seed)),
                   nn::Generator(rc.model, generator_seed(rc.seed)), {}};
  out.curve = pretrain(out.discriminator, data, tc);
  auto gan = train_gan(out.generator, out.discriminator, data, tc, tc.pretrain_iters);
  out.curve.insert(out.curve.end(), gan.begin(), gan.end());
  return out;
}

inline std::vector<double> parse_offsets(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(used == item.size(), ErrorKind::config, "bad offset '" + item + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::config, "bad offset '" + item + "'");
    }
  }
  return out;
}

/// Accepts either an annotations JSON file or a corpus directory containing one.
inline std::vector<VideoAnnotation> load_ground_truth(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return load_annotations(path / "annotations.json");
  return load_annotations(path);
}

inline std::vector<ScoredStream> score_corpus(const nn::Discriminator* model, const Corpus& corpus, int stride,
                                              std::mt19937_64* guess_rng, int num_action_classes) {
  std::vector<ScoredStream> out;
  for (std::size_t i = 0; i < corpus.annotations.size(); ++i) {
    const auto& a = corpus.annotations[i];
    if (guess_rng != nullptr) {
      out.push_back(random_guess_stream(*guess_rng, a.video_id, a.num_frames, a.fps, stride, num_action_classes));
    } else {
      out.push_back(score_stream(*model, corpus.streams[i], a.fps, stride, a.num_frames));
    }
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path.string());
  out << text;
}

// Subcommands. Each returns normally on success and throws odas::Error otherwise.

inline void cmd_synth(const RunConfig& rc, const std::string& out_dir, std::ostream& out) {
  auto corpus = synth_corpus(rc.synth);
  save_corpus(out_dir, corpus.annotations, corpus.streams);
  std::vector<int> per_class(static_cast<std::size_t>(rc.model.num_action_classes) + 1, 0);
  int instances = 0;
  for (const auto& a : corpus.annotations)
    for (const auto& inst : a.instances) {
      ++instances;
      ++per_class[static_cast<std::size_t>(inst.action_class)];
    }
  out << "videos " << corpus.annotations.size() << "\ninstances " << instances << '\n';
  for (int c = 1; c <= rc.model.num_action_classes; ++c) out << "class " << c << ' ' << per_class[static_cast<std::size_t>(c)] << '\n';
}

inline void cmd_train(const RunConfig& rc, const std::string& data_dir, const std::string& model_path,
                      const Methods& methods, const std::string& log_path, std::ostream& out) {
  auto corpus = load_corpus(data_dir);
  auto data = build_training_data(corpus.annotations, corpus.streams, rc.model);
  auto trained = train_model(rc, methods, data);
  save_checkpoint(model_path, trained.discriminator, &trained.generator);
  if (!log_path.empty()) {
    std::ostringstream csv;
    write_loss_csv(csv, trained.curve);
    write_text_file(log_path, csv.str());
  }
  out << "start windows " << data.starts.size() << "\nother windows " << data.others.size() << "\npairs "
      << data.pairs.size() << "\niterations " << trained.curve.size() << '\n';
}

struct DetectOptions {
  std::string model_path;
  std::string data_dir;
  std::string out_path;
  std::string threshold = "auto";
  std::optional<int> stride;
  std::string train_data_dir;
  bool random_guess = false;
};

inline void cmd_detect(const RunConfig& rc, const DetectOptions& opt, std::ostream& out) {
  std::optional<nn::Discriminator> model;
  int k = rc.model.num_action_classes;
  if (!opt.random_guess) {
    require(!opt.model_path.empty(), ErrorKind::config, "--model is required unless --random-guess is set");
    model = load_checkpoint(opt.model_path).discriminator;
    k = model->num_action_classes();
  }
  const int stride = opt.stride.value_or(rc.model.stride);
  require(stride >= 1, ErrorKind::config, "stride must be >= 1");
  auto corpus = load_corpus(opt.data_dir);
  if (model) {
    for (const auto& s : corpus.streams) {
      require(s.dim() == model->feature_dim(), ErrorKind::shape,
              s.video_id() + ": feature dimension " + std::to_string(s.dim()) + " does not match model input " +
                  std::to_string(model->feature_dim()));
    }
  }
  std::mt19937_64 guess_rng(rc.seed);
  double theta = 0.0;
  if (opt.threshold == "auto") {
    require(!opt.train_data_dir.empty(), ErrorKind::config, "--threshold auto needs --train-data");
    auto train = load_corpus(opt.train_data_dir);
    auto scored = score_corpus(model ? &*model : nullptr, train, stride, opt.random_guess ? &guess_rng : nullptr, k);
    auto search = grid_search_threshold(scored, ground_truths(train.annotations), rc.threshold_grid, rc.eval, k);
    theta = search.threshold;
    out << "threshold " << theta << " (train average mAP " << search.average_map << ")\n";
  } else {
    try {
      std::size_t used = 0;
      theta = std::stod(opt.threshold, &used);
      require(used == opt.threshold.size(), ErrorKind::config, "bad --threshold");
    } catch (const std::logic_error&) {
      fail(ErrorKind::config, "--threshold must be 'auto' or a number in [0,1]");
    }
    require(theta >= 0.0 && theta <= 1.0, ErrorKind::config, "--threshold must be in [0,1]");
  }
  auto scored = score_corpus(model ? &*model : nullptr, corpus, stride, opt.random_guess ? &guess_rng : nullptr, k);
  auto preds = emit_predictions(scored, k, theta);
  std::ostringstream csv;
  write_predictions_csv(csv, preds);
  write_text_file(opt.out_path, csv.str());
  out << "predictions " << preds.size() << '\n';
}

struct EvaluateOptions {
  std::string predictions;
  std::string ground_truth;
  std::string offsets;
  std::optional<double> depth;
  std::optional<int> num_classes;
  std::string out_path;
  std::string curves_path;
};

inline void cmd_evaluate(const RunConfig& rc, const EvaluateOptions& opt, std::ostream& out) {
  EvalConfig ec = rc.eval;
  if (!opt.offsets.empty()) ec.offset_thresholds = parse_offsets(opt.offsets);
  if (opt.depth) ec.ap_depth = *opt.depth;
  ec.validate();
  std::ifstream in(opt.predictions);
  require(static_cast<bool>(in), ErrorKind::input, "cannot open predictions " + opt.predictions);
  auto preds = read_predictions_csv(in);
  auto anns = load_ground_truth(opt.ground_truth);
  const int k = opt.num_classes.value_or(rc.model.num_action_classes);
  auto report = evaluate(preds, ground_truths(anns), ec, k, !opt.curves_path.empty());
  const auto json = report_to_json(report).dump(2) + "\n";
  if (opt.out_path.empty()) {
    out << json;
  } else {
    write_text_file(opt.out_path, json);
    out << "average mAP " << std::fixed << std::setprecision(6) << report.average_map << '\n';
  }
  if (!opt.curves_path.empty()) {
    std::ostringstream csv;
    write_curves_csv(csv, report);
    write_text_file(opt.curves_path, csv.str());
  }
}

/// Returns true when every loss passes.
inline bool cmd_gradcheck(const RunConfig& rc, bool inject_fault, std::ostream& out) {
  auto results = verify_loss_gradients(rc.model, rc.seed, inject_fault);
  bool ok = true;
  out << std::left << std::setw(16) << "loss" << std::setw(15) << "network" << std::setw(9) << "checked"
      << std::setw(11) << "nonsmooth" << std::setw(10) << "roundoff" << std::setw(14) << "max rel err" << std::setw(18) << "worst param"
      << "status\n";
  for (const auto& r : results) {
    const auto& g = r.result;
    ok = ok && g.passed();
    std::ostringstream worst;
    worst << g.worst_param << '[' << g.worst_index << ']';
    std::ostringstream err;
    err << std::scientific << std::setprecision(2) << g.worst_rel_error;
    out << std::left << std::setw(16) << r.loss << std::setw(15) << r.network << std::setw(9) << g.checked
        << std::setw(11) << g.nonsmooth << std::setw(10) << g.roundoff_limited << std::setw(14) << err.str() << std::setw(18) << worst.str()
        << (g.passed() ? "PASS" : "FAIL") << '\n';
  }
  return ok;
}

inline int exit_code_for(const Error& e) { return e.numerical() ? kExitNumerical : kExitInput; }

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online detection of action starts: synthesize, train, detect, evaluate, gradcheck"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Seed override (takes precedence over ODAS_SEED and the config)");
  };

  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus");
  add_common(synth);
  std::string synth_out;
  std::optional<int> synth_first;
  std::optional<int> synth_count;
  synth->add_option("--out", synth_out, "Output corpus directory")->required();
  synth->add_option("--first-video", synth_first, "Index of the first video (held-out splits reuse the seed)");
  synth->add_option("--num-videos", synth_count, "Number of videos to generate");

  auto* train = app.add_subcommand("train", "Train a model on a corpus");
  add_common(train);
  std::string data_dir;
  std::string model_out;
  std::string methods = "adaptive,tc,gan";
  std::string log_path;
  train->add_option("--data", data_dir, "Corpus directory")->required();
  train->add_option("--out", model_out, "Checkpoint path")->required();
  train->add_option("--methods", methods, "Comma list of adaptive,tc,gan (empty for none)");
  train->add_option("--log", log_path, "Loss curve CSV path");

  auto* detect = app.add_subcommand("detect", "Stream corpus videos through the detector");
  add_common(detect);
  DetectOptions dopt;
  detect->add_option("--model", dopt.model_path, "Checkpoint path");
  detect->add_option("--data", dopt.data_dir, "Corpus directory to detect on")->required();
  detect->add_option("--out", dopt.out_path, "Predictions CSV path")->required();
  detect->add_option("--threshold", dopt.threshold, "'auto' (grid search on --train-data) or a value");
  detect->add_option("--stride", dopt.stride, "Window stride in frames");
  detect->add_option("--train-data", dopt.train_data_dir, "Corpus used for the threshold grid search");
  detect->add_flag("--random-guess", dopt.random_guess, "Replace network scores by random guesses");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against annotations");
  add_common(evaluate_cmd);
  EvaluateOptions eopt;
  evaluate_cmd->add_option("--predictions", eopt.predictions, "Predictions CSV")->required();
  evaluate_cmd->add_option("--ground-truth", eopt.ground_truth, "Annotations JSON or corpus directory")->required();
  evaluate_cmd->add_option("--offsets", eopt.offsets, "Comma list of offset thresholds in seconds");
  evaluate_cmd->add_option("--depth", eopt.depth, "AP depth X in (0,1]");
  evaluate_cmd->add_option("--num-classes", eopt.num_classes, "Number of action classes K");
  evaluate_cmd->add_option("--out", eopt.out_path, "Report JSON path (stdout when omitted)");
  evaluate_cmd->add_option("--curves", eopt.curves_path, "Precision/recall curves CSV path");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  add_common(gradcheck);
  bool inject_fault = false;
  gradcheck->add_flag("--inject-fault", inject_fault, "Corrupt one analytic gradient (self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    auto rc = load_config(config_path, seed);
    if (synth->parsed()) {
      if (synth_first) rc.synth.first_video = *synth_first;
      if (synth_count) rc.synth.num_videos = *synth_count;
      cmd_synth(rc, synth_out, out);
    } else if (train->parsed()) {
      cmd_train(rc, data_dir, model_out, parse_methods(methods), log_path, out);
    } else if (detect->parsed()) {
      cmd_detect(rc, dopt, out);
    } else if (evaluate_cmd->parsed()) {
      cmd_evaluate(rc, eopt, out);
    } else if (gradcheck->parsed()) {
      if (!cmd_gradcheck(rc, inject_fault, out)) {
        err << "gradient check failed\n";
        return kExitNumerical;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace odas::cli
