#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "odas/nn.hpp"
#include "odas/training.hpp"

namespace odas {

struct LossGradientCheck {
  std::string loss;
  std::string network;
  nn::GradCheckResult result;
};

namespace detail {

inline std::vector<WindowSample> random_windows(std::mt19937_64& rng, const ModelConfig& cfg, int n) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<int> label(1, cfg.background_class());
  std::vector<WindowSample> out;
  for (int i = 0; i < n; ++i) {
    Vector f(static_cast<std::size_t>(cfg.feature_dim));
    for (double& v : f) v = u(rng);
    const ClassId y = label(rng);
    out.emplace_back("g", i, i * 0.1, std::move(f), y, cfg.is_action(y) ? Role::inside : Role::background, cfg);
  }
  return out;
}

inline std::vector<StartPair> random_pairs(std::mt19937_64& rng, const ModelConfig& cfg, int n) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<int> label(1, cfg.num_action_classes);
  std::vector<StartPair> out;
  for (int i = 0; i < n; ++i) {
    Vector a(static_cast<std::size_t>(cfg.feature_dim));
    Vector b(a.size());
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    const ClassId y = label(rng);
    out.emplace_back(WindowSample("g", i, i * 0.1, a, y, Role::start, cfg),
                     WindowSample("g", i + cfg.window_len, i * 0.1 + 1.0, b, y, Role::follow_up, cfg));
  }
  return out;
}

}  // namespace detail

/// Checks every training loss (and the combined discriminator objective) against central finite
/// differences on randomly initialized networks and random inputs drawn from `seed`. With
/// `inject_fault`, one analytic classification gradient entry is deliberately corrupted so that
/// the check must report a failure.
inline std::vector<LossGradientCheck> verify_loss_gradients(const ModelConfig& cfg, std::uint64_t seed,
                                                            bool inject_fault = false, int batch = 8,
                                                            const nn::GradCheckOptions& opt = {}) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  nn::Discriminator d(cfg, rng());
  nn::Generator g(cfg, rng());
  // Non-trivial normalization parameters exercise the full batch-norm gradient, and non-zero
  // biases keep rectifier inputs away from exact zeros.
  std::normal_distribution<double> jitter(0.0, 0.2);
  for (auto* layer : {&d.fc6, &d.fc7, &d.fc8, &g.fc1, &g.fc2})
    for (double& v : layer->bias) v = 0.1 + jitter(rng);
  for (auto* bn : {&g.bn1, &g.bn2}) {
    for (double& v : bn->gamma) v = 1.0 + jitter(rng);
    for (double& v : bn->beta) v = 0.5 + jitter(rng);
  }
  const auto windows = detail::random_windows(rng, cfg, batch);
  const auto labeled = to_batch(windows);
  const auto pairs = detail::random_pairs(rng, cfg, batch / 2);
  nn::Matrix start_features = sample_noise(rng, static_cast<std::size_t>(batch), cfg.feature_dim);
  for (double& v : start_features.values()) v = std::abs(v);
  const auto noise = sample_noise(rng, static_cast<std::size_t>(batch), cfg.noise_dim);
  const auto fake_noise = sample_noise(rng, static_cast<std::size_t>(batch / 2), cfg.noise_dim);

  std::vector<LossGradientCheck> out;
  auto check_d = [&](const std::string& name, const std::function<double()>& loss) {
    d.zero_grad();
    loss();
    if (inject_fault && name == "classification") d.fc8.grad_bias[1] += 1e-2;
    out.push_back({name, "discriminator", nn::check_gradients(d.parameters(), loss, opt)});
  };

  check_d("classification", [&] { return classification_loss(d, labeled); });
  check_d("similarity", [&] { return similarity_loss(d, pairs); });

  g.zero_grad();
  std::function<double()> matching = [&] { return matching_loss(g, d, start_features, noise); };
  matching();
  out.push_back({"matching", "generator", nn::check_gradients(g.parameters(), matching, opt)});

  check_d("real", [&] { return real_loss(d, labeled); });
  check_d("fake", [&] { return fake_loss(g, d, fake_noise); });
  check_d("discriminator", [&] { return discriminator_loss(g, d, labeled, pairs, fake_noise, cfg.lambda).total; });
  return out;
}

}  // namespace odas
