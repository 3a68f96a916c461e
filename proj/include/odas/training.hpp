#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "odas/core.hpp"
#include "odas/dataset.hpp"
#include "odas/nn.hpp"

namespace odas {

struct TrainConfig {
  int batch_size = 32;
  double lambda = 0.01;
  double lr_pretrain = 0.01;
  double lr_generator = 0.01;
  double lr_discriminator = 0.001;
  double momentum = 0.9;
  int pretrain_iters = 2000;
  int gan_iters = 500;
  std::uint64_t seed = 1;
  /// Half/half start vs. remaining batches; when off, batches are drawn uniformly from all windows.
  bool adaptive_sampling = true;

  void validate() const {
    require(batch_size >= 4 && batch_size % 2 == 0, ErrorKind::config, "batch_size must be even and >= 4");
    require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::config, "lambda must be >= 0");
    require(lr_pretrain > 0.0 && lr_generator > 0.0 && lr_discriminator > 0.0, ErrorKind::config,
            "learning rates must be > 0");
    require(momentum >= 0.0 && momentum < 1.0, ErrorKind::config, "momentum must be in [0,1)");
    require(pretrain_iters >= 0 && gan_iters >= 0, ErrorKind::config, "iteration counts must be >= 0");
  }
};

struct LabeledBatch {
  nn::Matrix features;
  std::vector<ClassId> labels;
};

inline LabeledBatch to_batch(std::span<const WindowSample> samples) {
  require(!samples.empty(), ErrorKind::data, "empty batch");
  LabeledBatch b;
  b.features = nn::Matrix(samples.size(), samples.front().features().size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto f = samples[i].features();
    require(f.size() == b.features.cols(), ErrorKind::shape, "ragged batch");
    std::copy(f.begin(), f.end(), b.features.row(i).begin());
    b.labels.push_back(samples[i].label());
  }
  return b;
}

inline nn::Matrix feature_matrix(std::span<const WindowSample> samples) { return to_batch(samples).features; }

inline nn::Matrix sample_noise(std::mt19937_64& rng, std::size_t rows, int noise_dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Matrix z(rows, static_cast<std::size_t>(noise_dim));
  for (double& v : z.values()) v = normal(rng);
  return z;
}

template <typename T>
std::vector<T> sample_with_replacement(std::mt19937_64& rng, std::span<const T> pool, int n) {
  require(!pool.empty(), ErrorKind::data, "cannot sample from an empty pool");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(pool[pick(rng)]);
  return out;
}

/// n/2 windows uniformly (with replacement) from start windows, n/2 from the rest, shuffled.
inline std::vector<WindowSample> adaptive_sample_batch(std::mt19937_64& rng, std::span<const WindowSample> starts,
                                                       std::span<const WindowSample> others, int n) {
  require(n >= 2 && n % 2 == 0, ErrorKind::config, "adaptive batch size must be even");
  require(!starts.empty() && !others.empty(), ErrorKind::data, "adaptive sampling needs both pools non-empty");
  auto batch = sample_with_replacement(rng, starts, n / 2);
  auto rest = sample_with_replacement(rng, others, n / 2);
  batch.insert(batch.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  std::shuffle(batch.begin(), batch.end(), rng);
  return batch;
}

/// Uniform draw over the union of both pools, used when adaptive sampling is disabled.
inline std::vector<WindowSample> uniform_sample_batch(std::mt19937_64& rng, std::span<const WindowSample> starts,
                                                      std::span<const WindowSample> others, int n) {
  const std::size_t total = starts.size() + others.size();
  require(total > 0, ErrorKind::data, "cannot sample from an empty dataset");
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::vector<WindowSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t k = pick(rng);
    out.push_back(k < starts.size() ? starts[k] : others[k - starts.size()]);
  }
  return out;
}

namespace detail {

/// Mean softmax cross-entropy over rows; writes scale·∂loss/∂logits into `grad`.
inline double cross_entropy(const nn::Matrix& logits, std::span<const int> targets, double scale, nn::Matrix& grad) {
  const std::size_t n = logits.rows();
  grad = nn::Matrix(n, logits.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = logits.row(i);
    const auto t = static_cast<std::size_t>(targets[i]);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double o : row) sum += std::exp(o - mx);
    total += mx + std::log(sum) - row[t];
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double p = std::exp(row[k] - mx) / sum;
      grad(i, k) = scale * (p - (k == t ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  return total / static_cast<double>(n);
}

inline nn::Matrix row_mean(const nn::Matrix& m) {
  nn::Matrix mean(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) mean(0, j) += m(i, j);
  for (double& v : mean.values()) v /= static_cast<double>(m.rows());
  return mean;
}

}  // namespace detail

// Loss functions return the loss value and add scale·∂loss/∂θ into the gradient buffers of the
// networks they train; callers zero gradients beforehand.

/// Mean −log P(y|x) over the (K+1)-way head. Labels must be in 1..K+1.
inline double classification_loss(nn::Discriminator& d, const LabeledBatch& batch, double scale = 1.0) {
  const int k_plus_1 = d.num_action_classes() + 1;
  std::vector<int> targets;
  for (ClassId y : batch.labels) {
    require(y >= 1 && y <= k_plus_1, ErrorKind::contract,
            "classification loss label " + std::to_string(y) + " outside 1..K+1");
    targets.push_back(y - 1);
  }
  auto pass = d.forward(batch.features, nn::Mode::infer);
  nn::Matrix grad;
  const double loss = detail::cross_entropy(pass.logits, targets, scale, grad);
  d.backward(pass, nullptr, &grad, true);
  return loss;
}

/// Mean squared L2 distance between FC7 activations of start and follow-up windows (shared weights).
inline double similarity_loss(nn::Discriminator& d, std::span<const StartPair> pairs, double scale = 1.0) {
  require(!pairs.empty(), ErrorKind::contract, "similarity loss needs at least one pair");
  nn::Matrix xs(pairs.size(), static_cast<std::size_t>(d.feature_dim()));
  nn::Matrix xf(pairs.size(), static_cast<std::size_t>(d.feature_dim()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto s = pairs[i].start().features();
    auto f = pairs[i].follow_up().features();
    require(s.size() == xs.cols() && f.size() == xf.cols(), ErrorKind::shape, "pair feature width mismatch");
    std::copy(s.begin(), s.end(), xs.row(i).begin());
    std::copy(f.begin(), f.end(), xf.row(i).begin());
  }
  auto ps = d.forward(xs, nn::Mode::infer);
  auto pf = d.forward(xf, nn::Mode::infer);
  const double n = static_cast<double>(pairs.size());
  nn::Matrix gs(ps.fc7.rows(), ps.fc7.cols());
  nn::Matrix gf(ps.fc7.rows(), ps.fc7.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < gs.rows(); ++i)
    for (std::size_t j = 0; j < gs.cols(); ++j) {
      const double diff = ps.fc7(i, j) - pf.fc7(i, j);
      loss += diff * diff;
      gs(i, j) = scale * 2.0 * diff / n;
      gf(i, j) = -gs(i, j);
    }
  d.backward(ps, &gs, nullptr, true);
  d.backward(pf, &gf, nullptr, true);
  return loss / n;
}

/// ‖mean ψ(x_s) − mean ψ(G(z))‖², ψ = input→FC7 of D. Only G receives gradients.
inline double matching_loss(nn::Generator& g, nn::Discriminator& d, const nn::Matrix& start_features,
                            const nn::Matrix& noise, double scale = 1.0) {
  require(start_features.rows() == noise.rows(), ErrorKind::invalid_batch,
          "matching loss needs equal real and noise batch sizes");
  require(noise.rows() >= 2, ErrorKind::invalid_batch, "matching loss needs batches of at least 2");
  auto real = d.forward(start_features, nn::Mode::infer);
  auto gen = g.forward(noise, nn::Mode::train, true);
  auto fake = d.forward(gen.output, nn::Mode::infer);
  const auto mean_real = detail::row_mean(real.fc7);
  const auto mean_fake = detail::row_mean(fake.fc7);
  const double n = static_cast<double>(noise.rows());
  double loss = 0.0;
  nn::Matrix grad(fake.fc7.rows(), fake.fc7.cols());
  for (std::size_t j = 0; j < mean_real.cols(); ++j) {
    const double diff = mean_real(0, j) - mean_fake(0, j);
    loss += diff * diff;
    for (std::size_t i = 0; i < grad.rows(); ++i) grad(i, j) = -scale * 2.0 * diff / n;
  }
  auto d_fake = d.backward(fake, &grad, nullptr, false);
  g.backward(gen, d_fake, true);
  return loss;
}

/// Mean −log P(y|x) of real windows over the (K+2)-way head.
inline double real_loss(nn::Discriminator& d, const LabeledBatch& batch, double scale = 1.0) {
  const int k = d.num_action_classes();
  std::vector<int> targets;
  for (ClassId y : batch.labels) {
    require(y >= 1 && y <= k + 1, ErrorKind::contract, "real sample label outside 1..K+1");
    targets.push_back(y - 1);
  }
  auto pass = d.forward(batch.features, nn::Mode::train);
  nn::Matrix grad;
  const double loss = detail::cross_entropy(pass.logits, targets, scale, grad);
  d.backward(pass, nullptr, &grad, true);
  return loss;
}

/// Mean −log P(K+2|G(z)). Fake samples are constants: only D receives gradients, and G's running
/// statistics are left untouched.
inline double fake_loss(nn::Generator& g, nn::Discriminator& d, const nn::Matrix& noise, double scale = 1.0) {
  auto gen = g.forward(noise, nn::Mode::train, false);
  auto pass = d.forward(gen.output, nn::Mode::train);
  std::vector<int> targets(noise.rows(), d.num_action_classes() + 1);
  nn::Matrix grad;
  const double loss = detail::cross_entropy(pass.logits, targets, scale, grad);
  d.backward(pass, nullptr, &grad, true);
  return loss;
}

struct DiscriminatorLoss {
  double real = 0.0;
  double fake = 0.0;
  std::optional<double> similarity;
  double total = 0.0;
};

/// L_real + L_fake + λ·L_similarity; the similarity term is skipped when λ = 0 or no pairs exist.
inline DiscriminatorLoss discriminator_loss(nn::Generator& g, nn::Discriminator& d, const LabeledBatch& batch,
                                            std::span<const StartPair> pairs, const nn::Matrix& noise,
                                            double lambda) {
  DiscriminatorLoss out;
  out.real = real_loss(d, batch);
  out.fake = fake_loss(g, d, noise);
  out.total = out.real + out.fake;
  if (lambda > 0.0 && !pairs.empty()) {
    out.similarity = similarity_loss(d, pairs, lambda);
    out.total += lambda * *out.similarity;
  }
  return out;
}

struct LossRecord {
  int iter = 0;
  std::optional<double> cls;
  std::optional<double> sim;
  std::optional<double> match;
  std::optional<double> real;
  std::optional<double> fake;
};

using LossCurve = std::vector<LossRecord>;

namespace detail {

inline void check_finite_loss(double v, int iter, const char* what) {
  if (!std::isfinite(v)) {
    fail(ErrorKind::divergence, std::string("non-finite ") + what + " loss at iteration " + std::to_string(iter));
  }
}

inline std::vector<WindowSample> draw_batch(std::mt19937_64& rng, const TrainingData& data, const TrainConfig& cfg) {
  return cfg.adaptive_sampling ? adaptive_sample_batch(rng, data.starts, data.others, cfg.batch_size)
                               : uniform_sample_batch(rng, data.starts, data.others, cfg.batch_size);
}

}  // namespace detail

/// Minimizes L_classification + λ·L_similarity for cfg.pretrain_iters iterations.
inline LossCurve pretrain(nn::Discriminator& d, const TrainingData& data, const TrainConfig& cfg) {
  cfg.validate();
  require(!data.starts.empty() && !data.others.empty(), ErrorKind::data,
          "pretraining needs both start and non-start windows");
  std::mt19937_64 rng(cfg.seed);
  const bool use_pairs = cfg.lambda > 0.0 && !data.pairs.empty();
  LossCurve curve;
  curve.reserve(static_cast<std::size_t>(cfg.pretrain_iters));
  for (int it = 0; it < cfg.pretrain_iters; ++it) {
    auto batch = detail::draw_batch(rng, data, cfg);
    d.zero_grad();
    LossRecord rec;
    rec.iter = it;
    rec.cls = classification_loss(d, to_batch(batch));
    detail::check_finite_loss(*rec.cls, it, "classification");
    if (use_pairs) {
      auto pairs = sample_with_replacement<StartPair>(rng, data.pairs, cfg.batch_size / 2);
      rec.sim = similarity_loss(d, pairs, cfg.lambda);
      detail::check_finite_loss(*rec.sim, it, "similarity");
    }
    nn::sgd_step(d, cfg.lr_pretrain, cfg.momentum);
    curve.push_back(rec);
  }
  return curve;
}

/// Alternates one G step on L_matching (D fixed) and one D step on L_D (G fixed) per iteration.
/// Iteration numbers in the returned curve continue after `first_iter`.
inline LossCurve train_gan(nn::Generator& g, nn::Discriminator& d, const TrainingData& data, const TrainConfig& cfg,
                           int first_iter = 0) {
  cfg.validate();
  require(g.feature_dim() == d.feature_dim(), ErrorKind::shape, "generator output width != discriminator input");
  LossCurve curve;
  if (cfg.gan_iters == 0) return curve;
  require(!data.starts.empty() && !data.others.empty(), ErrorKind::data,
          "GAN training needs both start and non-start windows");
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  const int half = cfg.batch_size / 2;
  const bool use_pairs = cfg.lambda > 0.0 && !data.pairs.empty();
  for (int it = 0; it < cfg.gan_iters; ++it) {
    LossRecord rec;
    rec.iter = first_iter + it;

    auto real_starts = sample_with_replacement<WindowSample>(rng, data.starts, half);
    auto noise = sample_noise(rng, static_cast<std::size_t>(half), g.noise_dim());
    g.zero_grad();
    rec.match = matching_loss(g, d, feature_matrix(real_starts), noise);
    detail::check_finite_loss(*rec.match, rec.iter, "matching");
    nn::sgd_step(g, cfg.lr_generator, cfg.momentum);

    auto batch = detail::draw_batch(rng, data, cfg);
    std::vector<StartPair> pairs;
    if (use_pairs) pairs = sample_with_replacement<StartPair>(rng, data.pairs, half);
    auto fake_noise = sample_noise(rng, static_cast<std::size_t>(half), g.noise_dim());
    d.zero_grad();
    auto dl = discriminator_loss(g, d, to_batch(batch), pairs, fake_noise, cfg.lambda);
    detail::check_finite_loss(dl.total, rec.iter, "discriminator");
    nn::sgd_step(d, cfg.lr_discriminator, cfg.momentum);
    rec.real = dl.real;
    rec.fake = dl.fake;
    rec.sim = dl.similarity;
    curve.push_back(rec);
  }
  return curve;
}

inline void write_loss_csv(std::ostream& out, std::span<const LossRecord> curve) {
  out << "iter,loss_cls,loss_sim,loss_match,loss_real,loss_fake\n";
  auto cell = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << std::setprecision(10) << *v;
  };
  for (const auto& r : curve) {
    out << r.iter;
    cell(r.cls);
    cell(r.sim);
    cell(r.match);
    cell(r.real);
    cell(r.fake);
    out << '\n';
  }
}

}  // namespace odas
