#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odas/core.hpp"
#include "odas/error.hpp"

namespace odas::nn {

enum class Mode { train, infer };

/// Dense row-major matrix of doubles. Rows are batch entries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<Vector>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      require(rows[r].size() == m.cols_, ErrorKind::shape, "ragged rows");
      std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Mutable view of one parameter tensor with its gradient and momentum buffers.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
  std::span<double> velocity;
};

inline void relu_inplace(Matrix& m) {
  for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
}

/// Zeroes entries of `grad` where the rectified output was not positive.
inline void relu_backward_inplace(Matrix& grad, const Matrix& activated) {
  auto g = grad.values();
  auto a = activated.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(a[i] > 0.0)) g[i] = 0.0;
  }
}

/// Fully connected layer: y = x Wᵀ + b, W is out_dim × in_dim.
struct DenseLayer {
  std::string name;
  Matrix weights;
  Vector bias;
  Matrix grad_weights;
  Vector grad_bias;
  Matrix velocity_weights;
  Vector velocity_bias;

  DenseLayer() = default;
  DenseLayer(std::string layer_name, int in_dim, int out_dim)
      : name(std::move(layer_name)),
        weights(out_dim, in_dim),
        bias(out_dim, 0.0),
        grad_weights(out_dim, in_dim),
        grad_bias(out_dim, 0.0),
        velocity_weights(out_dim, in_dim),
        velocity_bias(out_dim, 0.0) {
    require(in_dim >= 1 && out_dim >= 1, ErrorKind::shape, name + ": dimensions must be >= 1");
  }

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }

  /// He-normal weights, zero bias.
  void initialize(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / in_dim()));
    for (double& w : weights.values()) w = normal(rng);
    std::fill(bias.begin(), bias.end(), 0.0);
  }

  /// Computes only the first `active_outputs` units; rows beyond are never read.
  Matrix forward(const Matrix& x, int active_outputs) const {
    require(static_cast<int>(x.cols()) == in_dim(), ErrorKind::shape,
            name + ": input has " + std::to_string(x.cols()) + " columns, expected " +
                std::to_string(in_dim()));
    require(active_outputs >= 1 && active_outputs <= out_dim(), ErrorKind::shape,
            name + ": bad active output count");
    Matrix y(x.rows(), static_cast<std::size_t>(active_outputs));
    for (std::size_t n = 0; n < x.rows(); ++n) {
      auto xr = x.row(n);
      for (int o = 0; o < active_outputs; ++o) {
        auto wr = weights.row(static_cast<std::size_t>(o));
        double acc = bias[static_cast<std::size_t>(o)];
        for (std::size_t i = 0; i < xr.size(); ++i) acc += wr[i] * xr[i];
        y(n, static_cast<std::size_t>(o)) = acc;
      }
    }
    return y;
  }

  Matrix forward(const Matrix& x) const { return forward(x, out_dim()); }

  /// Back-propagates dy (batch × k, k ≤ out_dim, covering the first k units) and returns dL/dx.
  /// Parameter gradients are accumulated only when `accumulate` is set.
  Matrix backward(const Matrix& x, const Matrix& dy, bool accumulate) {
    require(dy.rows() == x.rows() && static_cast<int>(dy.cols()) <= out_dim() &&
                static_cast<int>(x.cols()) == in_dim(),
            ErrorKind::shape, name + ": backward shape mismatch");
    const std::size_t k = dy.cols();
    Matrix dx(x.rows(), x.cols());
    for (std::size_t n = 0; n < x.rows(); ++n) {
      auto xr = x.row(n);
      auto dxr = dx.row(n);
      for (std::size_t o = 0; o < k; ++o) {
        const double g = dy(n, o);
        if (g == 0.0) continue;
        auto wr = weights.row(o);
        for (std::size_t i = 0; i < xr.size(); ++i) dxr[i] += g * wr[i];
        if (accumulate) {
          auto gw = grad_weights.row(o);
          for (std::size_t i = 0; i < xr.size(); ++i) gw[i] += g * xr[i];
          grad_bias[o] += g;
        }
      }
    }
    return dx;
  }

  void zero_grad() {
    std::fill(grad_weights.values().begin(), grad_weights.values().end(), 0.0);
    std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
  }

  void append_params(std::vector<ParamRef>& out) {
    out.push_back({name + ".weight", weights.values(), grad_weights.values(), velocity_weights.values()});
    out.push_back({name + ".bias", bias, grad_bias, velocity_bias});
  }
};

struct BatchNormCache {
  Matrix normalized;
  Vector inv_std;
  Mode mode = Mode::train;
};

/// Per-feature batch normalization with learned scale (gamma) and shift (beta).
struct BatchNormLayer {
  std::string name;
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
  Vector grad_gamma;
  Vector grad_beta;
  Vector velocity_gamma;
  Vector velocity_beta;
  double epsilon = 1e-5;
  double momentum = 0.9;

  BatchNormLayer() = default;
  BatchNormLayer(std::string layer_name, int dim)
      : name(std::move(layer_name)),
        gamma(dim, 1.0),
        beta(dim, 0.0),
        running_mean(dim, 0.0),
        running_var(dim, 1.0),
        grad_gamma(dim, 0.0),
        grad_beta(dim, 0.0),
        velocity_gamma(dim, 0.0),
        velocity_beta(dim, 0.0) {
    require(dim >= 1, ErrorKind::shape, name + ": dimension must be >= 1");
  }

  int dim() const { return static_cast<int>(gamma.size()); }

  /// Train mode normalizes with (biased) batch statistics, infer mode with running statistics.
  Matrix forward(const Matrix& x, Mode mode, bool update_running, BatchNormCache& cache) {
    require(static_cast<int>(x.cols()) == dim(), ErrorKind::shape, name + ": input width mismatch");
    const std::size_t batch = x.rows();
    const std::size_t d = x.cols();
    Vector mean(d, 0.0);
    Vector var(d, 0.0);
    if (mode == Mode::train) {
      require(batch >= 2, ErrorKind::invalid_batch,
              name + ": batch normalization in train mode needs a batch of at least 2");
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t j = 0; j < d; ++j) mean[j] += x(n, j);
      for (double& m : mean) m /= static_cast<double>(batch);
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t j = 0; j < d; ++j) {
          const double c = x(n, j) - mean[j];
          var[j] += c * c;
        }
      for (double& v : var) v /= static_cast<double>(batch);
      if (update_running) {
        for (std::size_t j = 0; j < d; ++j) {
          running_mean[j] = momentum * running_mean[j] + (1.0 - momentum) * mean[j];
          running_var[j] = momentum * running_var[j] + (1.0 - momentum) * var[j];
        }
      }
    } else {
      mean = running_mean;
      var = running_var;
    }
    cache.mode = mode;
    cache.inv_std.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) cache.inv_std[j] = 1.0 / std::sqrt(var[j] + epsilon);
    cache.normalized = Matrix(batch, d);
    Matrix y(batch, d);
    for (std::size_t n = 0; n < batch; ++n)
      for (std::size_t j = 0; j < d; ++j) {
        const double xh = (x(n, j) - mean[j]) * cache.inv_std[j];
        cache.normalized(n, j) = xh;
        y(n, j) = gamma[j] * xh + beta[j];
      }
    return y;
  }

  Matrix backward(const BatchNormCache& cache, const Matrix& dy, bool accumulate) {
    const std::size_t batch = dy.rows();
    const std::size_t d = dy.cols();
    require(cache.normalized.rows() == batch && cache.normalized.cols() == d, ErrorKind::shape,
            name + ": backward shape mismatch");
    Matrix dx(batch, d);
    for (std::size_t j = 0; j < d; ++j) {
      double sum_dy = 0.0;
      double sum_dy_xh = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        sum_dy += dy(n, j);
        sum_dy_xh += dy(n, j) * cache.normalized(n, j);
      }
      if (accumulate) {
        grad_beta[j] += sum_dy;
        grad_gamma[j] += sum_dy_xh;
      }
      const double scale = gamma[j] * cache.inv_std[j];
      if (cache.mode == Mode::train) {
        const double inv_n = 1.0 / static_cast<double>(batch);
        for (std::size_t n = 0; n < batch; ++n) {
          dx(n, j) = scale * (dy(n, j) - inv_n * sum_dy - cache.normalized(n, j) * inv_n * sum_dy_xh);
        }
      } else {
        for (std::size_t n = 0; n < batch; ++n) dx(n, j) = scale * dy(n, j);
      }
    }
    return dx;
  }

  void zero_grad() {
    std::fill(grad_gamma.begin(), grad_gamma.end(), 0.0);
    std::fill(grad_beta.begin(), grad_beta.end(), 0.0);
  }

  void append_params(std::vector<ParamRef>& out) {
    out.push_back({name + ".gamma", gamma, grad_gamma, velocity_gamma});
    out.push_back({name + ".beta", beta, grad_beta, velocity_beta});
  }
};

/// Activations cached by a discriminator forward pass.
struct DiscriminatorPass {
  Matrix input;
  Matrix fc6;     // rectified
  Matrix fc7;     // rectified; the feature used for similarity and matching losses
  Matrix logits;  // K+2 columns in train mode, K+1 in infer mode
  Mode mode = Mode::train;
  bool valid = false;
};

/// FC6 → ReLU → FC7 → ReLU → FC8. FC8 carries K+2 outputs; the last is the fake class.
class Discriminator {
 public:
  DenseLayer fc6;
  DenseLayer fc7;
  DenseLayer fc8;

  explicit Discriminator(const ModelConfig& cfg)
      : fc6("fc6", cfg.feature_dim, cfg.fc_hidden_dim),
        fc7("fc7", cfg.fc_hidden_dim, cfg.fc_hidden_dim),
        fc8("fc8", cfg.fc_hidden_dim, cfg.train_outputs()) {
    cfg.validate();
  }

  Discriminator(const ModelConfig& cfg, std::uint64_t seed) : Discriminator(cfg) {
    std::mt19937_64 rng(seed);
    fc6.initialize(rng);
    fc7.initialize(rng);
    fc8.initialize(rng);
  }

  Discriminator(DenseLayer l6, DenseLayer l7, DenseLayer l8)
      : fc6(std::move(l6)), fc7(std::move(l7)), fc8(std::move(l8)) {
    require(fc7.in_dim() == fc6.out_dim() && fc8.in_dim() == fc7.out_dim() && fc8.out_dim() >= 3,
            ErrorKind::shape, "inconsistent discriminator layer shapes");
  }

  int num_action_classes() const { return fc8.out_dim() - 2; }
  int feature_dim() const { return fc6.in_dim(); }
  int hidden_dim() const { return fc7.out_dim(); }

  DiscriminatorPass forward(const Matrix& x, Mode mode) const {
    require(static_cast<int>(x.cols()) == feature_dim(), ErrorKind::shape,
            "discriminator input has " + std::to_string(x.cols()) + " features, expected " +
                std::to_string(feature_dim()));
    DiscriminatorPass pass;
    pass.mode = mode;
    pass.input = x;
    pass.fc6 = fc6.forward(x);
    relu_inplace(pass.fc6);
    pass.fc7 = fc7.forward(pass.fc6);
    relu_inplace(pass.fc7);
    const int outputs = mode == Mode::train ? fc8.out_dim() : fc8.out_dim() - 1;
    pass.logits = fc8.forward(pass.fc7, outputs);
    pass.valid = true;
    return pass;
  }

  /// Either gradient may be null. Returns dL/dinput.
  Matrix backward(const DiscriminatorPass& pass, const Matrix* d_fc7, const Matrix* d_logits,
                  bool accumulate) {
    require(pass.valid, ErrorKind::state, "discriminator backward called without a forward pass");
    Matrix d7(pass.fc7.rows(), pass.fc7.cols());
    if (d_logits != nullptr) {
      require(d_logits->rows() == pass.logits.rows() && d_logits->cols() == pass.logits.cols(),
              ErrorKind::shape, "logit gradient shape mismatch");
      d7 = fc8.backward(pass.fc7, *d_logits, accumulate);
    }
    if (d_fc7 != nullptr) {
      require(d_fc7->rows() == d7.rows() && d_fc7->cols() == d7.cols(), ErrorKind::shape,
              "fc7 gradient shape mismatch");
      auto dst = d7.values();
      auto src = d_fc7->values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    relu_backward_inplace(d7, pass.fc7);
    Matrix d6 = fc7.backward(pass.fc6, d7, accumulate);
    relu_backward_inplace(d6, pass.fc6);
    return fc6.backward(pass.input, d6, accumulate);
  }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> out;
    fc6.append_params(out);
    fc7.append_params(out);
    fc8.append_params(out);
    return out;
  }

  void zero_grad() {
    fc6.zero_grad();
    fc7.zero_grad();
    fc8.zero_grad();
  }
};

struct GeneratorPass {
  Matrix noise;
  BatchNormCache bn1;
  Matrix hidden;  // rectified output of bn1
  BatchNormCache bn2;
  Matrix output;  // rectified output of bn2: the fake features
  bool valid = false;
};

/// FC1 → BN → ReLU → FC2 → BN → ReLU, mapping noise to fake window features.
class Generator {
 public:
  DenseLayer fc1;
  BatchNormLayer bn1;
  DenseLayer fc2;
  BatchNormLayer bn2;

  explicit Generator(const ModelConfig& cfg)
      : fc1("gen.fc1", cfg.noise_dim, cfg.gen_hidden_dim),
        bn1("gen.bn1", cfg.gen_hidden_dim),
        fc2("gen.fc2", cfg.gen_hidden_dim, cfg.feature_dim),
        bn2("gen.bn2", cfg.feature_dim) {
    cfg.validate();
  }

  Generator(const ModelConfig& cfg, std::uint64_t seed) : Generator(cfg) {
    std::mt19937_64 rng(seed);
    fc1.initialize(rng);
    fc2.initialize(rng);
  }

  Generator(DenseLayer l1, BatchNormLayer b1, DenseLayer l2, BatchNormLayer b2)
      : fc1(std::move(l1)), bn1(std::move(b1)), fc2(std::move(l2)), bn2(std::move(b2)) {
    require(bn1.dim() == fc1.out_dim() && fc2.in_dim() == fc1.out_dim() && bn2.dim() == fc2.out_dim(),
            ErrorKind::shape, "inconsistent generator layer shapes");
  }

  int noise_dim() const { return fc1.in_dim(); }
  int feature_dim() const { return fc2.out_dim(); }

  GeneratorPass forward(const Matrix& noise, Mode mode, bool update_running = true) {
    require(static_cast<int>(noise.cols()) == noise_dim(), ErrorKind::shape,
            "generator noise has " + std::to_string(noise.cols()) + " entries, expected " +
                std::to_string(noise_dim()));
    require(mode == Mode::infer || noise.rows() >= 2, ErrorKind::invalid_batch,
            "generator needs a batch of at least 2 in train mode");
    GeneratorPass pass;
    pass.noise = noise;
    pass.hidden = bn1.forward(fc1.forward(noise), mode, update_running, pass.bn1);
    relu_inplace(pass.hidden);
    pass.output = bn2.forward(fc2.forward(pass.hidden), mode, update_running, pass.bn2);
    relu_inplace(pass.output);
    pass.valid = true;
    return pass;
  }

  /// Returns dL/dnoise.
  Matrix backward(const GeneratorPass& pass, const Matrix& d_output, bool accumulate = true) {
    require(pass.valid, ErrorKind::state, "generator backward called without a forward pass");
    Matrix d = d_output;
    relu_backward_inplace(d, pass.output);
    d = bn2.backward(pass.bn2, d, accumulate);
    d = fc2.backward(pass.hidden, d, accumulate);
    relu_backward_inplace(d, pass.hidden);
    d = bn1.backward(pass.bn1, d, accumulate);
    return fc1.backward(pass.noise, d, accumulate);
  }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> out;
    fc1.append_params(out);
    bn1.append_params(out);
    fc2.append_params(out);
    bn2.append_params(out);
    return out;
  }

  void zero_grad() {
    fc1.zero_grad();
    bn1.zero_grad();
    fc2.zero_grad();
    bn2.zero_grad();
  }
};

/// Max-shifted softmax.
inline Vector softmax(std::span<const double> logits) {
  Vector p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    auto row = softmax(logits.row(n));
    std::copy(row.begin(), row.end(), p.row(n).begin());
  }
  return p;
}

/// Single-window forward: (FC7 activation, logits).
inline std::pair<Vector, Vector> disc_forward(const Discriminator& d, std::span<const double> x, Mode mode) {
  Matrix in(1, x.size());
  std::copy(x.begin(), x.end(), in.row(0).begin());
  auto pass = d.forward(in, mode);
  auto f7 = pass.fc7.row(0);
  auto lg = pass.logits.row(0);
  return {Vector(f7.begin(), f7.end()), Vector(lg.begin(), lg.end())};
}

/// Momentum SGD: v ← μ·v + g, θ ← θ − lr·v. Refuses to update on any non-finite gradient.
inline void sgd_step(std::vector<ParamRef> params, double learning_rate, double momentum) {
  for (const auto& p : params) {
    for (double g : p.grad) {
      if (!std::isfinite(g)) fail(ErrorKind::divergence, "non-finite gradient in " + p.name);
    }
  }
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.velocity[i] = momentum * p.velocity[i] + p.grad[i];
      p.value[i] -= learning_rate * p.velocity[i];
    }
    for (double v : p.value) {
      if (!std::isfinite(v)) fail(ErrorKind::divergence, "non-finite parameter after update in " + p.name);
    }
  }
}

template <typename Net>
void sgd_step(Net& net, double learning_rate, double momentum) {
  sgd_step(net.parameters(), learning_rate, momentum);
}

// Finite-difference gradient checking.

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so exactly-zero gradients compare cleanly.
  double scale_floor = 1e-6;
  /// Absolute differences within this many ulps of the loss, divided by 2h, are rounding noise of
  /// the finite difference itself and count as agreement.
  double roundoff_ulps = 8.0;
};

struct GradCheckResult {
  std::size_t checked = 0;
  /// Entries whose finite difference straddles a rectifier kink; they are skipped, not failed.
  std::size_t nonsmooth = 0;
  /// Entries whose analytic and numeric values differ only at the finite-difference noise level.
  std::size_t roundoff_limited = 0;
  std::size_t failures = 0;
  double worst_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed() const { return failures == 0; }
};

inline double gradient_rel_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares the gradients already stored in `params` against central differences of `loss`.
/// `loss` must be a pure function of the parameter values. Gradient buffers are restored on return.
inline GradCheckResult check_gradients(std::vector<ParamRef> params, const std::function<double()>& loss,
                                       const GradCheckOptions& opt = {}) {
  std::vector<Vector> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.emplace_back(p.grad.begin(), p.grad.end());

  double loss_scale = 0.0;
  auto central = [&](double& slot, double h) {
    const double saved = slot;
    slot = saved + h;
    const double up = loss();
    slot = saved - h;
    const double down = loss();
    slot = saved;
    loss_scale = std::max(std::abs(up), std::abs(down));
    return (up - down) / (2.0 * h);
  };

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double a = analytic[pi][i];
      const double numeric = central(p.value[i], opt.step);
      double err = gradient_rel_error(a, numeric, opt.scale_floor);
      const double roundoff =
          opt.roundoff_ulps * std::numeric_limits<double>::epsilon() * loss_scale / (2.0 * opt.step);
      ++result.checked;
      if (err > opt.tolerance && std::abs(a - numeric) <= roundoff) {
        ++result.roundoff_limited;
        continue;
      }
      if (err > opt.tolerance) {
        // A kink inside [x-h, x+h] shows up either as h and h/2 estimates that disagree or, when
        // the kink sits exactly at x, as a gap between one-sided slopes. On a smooth loss that gap
        // is h·f'' and halves with the step; across a kink it stays put.
        const double half = central(p.value[i], opt.step / 2.0);
        const double half_roundoff = 2.0 * roundoff;
        const double saved = p.value[i];
        const double mid = loss();
        auto one_sided_gap = [&](double h) {
          p.value[i] = saved + h;
          const double up = loss();
          p.value[i] = saved - h;
          const double down = loss();
          p.value[i] = saved;
          return ((up - mid) - (mid - down)) / h;
        };
        const double gap = one_sided_gap(opt.step);
        const double gap_half = one_sided_gap(opt.step / 2.0);
        const double slope_scale = std::max({std::abs(numeric), std::abs(half), opt.scale_floor});
        const bool estimates_disagree =
            std::abs(numeric - half) > opt.tolerance * slope_scale + half_roundoff;
        const bool slope_jump = std::abs(gap) > opt.tolerance * slope_scale + 2.0 * half_roundoff &&
                                std::abs(gap_half) > 0.75 * std::abs(gap);
        if (estimates_disagree || slope_jump) {
          ++result.nonsmooth;
          continue;
        }
        ++result.failures;
      }
      if (err > result.worst_rel_error || result.worst_param.empty()) {
        result.worst_rel_error = err;
        result.worst_param = p.name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    std::copy(analytic[pi].begin(), analytic[pi].end(), params[pi].grad.begin());
  }
  return result;
}

}  // namespace odas::nn
