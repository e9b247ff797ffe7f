#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mada/rng.hpp"
#include "mada/vec.hpp"

namespace mada {

struct EvalResult {
  double loss = 0.0;
  Vec grad;
};

/// Per-coordinate interval constraint (same interval on every coordinate).
struct Box {
  double lo = -1.0;
  double hi = 1.0;
};

/// Differentiable objective oracle. Deterministic kinds ignore the seed;
/// stochastic kinds are a deterministic function of (x, t, seed).
class Problem {
 public:
  virtual ~Problem() = default;
  virtual std::size_t dim() const = 0;
  virtual EvalResult eval(const Vec& x, long t, std::uint64_t seed) const = 0;
  virtual std::optional<Box> constraint_box() const { return std::nullopt; }
  virtual Vec initial_point(std::uint64_t seed) const { return zeros(dim()); }

 protected:
  void check_input(const Vec& x) const {
    if (x.size() != dim()) {
      throw std::invalid_argument("problem eval: x has dimension " +
                                  std::to_string(x.size()) + ", expected " +
                                  std::to_string(dim()));
    }
    if (auto box = constraint_box()) {
      for (double xi : x) {
        if (xi < box->lo || xi > box->hi) {
          throw std::domain_error("problem eval: point outside constraint box");
        }
      }
    }
  }
};

// ---------------------------------------------------------------------------
// quadratic: f(x) = 1/2 sum_i h_i (x_i - c_i)^2, deterministic
// ---------------------------------------------------------------------------

class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(Vec hessian_diag, Vec center)
      : h_(std::move(hessian_diag)), c_(std::move(center)) {
    check_same_dim(h_, c_, "quadratic");
    for (double hi : h_) {
      if (!(hi > 0.0)) throw std::invalid_argument("quadratic: hessian diag must be > 0");
    }
  }

  static QuadraticProblem random(std::size_t dim, std::uint64_t construct_seed) {
    Rng rng(construct_seed);
    Vec h(dim), c(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      h[i] = rng.uniform(0.5, 4.0);
      c[i] = rng.uniform(-1.0, 1.0);
    }
    return QuadraticProblem(std::move(h), std::move(c));
  }

  std::size_t dim() const override { return h_.size(); }

  EvalResult eval(const Vec& x, long /*t*/, std::uint64_t /*seed*/) const override {
    check_input(x);
    EvalResult r;
    r.grad.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      double d = x[i] - c_[i];
      r.loss += 0.5 * h_[i] * d * d;
      r.grad[i] = h_[i] * d;
    }
    return r;
  }

  Vec initial_point(std::uint64_t seed) const override {
    Rng rng = Rng(seed).substream(0x51);
    Vec x(dim());
    for (double& xi : x) xi = rng.uniform(-2.0, 2.0);
    return x;
  }

 private:
  Vec h_, c_;
};

// ---------------------------------------------------------------------------
// rosenbrock: f(x) = sum_{i<d-1} b (x_{i+1} - x_i^2)^2 + (a - x_i)^2
// ---------------------------------------------------------------------------

class RosenbrockProblem final : public Problem {
 public:
  RosenbrockProblem(std::size_t dim, double a = 1.0, double b = 100.0)
      : dim_(dim), a_(a), b_(b) {
    if (dim_ < 2) throw std::invalid_argument("rosenbrock: dim must be >= 2");
  }

  std::size_t dim() const override { return dim_; }

  EvalResult eval(const Vec& x, long /*t*/, std::uint64_t /*seed*/) const override {
    check_input(x);
    EvalResult r;
    r.grad.assign(dim_, 0.0);
    for (std::size_t i = 0; i + 1 < dim_; ++i) {
      double q = x[i + 1] - x[i] * x[i];
      double p = a_ - x[i];
      r.loss += b_ * q * q + p * p;
      r.grad[i] += -4.0 * b_ * x[i] * q - 2.0 * p;
      r.grad[i + 1] += 2.0 * b_ * q;
    }
    return r;
  }

  Vec initial_point(std::uint64_t /*seed*/) const override {
    Vec x(dim_, 1.0);
    for (std::size_t i = 0; i < dim_; i += 2) x[i] = -1.2;
    return x;
  }

 private:
  std::size_t dim_;
  double a_, b_;
};

// ---------------------------------------------------------------------------
// logistic-synth: binary logistic regression on two Gaussian clusters
// ---------------------------------------------------------------------------

class LogisticSynthProblem final : public Problem {
 public:
  LogisticSynthProblem(std::size_t dim, std::size_t n_samples, double separation,
                       double label_noise, std::size_t batch_size,
                       std::uint64_t dataset_seed)
      : dim_(dim), batch_(batch_size) {
    if (dim_ < 1) throw std::invalid_argument("logistic-synth: dim must be >= 1");
    if (n_samples < 1) throw std::invalid_argument("logistic-synth: n must be >= 1");
    if (batch_ < 1) throw std::invalid_argument("logistic-synth: batch_size must be >= 1");
    if (label_noise < 0.0 || label_noise > 0.5) {
      throw std::invalid_argument("logistic-synth: label_noise must be in [0, 0.5]");
    }
    Rng rng(dataset_seed);
    double mean = 0.5 * separation / std::sqrt(double(dim_));
    features_.resize(n_samples, Vec(dim_));
    labels_.resize(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
      double y = (s % 2 == 0) ? 1.0 : 0.0;
      double mu = (y > 0.5) ? mean : -mean;
      for (std::size_t i = 0; i < dim_; ++i) features_[s][i] = mu + rng.normal();
      if (rng.uniform01() < label_noise) y = 1.0 - y;
      labels_[s] = y;
    }
  }

  std::size_t dim() const override { return dim_; }
  std::size_t n_samples() const { return labels_.size(); }

  EvalResult eval(const Vec& x, long t, std::uint64_t seed) const override {
    check_input(x);
    Rng rng = Rng(seed).substream(std::uint64_t(t));
    std::vector<std::size_t> idx(batch_);
    for (auto& j : idx) j = rng.below(labels_.size());
    return eval_batch(x, idx);
  }

  EvalResult eval_batch(const Vec& x, const std::vector<std::size_t>& idx) const {
    check_input(x);
    EvalResult r;
    r.grad.assign(dim_, 0.0);
    for (std::size_t j : idx) {
      const Vec& z = features_[j];
      double y = labels_[j];
      double s = dot(x, z);
      // CE(s, y) = y*softplus(-s) + (1-y)*softplus(s), grad_s = sigma(s)-y
      double sp = std::log1p(std::exp(-std::fabs(s))) + std::max(s, 0.0);
      r.loss += y * (sp - s) + (1.0 - y) * sp;
      double p = 1.0 / (1.0 + std::exp(-s));
      double gs = p - y;
      for (std::size_t i = 0; i < dim_; ++i) r.grad[i] += gs * z[i];
    }
    double inv = 1.0 / double(idx.size());
    r.loss *= inv;
    for (double& gi : r.grad) gi *= inv;
    return r;
  }

 private:
  std::size_t dim_, batch_;
  std::vector<Vec> features_;
  Vec labels_;
};

// ---------------------------------------------------------------------------
// reddi-online: the adversarial convex sequence from the AMSGrad paper,
// g_t(x) = 1010 x when t mod 101 == 1, else -10 x, constraint x in [-1, 1].
// ---------------------------------------------------------------------------

inline double reddi_coefficient(long t) {
  if (t < 1) throw std::invalid_argument("reddi: t must be >= 1");
  return (t % 101 == 1) ? 1010.0 : -10.0;
}

inline double reddi_grad(long t, double x) {
  if (x < -1.0 || x > 1.0) throw std::domain_error("reddi_grad: x outside [-1, 1]");
  return reddi_coefficient(t);
}

/// Running average of g_t(x_t) - g_t(-1); zero for optimal constant play at -1.
inline Vec reddi_average_regret(const Vec& history) {
  if (history.empty()) throw std::invalid_argument("reddi_average_regret: empty history");
  Vec out(history.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    long t = long(i) + 1;
    double x = history[i];
    if (x < -1.0 || x > 1.0) throw std::domain_error("reddi_average_regret: x outside [-1, 1]");
    double coef = reddi_coefficient(t);
    cum += coef * x - coef * (-1.0);
    out[i] = cum / double(t);
  }
  return out;
}

class ReddiProblem final : public Problem {
 public:
  std::size_t dim() const override { return 1; }

  EvalResult eval(const Vec& x, long t, std::uint64_t /*seed*/) const override {
    check_input(x);
    double coef = reddi_coefficient(t);
    return EvalResult{coef * x[0], Vec{coef}};
  }

  std::optional<Box> constraint_box() const override { return Box{-1.0, 1.0}; }

  Vec initial_point(std::uint64_t /*seed*/) const override { return Vec{0.0}; }
};

// ---------------------------------------------------------------------------
// tiny-mlp: fully-connected tanh network with softmax cross-entropy on a
// synthetic two-class point cloud; exact backprop gradients.
// ---------------------------------------------------------------------------

struct TinyMlpSpec {
  std::vector<std::size_t> layer_widths{2, 16, 16, 2};
  std::size_t n_samples = 512;
  double separation = 2.0;
  double label_noise = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t dataset_seed = 1;
};

class TinyMlpProblem final : public Problem {
 public:
  explicit TinyMlpProblem(TinyMlpSpec spec) : spec_(std::move(spec)) {
    const auto& w = spec_.layer_widths;
    if (w.size() < 2) throw std::invalid_argument("tiny-mlp: need at least 2 layers");
    for (auto width : w) {
      if (width < 1) throw std::invalid_argument("tiny-mlp: zero layer width");
    }
    if (w.front() != 2) throw std::invalid_argument("tiny-mlp: input width must be 2");
    if (w.back() != 2) throw std::invalid_argument("tiny-mlp: output width must be 2");
    n_params_ = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) n_params_ += w[l + 1] * (w[l] + 1);

    Rng rng(spec_.dataset_seed);
    double mean = 0.5 * spec_.separation / std::sqrt(2.0);
    features_.resize(spec_.n_samples, Vec(2));
    labels_.resize(spec_.n_samples);
    for (std::size_t s = 0; s < spec_.n_samples; ++s) {
      std::size_t y = s % 2;
      double mu = (y == 1) ? mean : -mean;
      features_[s][0] = mu + rng.normal();
      features_[s][1] = -mu + rng.normal();
      if (rng.uniform01() < spec_.label_noise) y = 1 - y;
      labels_[s] = y;
    }
  }

  std::size_t dim() const override { return n_params_; }
  const TinyMlpSpec& spec() const { return spec_; }
  std::size_t n_samples() const { return labels_.size(); }

  EvalResult eval(const Vec& x, long t, std::uint64_t seed) const override {
    check_input(x);
    Rng rng = Rng(seed).substream(std::uint64_t(t));
    std::vector<std::size_t> idx(spec_.batch_size);
    for (auto& j : idx) j = rng.below(labels_.size());
    return eval_batch(x, idx);
  }

  EvalResult eval_batch(const Vec& x, const std::vector<std::size_t>& idx) const {
    check_input(x);
    if (idx.empty()) throw std::invalid_argument("tiny-mlp: empty batch");
    EvalResult r;
    r.grad.assign(n_params_, 0.0);
    for (std::size_t j : idx) {
      r.loss += sample_loss_and_grad(x, j, r.grad);
    }
    double inv = 1.0 / double(idx.size());
    r.loss *= inv;
    for (double& gi : r.grad) gi *= inv;
    return r;
  }

  /// Mean loss over the whole dataset (deterministic final metric).
  double full_loss(const Vec& x) const {
    check_input(x);
    Vec scratch(n_params_, 0.0);
    double loss = 0.0;
    for (std::size_t j = 0; j < labels_.size(); ++j) {
      loss += sample_loss_and_grad(x, j, scratch);
    }
    return loss / double(labels_.size());
  }

  Vec initial_point(std::uint64_t seed) const override {
    Rng rng = Rng(seed).substream(0x1417);
    Vec x(n_params_);
    const auto& w = spec_.layer_widths;
    std::size_t p = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      double scale = 1.0 / std::sqrt(double(w[l]));
      for (std::size_t k = 0; k < w[l + 1] * w[l]; ++k) x[p++] = scale * rng.normal();
      for (std::size_t k = 0; k < w[l + 1]; ++k) x[p++] = 0.0;
    }
    return x;
  }

 private:
  // Accumulates the gradient of one sample's loss into grad_acc, returns the loss.
  double sample_loss_and_grad(const Vec& x, std::size_t sample, Vec& grad_acc) const {
    const auto& w = spec_.layer_widths;
    std::size_t n_layers = w.size() - 1;

    // forward
    std::vector<Vec> acts(n_layers + 1);
    acts[0] = features_[sample];
    std::size_t p = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const Vec& in = acts[l];
      Vec out(w[l + 1]);
      std::size_t wbase = p;
      for (std::size_t o = 0; o < w[l + 1]; ++o) {
        double s = x[wbase + w[l + 1] * w[l] + o];  // bias
        for (std::size_t i = 0; i < w[l]; ++i) s += x[wbase + o * w[l] + i] * in[i];
        out[o] = (l + 1 == n_layers) ? s : std::tanh(s);
      }
      acts[l + 1] = std::move(out);
      p += w[l + 1] * (w[l] + 1);
    }

    const Vec& logits = acts[n_layers];
    std::size_t y = labels_[sample];
    double mx = std::max(logits[0], logits[1]);
    double lse = mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
    double loss = lse - logits[y];

    // backward
    Vec delta(2);
    for (std::size_t o = 0; o < 2; ++o) {
      delta[o] = std::exp(logits[o] - lse) - (o == y ? 1.0 : 0.0);
    }
    for (std::size_t l = n_layers; l-- > 0;) {
      std::size_t wbase = 0;
      for (std::size_t k = 0; k < l; ++k) wbase += w[k + 1] * (w[k] + 1);
      const Vec& in = acts[l];
      Vec next_delta(w[l], 0.0);
      for (std::size_t o = 0; o < w[l + 1]; ++o) {
        double d = delta[o];
        for (std::size_t i = 0; i < w[l]; ++i) {
          grad_acc[wbase + o * w[l] + i] += d * in[i];
          next_delta[i] += d * x[wbase + o * w[l] + i];
        }
        grad_acc[wbase + w[l + 1] * w[l] + o] += d;
      }
      if (l > 0) {
        for (std::size_t i = 0; i < w[l]; ++i) {
          next_delta[i] *= 1.0 - acts[l][i] * acts[l][i];  // tanh'
        }
      }
      delta = std::move(next_delta);
    }
    return loss;
  }

  TinyMlpSpec spec_;
  std::size_t n_params_ = 0;
  std::vector<Vec> features_;
  std::vector<std::size_t> labels_;
};

}  // namespace mada
