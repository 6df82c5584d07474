#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "artt/dsp/stft.hpp"
#include "artt/nn/params.hpp"

namespace artt::nn {

/// How the 2F outputs of the last layer become the estimate of frame t.
///  mapping: RI of the estimate directly (rescaled by the input level).
///  mask:    RI of a complex mask 1 + o applied to input frame t.
enum class Head { kMapping, kMask };

inline const char* to_string(Head h) { return h == Head::kMapping ? "mapping" : "mask"; }

inline Head parse_head(const std::string& s) {
  if (s == "mapping") return Head::kMapping;
  if (s == "mask") return Head::kMask;
  throw ConfigError("unknown model head '" + s + "' (expected mapping|mask)");
}

struct ModelConfig {
  int context = 3;
  int hidden = 256;
  int n_layers = 2;
  int freq_bins = 257;
  Head head = Head::kMask;
  // Magnitude exponent applied to the level-normalized input features (1 = none).
  double compress = 0.5;
  // Smoothing coefficients of causal history features: per coefficient a, F rows
  // e_t = a e_{t-1} + (1 - a) m_{t-1}, m the compressed magnitude of a frame.
  std::vector<double> history{0.7, 0.9, 0.97};
  // Zero output layer at initialization, so a fresh mask model is the identity.
  bool zero_output_init = true;

  int context_dim() const { return 2 * freq_bins * (2 * context + 1); }
  int input_dim() const { return context_dim() + freq_bins * static_cast<int>(history.size()); }
  int output_dim() const { return 2 * freq_bins; }

  void validate() const {
    if (context < 0) throw ConfigError("model: context must be >= 0");
    if (hidden < 1) throw ConfigError("model: hidden must be >= 1");
    if (n_layers < 1) throw ConfigError("model: n_layers must be >= 1");
    if (freq_bins < 2) throw ConfigError("model: freq_bins must be >= 2");
    if (!(compress > 0.0 && compress <= 1.0)) throw ConfigError("model: compress must be in (0, 1]");
    for (double a : history)
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("model: history coefficients must be in (0, 1)");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline std::string layer_name(int l, const char* what) {
  return "layer" + std::to_string(l) + "." + what;
}

/// Layout: layer0..layer{n-1} hidden (weight, bias), then out (weight, bias).
inline ParamSet init_params(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ParamSet p;
  int fan_in = cfg.input_dim();
  for (int l = 0; l < cfg.n_layers; ++l) {
    p.tensors.push_back(glorot_weight(layer_name(l, "weight"), cfg.hidden, fan_in, rng));
    p.tensors.push_back(zero_bias(layer_name(l, "bias"), cfg.hidden));
    fan_in = cfg.hidden;
  }
  p.tensors.push_back(glorot_weight("out.weight", cfg.output_dim(), fan_in, rng));
  if (cfg.zero_output_init) p.tensors.back().value.setZero();
  p.tensors.push_back(zero_bias("out.bias", cfg.output_dim()));
  return p;
}

inline void check_layout(const ParamSet& p, const ModelConfig& cfg) {
  if (p.size() != static_cast<std::size_t>(2 * cfg.n_layers + 2))
    throw ConfigError("model: parameter count does not match config");
  int fan_in = cfg.input_dim();
  for (int l = 0; l <= cfg.n_layers; ++l) {
    const int rows = l < cfg.n_layers ? cfg.hidden : cfg.output_dim();
    const auto& w = p[2 * l].value;
    const auto& b = p[2 * l + 1].value;
    if (w.rows() != rows || w.cols() != fan_in || b.rows() != rows || b.cols() != 1)
      throw ConfigError("model: shape mismatch at '" + p[2 * l].name + "'");
    fan_in = rows;
  }
}

/// Activations kept by `forward` for `backward`.
struct Tape {
  const ParamSet* params = nullptr;
  std::uint64_t version = 0;
  ModelConfig cfg;
  Matrix x0;                  // input features, one column per frame
  std::vector<Matrix> hidden; // post-ReLU activations per hidden layer
  dsp::ComplexSpectrogram input;
  double scale = 1.0;
};

namespace detail {

// Level used to normalize features: RMS magnitude over all bins (floored).
inline double input_scale(const dsp::ComplexSpectrogram& s) {
  double acc = 0.0;
  for (const auto& z : s.data) acc += std::norm(z);
  const double rms = std::sqrt(acc / std::max<std::size_t>(1, s.data.size()));
  return std::max(rms, 1e-12);
}

inline Matrix features(const dsp::ComplexSpectrogram& s, const ModelConfig& cfg, double scale) {
  const int F = cfg.freq_bins;
  const int T = s.num_frames;
  const int C = cfg.context;
  // Compressed, level-normalized RI of every frame.
  Matrix base(2 * F, T);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < F; ++k) {
      const dsp::cplx z = s.at(t, k) / scale;
      const double m = std::abs(z);
      const double g = (cfg.compress == 1.0 || m == 0.0) ? 1.0 : std::pow(m, cfg.compress - 1.0);
      base(k, t) = g * z.real();
      base(F + k, t) = g * z.imag();
    }
  }
  Matrix x = Matrix::Zero(cfg.input_dim(), T);
  for (int t = 0; t < T; ++t)
    for (int j = -C; j <= C; ++j) {
      const int src = t + j;
      if (src < 0 || src >= T) continue;
      x.block(static_cast<Eigen::Index>(j + C) * 2 * F, t, 2 * F, 1) = base.col(src);
    }
  const Eigen::Index h0 = cfg.context_dim();
  for (std::size_t h = 0; h < cfg.history.size(); ++h) {
    const double a = cfg.history[h];
    Eigen::VectorXd e = Eigen::VectorXd::Zero(F);
    for (int t = 0; t < T; ++t) {
      x.block(h0 + static_cast<Eigen::Index>(h) * F, t, F, 1) = e;
      const auto re = base.col(t).head(F).array(), im = base.col(t).tail(F).array();
      e = a * e.array() + (1.0 - a) * (re.square() + im.square()).sqrt();
    }
  }
  return x;
}

}  // namespace detail

struct ForwardResult {
  dsp::ComplexSpectrogram estimate;
  Tape tape;
};

/// Frame-wise MLP over a (2C+1)-frame context of RI features.
inline ForwardResult forward(const ParamSet& p, const ModelConfig& cfg,
                             const dsp::ComplexSpectrogram& input) {
  if (input.num_bins != cfg.freq_bins)
    throw ConfigError("forward: input has " + std::to_string(input.num_bins) + " bins, model expects " +
                      std::to_string(cfg.freq_bins));
  check_layout(p, cfg);
  ForwardResult r;
  Tape& tp = r.tape;
  tp.params = &p;
  tp.version = p.version;
  tp.cfg = cfg;
  tp.scale = detail::input_scale(input);
  tp.x0 = detail::features(input, cfg, tp.scale);
  const Matrix* prev = &tp.x0;
  tp.hidden.reserve(cfg.n_layers);
  for (int l = 0; l < cfg.n_layers; ++l) {
    Matrix h = p[2 * l].value * *prev;
    h.colwise() += p[2 * l + 1].value.col(0);
    tp.hidden.push_back(h.cwiseMax(0.0));
    prev = &tp.hidden.back();
  }
  Matrix o = p[2 * cfg.n_layers].value * *prev;
  o.colwise() += p[2 * cfg.n_layers + 1].value.col(0);

  const int F = cfg.freq_bins;
  r.estimate = dsp::ComplexSpectrogram::zeros_like(input);
  for (int t = 0; t < input.num_frames; ++t)
    for (int k = 0; k < F; ++k) {
      const dsp::cplx oz(o(k, t), o(F + k, t));
      r.estimate.at(t, k) =
          cfg.head == Head::kMapping ? tp.scale * oz : (1.0 + oz) * input.at(t, k);
    }
  tp.input = input;
  return r;
}

/// Reverse pass: `d_estimate` holds dL/dRe + i dL/dIm per estimate bin.
/// Returns gradients with the parameter layout.
inline ParamSet backward(const Tape& tp, const dsp::ComplexSpectrogram& d_estimate) {
  if (tp.params == nullptr) throw UsageError("backward: empty tape");
  if (tp.params->version != tp.version)
    throw UsageError("backward: stale tape (parameters changed after forward)");
  const ParamSet& p = *tp.params;
  const ModelConfig& cfg = tp.cfg;
  const int F = cfg.freq_bins;
  const int T = tp.input.num_frames;
  if (d_estimate.num_frames != T || d_estimate.num_bins != F)
    throw UsageError("backward: gradient shape does not match tape");

  Matrix d_o(2 * F, T);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < F; ++k) {
      const dsp::cplx g = d_estimate.at(t, k);
      const dsp::cplx d = cfg.head == Head::kMapping ? tp.scale * g : g * std::conj(tp.input.at(t, k));
      d_o(k, t) = d.real();
      d_o(F + k, t) = d.imag();
    }

  ParamSet grads = p.zeros_like();
  Matrix delta = std::move(d_o);
  for (int l = cfg.n_layers; l >= 0; --l) {
    const Matrix& a_in = l == 0 ? tp.x0 : tp.hidden[l - 1];
    grads[2 * l].value.noalias() = delta * a_in.transpose();
    grads[2 * l + 1].value = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = p[2 * l].value.transpose() * delta;
    delta = back.cwiseProduct((tp.hidden[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return grads;
}

}  // namespace artt::nn
