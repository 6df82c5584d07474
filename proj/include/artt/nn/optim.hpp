#pragma once

#include <cmath>
#include <vector>

#include "artt/nn/params.hpp"

namespace artt::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("adam: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw ConfigError("adam: betas must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("adam: eps must be > 0");
  }
};

/// Adam moments mirroring a ParamSet.
struct OptimState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t t = 0;        // applied updates
  std::int64_t skipped = 0;  // updates rejected for non-finite gradients

  static OptimState for_params(const ParamSet& p, AdamConfig cfg = {}) {
    cfg.validate();
    OptimState s;
    s.config = cfg;
    for (const auto& t : p.tensors) {
      s.m.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
      s.v.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
    }
    return s;
  }
};

/// One bias-corrected Adam update. Returns false (and counts the skip) when any
/// gradient entry is non-finite; parameters and moments are then untouched.
inline bool adam_step(ParamSet& theta, const ParamSet& g, OptimState& s) {
  theta.require_same_layout(g, "adam_step");
  if (s.m.size() != theta.size()) throw ConfigError("adam_step: optimizer state does not match parameters");
  if (!g.all_finite()) {
    ++s.skipped;
    return false;
  }
  const auto& c = s.config;
  ++s.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto& gi = g[i].value.array();
    auto m = s.m[i].array();
    auto v = s.v[i].array();
    m = c.beta1 * m + (1.0 - c.beta1) * gi;
    v = c.beta2 * v + (1.0 - c.beta2) * gi.square();
    theta[i].value.array() -= c.lr * (m / bc1) / ((v / bc2).sqrt() + c.eps);
  }
  ++theta.step_count;
  theta.touch();
  return true;
}

/// Mean-teacher update: teacher <- alpha * teacher + (1 - alpha) * student.
inline void ema_update(ParamSet& teacher, const ParamSet& student, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("ema_update: alpha must be in [0, 1)");
  teacher.require_same_layout(student, "ema_update");
  for (std::size_t i = 0; i < teacher.size(); ++i)
    teacher[i].value = alpha * teacher[i].value + (1.0 - alpha) * student[i].value;
  teacher.touch();
}

}  // namespace artt::nn
