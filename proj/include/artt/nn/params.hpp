#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "artt/error.hpp"
#include "artt/rng.hpp"

namespace artt::nn {

using Matrix = Eigen::MatrixXd;

/// Named parameter. Biases are stored as single-column matrices and reported
/// with a one-dimensional shape.
struct Tensor {
  std::string name;
  Matrix value;
  bool is_vector = false;

  std::vector<std::int64_t> shape() const {
    if (is_vector) return {value.rows()};
    return {value.rows(), value.cols()};
  }
};

/// Ordered name -> tensor map holding one network's parameters (or a gradient
/// with the same layout). `version` changes on every in-place update so stale
/// activation tapes can be detected.
struct ParamSet {
  std::vector<Tensor> tensors;
  std::int64_t step_count = 0;
  std::uint64_t version = 0;

  std::size_t size() const { return tensors.size(); }
  Tensor& operator[](std::size_t i) { return tensors[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors[i]; }

  const Tensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.value.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& t : tensors)
      if (!t.value.allFinite()) return false;
    return true;
  }

  void touch() { ++version; }

  ParamSet zeros_like() const {
    ParamSet z;
    z.tensors.reserve(tensors.size());
    for (const auto& t : tensors)
      z.tensors.push_back({t.name, Matrix::Zero(t.value.rows(), t.value.cols()), t.is_vector});
    return z;
  }

  void set_zero() {
    for (auto& t : tensors) t.value.setZero();
  }

  /// this += w * other (same layout required).
  void add_scaled(const ParamSet& other, double w) {
    require_same_layout(other, "add_scaled");
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i].value += w * other.tensors[i].value;
  }

  void require_same_layout(const ParamSet& other, const char* op) const {
    if (other.tensors.size() != tensors.size())
      throw ConfigError(std::string(op) + ": parameter count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& a = tensors[i];
      const auto& b = other.tensors[i];
      if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols())
        throw ConfigError(std::string(op) + ": layout mismatch at '" + a.name + "'");
    }
  }
};

/// Glorot-uniform weight, zero bias.
inline Tensor glorot_weight(const std::string& name, int fan_out, int fan_in, Rng& rng) {
  const double lim = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(fan_out, fan_in);
  std::uniform_real_distribution<double> u(-lim, lim);
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  return {name, std::move(w), false};
}

inline Tensor zero_bias(const std::string& name, int n) { return {name, Matrix::Zero(n, 1), true}; }

}  // namespace artt::nn
