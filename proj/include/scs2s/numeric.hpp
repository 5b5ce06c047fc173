/*
 * Copyright 2026 The scs2s Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SCS2S_NUMERIC_HPP
#define SCS2S_NUMERIC_HPP

#include <Eigen/Dense>

#include <algorithm>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scs2s/errors.hpp"

namespace scs2s {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;
using Vector = VectorX<double>;
using TokenMatrix = MatrixX<int>;

/// Inputs to exp() are clamped to this magnitude.
inline constexpr double kExpClamp = 500.0;

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

/// Checked matrix product. Throws DimensionError naming both shapes on a
/// mismatch and NumericError if the product overflows.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.rows(), a.cols()) +
                         " by " + shape_string(b.rows(), b.cols()));
  }
  MatrixX<typename DerivedA::Scalar> out = a * b;
  if (!out.allFinite()) throw NumericError("matmul: non-finite result");
  return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> sigmoid(const Eigen::MatrixBase<Derived>& m) {
  using S = typename Derived::Scalar;
  return m.unaryExpr([](S x) {
    x = std::clamp(x, S(-kExpClamp), S(kExpClamp));
    return S(1) / (S(1) + std::exp(-x));
  });
}

template <typename Derived>
MatrixX<typename Derived::Scalar> tanh(const Eigen::MatrixBase<Derived>& m) {
  return m.array().tanh().matrix();
}

template <typename Derived>
MatrixX<typename Derived::Scalar> relu(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseMax(typename Derived::Scalar(0));
}

/// Row-wise softmax, max-shifted.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& m) {
  using S = typename Derived::Scalar;
  MatrixX<S> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const S peak = m.row(i).maxCoeff();
    S total = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const S e = std::exp(std::max(m(i, j) - peak, S(-kExpClamp)));
      out(i, j) = e;
      total += e;
    }
    out.row(i) /= total;
  }
  return out;
}

enum class Activation { sigmoid, tanh, softmax_rows, relu };

template <typename Derived>
MatrixX<typename Derived::Scalar> elementwise(Activation op, const Eigen::MatrixBase<Derived>& m) {
  switch (op) {
    case Activation::sigmoid: return sigmoid(m);
    case Activation::tanh: return tanh(m);
    case Activation::softmax_rows: return softmax_rows(m);
    case Activation::relu: return relu(m);
  }
  throw InputError("elementwise: unknown activation");
}

/// Named (value, grad) slots kept in insertion order.
template <typename Scalar>
class BasicParamStore {
 public:
  struct Slot {
    std::string name;
    MatrixX<Scalar> value;
    MatrixX<Scalar> grad;
  };

  /// Adds a zero-initialized slot and returns its index.
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    if (index_.contains(name)) throw InputError("duplicate parameter slot: " + name);
    index_.emplace(name, slots_.size());
    slots_.push_back(Slot{std::move(name), MatrixX<Scalar>::Zero(rows, cols),
                          MatrixX<Scalar>::Zero(rows, cols)});
    return slots_.size() - 1;
  }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw InputError("no parameter slot named " + std::string(name));
    return it->second;
  }
  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

  Slot& operator[](std::size_t i) { return slots_[i]; }
  const Slot& operator[](std::size_t i) const { return slots_[i]; }
  Slot& at(std::string_view name) { return slots_[index_of(name)]; }
  const Slot& at(std::string_view name) const { return slots_[index_of(name)]; }

  std::size_t size() const { return slots_.size(); }
  auto begin() { return slots_.begin(); }
  auto end() { return slots_.end(); }
  auto begin() const { return slots_.begin(); }
  auto end() const { return slots_.end(); }

  void zero_grad() {
    for (auto& s : slots_) s.grad.setZero();
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& s : slots_) n += static_cast<std::size_t>(s.value.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& s : slots_)
      if (!s.value.allFinite()) return false;
    return true;
  }

 private:
  std::vector<Slot> slots_;
  std::unordered_map<std::string, std::size_t> index_;
};

using ParamStore = BasicParamStore<double>;

/// Seeded pseudo-random source. The engine (mt19937_64) is fully specified
/// by the standard and every derived draw is computed here rather than by
/// the implementation-defined <random> distributions, so streams agree
/// across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights);
  /// Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }
  /// Child stream for an independent consumer.
  Rng split() { return Rng(next_u64()); }

 private:
  std::mt19937_64 engine_;
};

template <typename Scalar>
void fill_uniform(MatrixX<Scalar>& m, Rng& rng, double lo, double hi) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Scalar(rng.uniform(lo, hi));
}

/// Central-difference gradient check.
///
/// `grad_fn` zeroes and fills the gradient buffers and returns the loss; it
/// runs once at the base point. `loss_fn` returns the loss alone and runs
/// twice per coordinate. Returns the maximum over coordinates of
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|) and leaves the
/// analytic gradient in the store.
template <typename Scalar>
double grad_check(const std::function<Scalar(BasicParamStore<Scalar>&)>& grad_fn,
                  const std::function<Scalar(BasicParamStore<Scalar>&)>& loss_fn,
                  BasicParamStore<Scalar>& params, double epsilon = 1e-5) {
  using std::abs;
  const Scalar base = grad_fn(params);
  if (!std::isfinite(static_cast<double>(base)))
    throw NumericError("grad_check: non-finite loss at base point");

  std::vector<MatrixX<Scalar>> analytic;
  analytic.reserve(params.size());
  for (const auto& slot : params) analytic.push_back(slot.grad);

  const Scalar eps = static_cast<Scalar>(epsilon);
  Scalar worst = 0;
  for (std::size_t s = 0; s < params.size(); ++s) {
    MatrixX<Scalar>& value = params[s].value;
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const Scalar saved = value.data()[i];
      value.data()[i] = saved + eps;
      const Scalar plus = loss_fn(params);
      value.data()[i] = saved - eps;
      const Scalar minus = loss_fn(params);
      value.data()[i] = saved;
      if (!std::isfinite(static_cast<double>(plus)) || !std::isfinite(static_cast<double>(minus))) {
        throw NumericError("grad_check: non-finite loss perturbing " + params[s].name + "[" +
                           std::to_string(i) + "]");
      }
      const Scalar numeric = (plus - minus) / (2 * eps);
      const Scalar a = analytic[s].data()[i];
      const Scalar rel = abs(a - numeric) / std::max(Scalar(1e-8), abs(a) + abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  for (std::size_t s = 0; s < params.size(); ++s) params[s].grad = analytic[s];
  return static_cast<double>(worst);
}

/// Single-function form: `loss_fn` fills the gradient buffers on every call
/// and only the first call's gradient is kept.
template <typename Scalar>
double grad_check(const std::function<Scalar(BasicParamStore<Scalar>&)>& loss_fn,
                  BasicParamStore<Scalar>& params, double epsilon = 1e-5) {
  return grad_check<Scalar>(loss_fn, loss_fn, params, epsilon);
}

inline double grad_check(const std::function<double(ParamStore&)>& loss_fn, ParamStore& params,
                         double epsilon = 1e-5) {
  return grad_check<double>(loss_fn, params, epsilon);
}

/// Global L2 norm over every gradient buffer.
double global_grad_norm(const ParamStore& params);

}  // namespace scs2s

#endif  // SCS2S_NUMERIC_HPP
