// Copyright 2026 The Blankskip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BLANKSKIP_TENSOR_H_
#define BLANKSKIP_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace blankskip {

class Rng;
struct TensorImpl;

bool GradRecordingEnabled();

// Scoped guard that disables graph recording on the current thread.
// Inference paths wrap themselves in one so no autograd bookkeeping is paid.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Dense double-precision tensor participating in a dynamically built
// reverse-mode graph. Copying a Tensor copies a handle to the same node.
// Rank 0 is not used; scalars have shape {1}.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(std::vector<int64_t> shape);
  static Tensor Constant(std::vector<int64_t> shape, double value);
  static Tensor FromData(std::vector<int64_t> shape, std::vector<double> values);
  static Tensor FromRows(const std::vector<std::vector<double>>& rows);
  static Tensor ScalarTensor(double value);
  static Tensor Randn(const std::vector<int64_t>& shape, Rng* rng,
                      double stddev = 1.0);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int64_t>& shape() const;
  int ndim() const;
  int64_t dim(int axis) const;
  int64_t numel() const;
  bool is_scalar() const { return numel() == 1; }
  double item() const;
  double At(int64_t i) const;
  double At(int64_t i, int64_t j) const;

  const std::vector<double>& values() const;
  // Direct write access to the stored values; used by optimizers. Mutating a
  // node that other graphs still reference invalidates those graphs.
  std::vector<double>& mutable_values();

  bool requires_grad() const;
  void set_requires_grad(bool enabled);
  bool has_grad() const;
  // Accumulated gradient; allocates a zero buffer on first access.
  const std::vector<double>& grad() const;
  void ZeroGrad();

  // Reverse-mode pass from a scalar root. Gradients from repeated calls
  // accumulate until explicitly zeroed.
  void Backward() const;

  TensorImpl* impl() const { return impl_.get(); }
  std::shared_ptr<TensorImpl> impl_ptr() const { return impl_; }

 private:
  friend Tensor WrapImpl(std::shared_ptr<TensorImpl> impl);
  std::shared_ptr<TensorImpl> impl_;
};

// ---- differentiable primitives ----

Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);
// Same shape, or broadcast of b over a: [m,n]+[n] (rows) or [m,n]+[m,1]
// (columns).
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double factor);
Tensor Reshape(const Tensor& a, std::vector<int64_t> shape);
Tensor Concat(const std::vector<Tensor>& parts, int axis);
Tensor Slice(const Tensor& a, int axis, int64_t start, int64_t length);
Tensor GatherRows(const Tensor& a, const std::vector<int64_t>& rows);
// base with rows[i] replaced by src[i]; indices must be unique.
Tensor ScatterRows(const Tensor& base, const std::vector<int64_t>& rows,
                   const Tensor& src);
// Row-wise normalization, denominator sqrt(variance + eps); a constant row
// maps to zeros before gain/bias.
Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 double eps = 1e-5);
Tensor Softmax(const Tensor& x);     // last axis
Tensor LogSoftmax(const Tensor& x);  // last axis
Tensor Sigmoid(const Tensor& x);
Tensor Tanh(const Tensor& x);
Tensor Gelu(const Tensor& x);
Tensor Softplus(const Tensor& x);
// x [T,C], weight [C,K] with K odd, bias [C]; zero padding, same length out.
Tensor DepthwiseConv1d(const Tensor& x, const Tensor& weight,
                       const Tensor& bias);
Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);
Tensor Detach(const Tensor& x);

// log(sum(exp(values))) via max shift; all -inf stays -inf; empty throws.
double LogSumExp(const std::vector<double>& values);

// Central-difference check of fn's gradient at `point`. fn must map a tensor
// to a scalar tensor and be re-evaluable. Returns the max over coordinates of
// |analytic - numeric| / max(1, |analytic|, |numeric|).
double GradCheck(const std::function<Tensor(const Tensor&)>& fn,
                 const Tensor& point, double eps = 1e-4);

std::string ShapeToString(const std::vector<int64_t>& shape);

namespace detail {

// gout: adjoint of this node; value: this node's forward values; gparents:
// adjoint buffers aligned with the parent list, nullptr where the parent is
// outside the differentiated set.
using BackwardFn = std::function<void(
    const std::vector<double>& gout, const std::vector<double>& value,
    const std::vector<std::vector<double>*>& gparents)>;

Tensor MakeOp(std::vector<int64_t> shape, std::vector<double> value,
              const std::vector<Tensor>& parents, BackwardFn backward);

}  // namespace detail

}  // namespace blankskip

#endif  // BLANKSKIP_TENSOR_H_
