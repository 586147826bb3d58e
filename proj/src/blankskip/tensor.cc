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

#include "blankskip/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "blankskip/rng.h"

namespace blankskip {

namespace {

thread_local bool g_grad_recording = true;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int64_t ShapeNumel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

void CheckArg(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

struct TensorImpl {
  std::vector<int64_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first touched
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  detail::BackwardFn backward_fn;
};

bool GradRecordingEnabled() { return g_grad_recording; }

NoGradGuard::NoGradGuard() : prev_(g_grad_recording) {
  g_grad_recording = false;
}

NoGradGuard::~NoGradGuard() { g_grad_recording = prev_; }

Tensor WrapImpl(std::shared_ptr<TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

std::string ShapeToString(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

// ---- Tensor basics ----

Tensor Tensor::Zeros(std::vector<int64_t> shape) {
  return Constant(std::move(shape), 0.0);
}

Tensor Tensor::Constant(std::vector<int64_t> shape, double value) {
  CheckArg(!shape.empty(), "tensor: empty shape");
  for (int64_t d : shape) CheckArg(d > 0, "tensor: nonpositive extent in " + ShapeToString(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->value.assign(ShapeNumel(shape), value);
  impl->shape = std::move(shape);
  return WrapImpl(std::move(impl));
}

Tensor Tensor::FromData(std::vector<int64_t> shape, std::vector<double> values) {
  CheckArg(!shape.empty(), "tensor: empty shape");
  CheckArg(ShapeNumel(shape) == static_cast<int64_t>(values.size()),
           "tensor: values length " + std::to_string(values.size()) +
               " does not match shape " + ShapeToString(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->value = std::move(values);
  return WrapImpl(std::move(impl));
}

Tensor Tensor::FromRows(const std::vector<std::vector<double>>& rows) {
  CheckArg(!rows.empty(), "tensor: no rows");
  int64_t cols = static_cast<int64_t>(rows[0].size());
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    CheckArg(static_cast<int64_t>(r.size()) == cols, "tensor: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return FromData({static_cast<int64_t>(rows.size()), cols}, std::move(flat));
}

Tensor Tensor::ScalarTensor(double value) { return FromData({1}, {value}); }

Tensor Tensor::Randn(const std::vector<int64_t>& shape, Rng* rng,
                     double stddev) {
  Tensor t = Zeros(shape);
  for (double& v : t.impl_->value) v = rng->Normal() * stddev;
  return t;
}

const std::vector<int64_t>& Tensor::shape() const { return impl_->shape; }
int Tensor::ndim() const { return static_cast<int>(impl_->shape.size()); }
int64_t Tensor::dim(int axis) const { return impl_->shape.at(axis); }
int64_t Tensor::numel() const { return static_cast<int64_t>(impl_->value.size()); }

double Tensor::item() const {
  if (numel() != 1) {
    throw std::runtime_error("tensor: item() on non-scalar shape " +
                             ShapeToString(impl_->shape));
  }
  return impl_->value[0];
}

double Tensor::At(int64_t i) const { return impl_->value.at(i); }

double Tensor::At(int64_t i, int64_t j) const {
  return impl_->value.at(i * impl_->shape.back() + j);
}

const std::vector<double>& Tensor::values() const { return impl_->value; }
std::vector<double>& Tensor::mutable_values() { return impl_->value; }

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool enabled) {
  impl_->requires_grad = enabled;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->value.size(), 0.0);
  return impl_->grad;
}

void Tensor::ZeroGrad() { impl_->grad.assign(impl_->value.size(), 0.0); }

// ---- backward ----

void Tensor::Backward() const {
  if (!impl_) throw std::runtime_error("backward: undefined tensor");
  if (numel() != 1) {
    throw std::runtime_error("backward: root must be scalar, got shape " +
                             ShapeToString(impl_->shape));
  }
  if (!impl_->requires_grad) return;  // nothing reachable needs gradients

  // Topological order: every node appears after all of its parents.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  std::vector<std::pair<TensorImpl*, size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl* parent = node->parents[next].get();
      ++next;
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Per-pass adjoints live in scratch buffers so repeated Backward calls
  // accumulate cleanly into .grad.
  std::unordered_map<TensorImpl*, std::vector<double>> adjoint;
  adjoint[impl_.get()] = {1.0};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    auto found = adjoint.find(node);
    if (found == adjoint.end() || !node->backward_fn) continue;
    std::vector<std::vector<double>*> gparents(node->parents.size(), nullptr);
    for (size_t i = 0; i < node->parents.size(); ++i) {
      TensorImpl* parent = node->parents[i].get();
      if (!parent->requires_grad) continue;
      auto& buf = adjoint[parent];
      if (buf.empty()) buf.assign(parent->value.size(), 0.0);
      gparents[i] = &buf;
    }
    node->backward_fn(found->second, node->value, gparents);
  }

  for (TensorImpl* node : order) {
    auto found = adjoint.find(node);
    if (found == adjoint.end()) continue;
    if (node->grad.empty()) node->grad.assign(node->value.size(), 0.0);
    for (size_t i = 0; i < node->grad.size(); ++i) {
      node->grad[i] += found->second[i];
    }
  }
}

namespace detail {

Tensor MakeOp(std::vector<int64_t> shape, std::vector<double> value,
              const std::vector<Tensor>& parents, BackwardFn backward) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->value = std::move(value);
  if (GradRecordingEnabled()) {
    bool any = false;
    for (const Tensor& p : parents) any = any || p.requires_grad();
    if (any) {
      impl->requires_grad = true;
      impl->parents.reserve(parents.size());
      for (const Tensor& p : parents) impl->parents.push_back(p.impl_ptr());
      impl->backward_fn = std::move(backward);
    }
  }
  return WrapImpl(std::move(impl));
}

}  // namespace detail

// ---- ops ----

namespace {

std::vector<Tensor> Parents1(const Tensor& a) { return {a}; }
std::vector<Tensor> Parents2(const Tensor& a, const Tensor& b) {
  return {a, b};
}

void CheckDefined(const Tensor& t, const char* op) {
  CheckArg(t.defined(), std::string(op) + ": undefined tensor");
}

// Rows/cols of a tensor treated as a row-major matrix: 1-D tensors are a
// single row.
std::pair<int64_t, int64_t> AsMatrix(const Tensor& t) {
  if (t.ndim() == 1) return {1, t.dim(0)};
  CheckArg(t.ndim() == 2, "expected rank <= 2, got " + ShapeToString(t.shape()));
  return {t.dim(0), t.dim(1)};
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  CheckDefined(a, "matmul");
  CheckDefined(b, "matmul");
  CheckArg(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(0),
           "matmul: shape mismatch " + ShapeToString(a.shape()) + " vs " +
               ShapeToString(b.shape()));
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = av + i * k;
    double* orow = out.data() + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double s = arow[p];
      if (s == 0.0) continue;
      const double* brow = bv + p * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  auto aval = a.values();
  auto bval = b.values();
  return detail::MakeOp(
      {m, n}, std::move(out), Parents2(a, b),
      [m, k, n, aval = std::move(aval), bval = std::move(bval)](
          const std::vector<double>& gout, const std::vector<double>&,
          const std::vector<std::vector<double>*>& gp) {
        if (gp[0]) {
          // da = gout * b^T
          std::vector<double>& ga = *gp[0];
          for (int64_t i = 0; i < m; ++i) {
            const double* grow = gout.data() + i * n;
            double* garow = ga.data() + i * k;
            for (int64_t p = 0; p < k; ++p) {
              const double* brow = bval.data() + p * n;
              double acc = 0.0;
              for (int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
              garow[p] += acc;
            }
          }
        }
        if (gp[1]) {
          // db = a^T * gout
          std::vector<double>& gb = *gp[1];
          for (int64_t i = 0; i < m; ++i) {
            const double* arow = aval.data() + i * k;
            const double* grow = gout.data() + i * n;
            for (int64_t p = 0; p < k; ++p) {
              const double s = arow[p];
              if (s == 0.0) continue;
              double* gbrow = gb.data() + p * n;
              for (int64_t j = 0; j < n; ++j) gbrow[j] += s * grow[j];
            }
          }
        }
      });
}

Tensor Transpose(const Tensor& a) {
  CheckDefined(a, "transpose");
  CheckArg(a.ndim() == 2, "transpose: expected rank 2, got " +
                              ShapeToString(a.shape()));
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  const double* av = a.values().data();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return detail::MakeOp(
      {n, m}, std::move(out), Parents1(a),
      [m, n](const std::vector<double>& gout, const std::vector<double>&,
             const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& ga = *gp[0];
        for (int64_t j = 0; j < n; ++j)
          for (int64_t i = 0; i < m; ++i) ga[i * n + j] += gout[j * m + i];
      });
}

Tensor Add(const Tensor& a, const Tensor& b) {
  CheckDefined(a, "add");
  CheckDefined(b, "add");
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.values());
    const double* bv = b.values().data();
    for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return detail::MakeOp(
        a.shape(), std::move(out), Parents2(a, b),
        [](const std::vector<double>& gout, const std::vector<double>&,
           const std::vector<std::vector<double>*>& gp) {
          for (int side = 0; side < 2; ++side) {
            if (!gp[side]) continue;
            std::vector<double>& g = *gp[side];
            for (size_t i = 0; i < gout.size(); ++i) g[i] += gout[i];
          }
        });
  }
  // broadcast: [m,n] + [n] over rows, or [m,n] + [m,1] over columns
  CheckArg(a.ndim() == 2, "add: shape mismatch " + ShapeToString(a.shape()) +
                              " vs " + ShapeToString(b.shape()));
  const int64_t m = a.dim(0), n = a.dim(1);
  const bool row_bcast = b.ndim() == 1 && b.dim(0) == n;
  const bool col_bcast = b.ndim() == 2 && b.dim(0) == m && b.dim(1) == 1;
  CheckArg(row_bcast || col_bcast,
           "add: shape mismatch " + ShapeToString(a.shape()) + " vs " +
               ShapeToString(b.shape()));
  std::vector<double> out(a.values());
  const double* bv = b.values().data();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j)
      out[i * n + j] += row_bcast ? bv[j] : bv[i];
  return detail::MakeOp(
      a.shape(), std::move(out), Parents2(a, b),
      [m, n, row_bcast](const std::vector<double>& gout,
                        const std::vector<double>&,
                        const std::vector<std::vector<double>*>& gp) {
        if (gp[0]) {
          std::vector<double>& ga = *gp[0];
          for (size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i];
        }
        if (gp[1]) {
          std::vector<double>& gb = *gp[1];
          for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j)
              gb[row_bcast ? j : i] += gout[i * n + j];
        }
      });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  CheckDefined(a, "sub");
  CheckDefined(b, "sub");
  CheckArg(a.shape() == b.shape(), "sub: shape mismatch " +
                                       ShapeToString(a.shape()) + " vs " +
                                       ShapeToString(b.shape()));
  std::vector<double> out(a.values());
  const double* bv = b.values().data();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return detail::MakeOp(
      a.shape(), std::move(out), Parents2(a, b),
      [](const std::vector<double>& gout, const std::vector<double>&,
         const std::vector<std::vector<double>*>& gp) {
        if (gp[0]) {
          std::vector<double>& ga = *gp[0];
          for (size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i];
        }
        if (gp[1]) {
          std::vector<double>& gb = *gp[1];
          for (size_t i = 0; i < gout.size(); ++i) gb[i] -= gout[i];
        }
      });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  CheckDefined(a, "mul");
  CheckDefined(b, "mul");
  CheckArg(a.shape() == b.shape(), "mul: shape mismatch " +
                                       ShapeToString(a.shape()) + " vs " +
                                       ShapeToString(b.shape()));
  std::vector<double> out(a.values());
  const double* bv = b.values().data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  auto aval = a.values();
  auto bval = b.values();
  return detail::MakeOp(
      a.shape(), std::move(out), Parents2(a, b),
      [aval = std::move(aval), bval = std::move(bval)](
          const std::vector<double>& gout, const std::vector<double>&,
          const std::vector<std::vector<double>*>& gp) {
        if (gp[0]) {
          std::vector<double>& ga = *gp[0];
          for (size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i] * bval[i];
        }
        if (gp[1]) {
          std::vector<double>& gb = *gp[1];
          for (size_t i = 0; i < gout.size(); ++i) gb[i] += gout[i] * aval[i];
        }
      });
}

Tensor Scale(const Tensor& a, double factor) {
  CheckDefined(a, "scale");
  std::vector<double> out(a.values());
  for (double& v : out) v *= factor;
  return detail::MakeOp(
      a.shape(), std::move(out), Parents1(a),
      [factor](const std::vector<double>& gout, const std::vector<double>&,
               const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& ga = *gp[0];
        for (size_t i = 0; i < gout.size(); ++i) ga[i] += factor * gout[i];
      });
}

Tensor Reshape(const Tensor& a, std::vector<int64_t> shape) {
  CheckDefined(a, "reshape");
  CheckArg(ShapeNumel(shape) == a.numel(),
           "reshape: cannot view " + ShapeToString(a.shape()) + " as " +
               ShapeToString(shape));
  return detail::MakeOp(
      std::move(shape), a.values(), Parents1(a),
      [](const std::vector<double>& gout, const std::vector<double>&,
         const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& ga = *gp[0];
        for (size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i];
      });
}

Tensor Concat(const std::vector<Tensor>& parts, int axis) {
  CheckArg(!parts.empty(), "concat: no inputs");
  CheckArg(axis == 0 || axis == 1, "concat: axis must be 0 or 1");
  for (const Tensor& p : parts) {
    CheckDefined(p, "concat");
    CheckArg(p.ndim() == 2, "concat: expected rank 2, got " +
                                ShapeToString(p.shape()));
  }
  const int64_t other = axis == 0 ? parts[0].dim(1) : parts[0].dim(0);
  int64_t total = 0;
  for (const Tensor& p : parts) {
    CheckArg(p.dim(1 - axis) == other,
             "concat: shape mismatch " + ShapeToString(parts[0].shape()) +
                 " vs " + ShapeToString(p.shape()));
    total += p.dim(axis);
  }
  const int64_t rows = axis == 0 ? total : other;
  const int64_t cols = axis == 0 ? other : total;
  std::vector<double> out(rows * cols);
  std::vector<int64_t> offsets;
  int64_t off = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(off);
    const double* pv = p.values().data();
    if (axis == 0) {
      std::copy(pv, pv + p.numel(), out.begin() + off * cols);
    } else {
      const int64_t pc = p.dim(1);
      for (int64_t i = 0; i < rows; ++i)
        std::copy(pv + i * pc, pv + (i + 1) * pc,
                  out.begin() + i * cols + off);
    }
    off += p.dim(axis);
  }
  std::vector<int64_t> widths;
  for (const Tensor& p : parts) widths.push_back(p.dim(axis));
  return detail::MakeOp(
      {rows, cols}, std::move(out), parts,
      [axis, rows, cols, offsets, widths](
          const std::vector<double>& gout, const std::vector<double>&,
          const std::vector<std::vector<double>*>& gp) {
        for (size_t pi = 0; pi < gp.size(); ++pi) {
          if (!gp[pi]) continue;
          std::vector<double>& g = *gp[pi];
          const int64_t off = offsets[pi], w = widths[pi];
          if (axis == 0) {
            for (int64_t i = 0; i < w * cols; ++i) g[i] += gout[off * cols + i];
          } else {
            for (int64_t i = 0; i < rows; ++i)
              for (int64_t j = 0; j < w; ++j)
                g[i * w + j] += gout[i * cols + off + j];
          }
        }
      });
}

Tensor Slice(const Tensor& a, int axis, int64_t start, int64_t length) {
  CheckDefined(a, "slice");
  CheckArg(a.ndim() == 2, "slice: expected rank 2, got " +
                              ShapeToString(a.shape()));
  CheckArg(axis == 0 || axis == 1, "slice: axis must be 0 or 1");
  const int64_t m = a.dim(0), n = a.dim(1);
  const int64_t extent = axis == 0 ? m : n;
  CheckArg(start >= 0 && length >= 1 && start + length <= extent,
           "slice: range [" + std::to_string(start) + "," +
               std::to_string(start + length) + ") out of bounds for " +
               ShapeToString(a.shape()));
  const int64_t rows = axis == 0 ? length : m;
  const int64_t cols = axis == 0 ? n : length;
  std::vector<double> out(rows * cols);
  const double* av = a.values().data();
  if (axis == 0) {
    std::copy(av + start * n, av + (start + length) * n, out.begin());
  } else {
    for (int64_t i = 0; i < m; ++i)
      std::copy(av + i * n + start, av + i * n + start + length,
                out.begin() + i * length);
  }
  return detail::MakeOp(
      {rows, cols}, std::move(out), Parents1(a),
      [axis, m, n, start, length](const std::vector<double>& gout,
                                  const std::vector<double>&,
                                  const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& ga = *gp[0];
        if (axis == 0) {
          for (int64_t i = 0; i < length * n; ++i) ga[start * n + i] += gout[i];
        } else {
          for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < length; ++j)
              ga[i * n + start + j] += gout[i * length + j];
        }
      });
}

Tensor GatherRows(const Tensor& a, const std::vector<int64_t>& rows) {
  CheckDefined(a, "gather_rows");
  CheckArg(a.ndim() == 2, "gather_rows: expected rank 2, got " +
                              ShapeToString(a.shape()));
  CheckArg(!rows.empty(), "gather_rows: empty index list");
  const int64_t m = a.dim(0), n = a.dim(1);
  for (int64_t r : rows)
    CheckArg(r >= 0 && r < m, "gather_rows: index " + std::to_string(r) +
                                  " out of range for " +
                                  ShapeToString(a.shape()));
  std::vector<double> out(rows.size() * n);
  const double* av = a.values().data();
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(av + rows[i] * n, av + (rows[i] + 1) * n, out.begin() + i * n);
  return detail::MakeOp(
      {static_cast<int64_t>(rows.size()), n}, std::move(out), Parents1(a),
      [rows, n](const std::vector<double>& gout, const std::vector<double>&,
                const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& ga = *gp[0];
        for (size_t i = 0; i < rows.size(); ++i)
          for (int64_t j = 0; j < n; ++j)
            ga[rows[i] * n + j] += gout[i * n + j];
      });
}

Tensor ScatterRows(const Tensor& base, const std::vector<int64_t>& rows,
                   const Tensor& src) {
  CheckDefined(base, "scatter_rows");
  CheckDefined(src, "scatter_rows");
  CheckArg(base.ndim() == 2 && src.ndim() == 2 && base.dim(1) == src.dim(1),
           "scatter_rows: shape mismatch " + ShapeToString(base.shape()) +
               " vs " + ShapeToString(src.shape()));
  CheckArg(static_cast<int64_t>(rows.size()) == src.dim(0),
           "scatter_rows: " + std::to_string(rows.size()) +
               " indices for src " + ShapeToString(src.shape()));
  const int64_t m = base.dim(0), n = base.dim(1);
  std::unordered_set<int64_t> seen;
  for (int64_t r : rows) {
    CheckArg(r >= 0 && r < m, "scatter_rows: index " + std::to_string(r) +
                                  " out of range for " +
                                  ShapeToString(base.shape()));
    CheckArg(seen.insert(r).second,
             "scatter_rows: duplicate index " + std::to_string(r));
  }
  std::vector<double> out(base.values());
  const double* sv = src.values().data();
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(sv + i * n, sv + (i + 1) * n, out.begin() + rows[i] * n);
  return detail::MakeOp(
      base.shape(), std::move(out), Parents2(base, src),
      [rows, n](const std::vector<double>& gout, const std::vector<double>&,
                const std::vector<std::vector<double>*>& gp) {
        if (gp[0]) {
          std::vector<double>& gb = *gp[0];
          std::unordered_set<int64_t> replaced(rows.begin(), rows.end());
          const int64_t m = static_cast<int64_t>(gb.size()) / n;
          for (int64_t i = 0; i < m; ++i) {
            if (replaced.count(i)) continue;
            for (int64_t j = 0; j < n; ++j) gb[i * n + j] += gout[i * n + j];
          }
        }
        if (gp[1]) {
          std::vector<double>& gs = *gp[1];
          for (size_t i = 0; i < rows.size(); ++i)
            for (int64_t j = 0; j < n; ++j)
              gs[i * n + j] += gout[rows[i] * n + j];
        }
      });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 double eps) {
  CheckDefined(x, "layer_norm");
  auto [m, n] = AsMatrix(x);
  CheckArg(gain.ndim() == 1 && gain.dim(0) == n && bias.ndim() == 1 &&
               bias.dim(0) == n,
           "layer_norm: shape mismatch " + ShapeToString(x.shape()) + " vs " +
               ShapeToString(gain.shape()));
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_sigma(m);
  const double* xv = x.values().data();
  const double* gv = gain.values().data();
  const double* bv = bias.values().data();
  for (int64_t i = 0; i < m; ++i) {
    const double* row = xv + i * n;
    double mean = 0.0;
    for (int64_t j = 0; j < n; ++j) mean += row[j];
    mean /= n;
    double var = 0.0;
    for (int64_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma[i] = inv;
    for (int64_t j = 0; j < n; ++j) {
      const double h = (row[j] - mean) * inv;
      xhat[i * n + j] = h;
      out[i * n + j] = gv[j] * h + bv[j];
    }
  }
  return detail::MakeOp(
      x.shape(), std::move(out), {x, gain, bias},
      [m, n, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma),
       gval = gain.values()](const std::vector<double>& gout,
                             const std::vector<double>&,
                             const std::vector<std::vector<double>*>& gp) {
        for (int64_t i = 0; i < m; ++i) {
          const double* grow = gout.data() + i * n;
          const double* hrow = xhat.data() + i * n;
          if (gp[0]) {
            double mean_dy = 0.0, mean_dyh = 0.0;
            for (int64_t j = 0; j < n; ++j) {
              const double dy = grow[j] * gval[j];
              mean_dy += dy;
              mean_dyh += dy * hrow[j];
            }
            mean_dy /= n;
            mean_dyh /= n;
            std::vector<double>& gx = *gp[0];
            for (int64_t j = 0; j < n; ++j) {
              const double dy = grow[j] * gval[j];
              gx[i * n + j] +=
                  (dy - mean_dy - hrow[j] * mean_dyh) * inv_sigma[i];
            }
          }
          if (gp[1]) {
            std::vector<double>& gg = *gp[1];
            for (int64_t j = 0; j < n; ++j) gg[j] += grow[j] * hrow[j];
          }
          if (gp[2]) {
            std::vector<double>& gb = *gp[2];
            for (int64_t j = 0; j < n; ++j) gb[j] += grow[j];
          }
        }
      });
}

Tensor Softmax(const Tensor& x) {
  CheckDefined(x, "softmax");
  auto [m, n] = AsMatrix(x);
  std::vector<double> out(x.numel());
  const double* xv = x.values().data();
  for (int64_t i = 0; i < m; ++i) {
    const double* row = xv + i * n;
    double mx = row[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      const double e = std::exp(row[j] - mx);
      out[i * n + j] = e;
      z += e;
    }
    for (int64_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  return detail::MakeOp(
      x.shape(), std::move(out), Parents1(x),
      [m, n](const std::vector<double>& gout, const std::vector<double>& y,
             const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& gx = *gp[0];
        for (int64_t i = 0; i < m; ++i) {
          const double* yrow = y.data() + i * n;
          const double* grow = gout.data() + i * n;
          double dot = 0.0;
          for (int64_t j = 0; j < n; ++j) dot += grow[j] * yrow[j];
          for (int64_t j = 0; j < n; ++j)
            gx[i * n + j] += yrow[j] * (grow[j] - dot);
        }
      });
}

Tensor LogSoftmax(const Tensor& x) {
  CheckDefined(x, "log_softmax");
  auto [m, n] = AsMatrix(x);
  std::vector<double> out(x.numel());
  const double* xv = x.values().data();
  for (int64_t i = 0; i < m; ++i) {
    const double* row = xv + i * n;
    double mx = row[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (int64_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
  }
  return detail::MakeOp(
      x.shape(), std::move(out), Parents1(x),
      [m, n](const std::vector<double>& gout, const std::vector<double>& y,
             const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& gx = *gp[0];
        for (int64_t i = 0; i < m; ++i) {
          const double* yrow = y.data() + i * n;
          const double* grow = gout.data() + i * n;
          double gsum = 0.0;
          for (int64_t j = 0; j < n; ++j) gsum += grow[j];
          for (int64_t j = 0; j < n; ++j)
            gx[i * n + j] += grow[j] - std::exp(yrow[j]) * gsum;
        }
      });
}

Tensor Sigmoid(const Tensor& x) {
  CheckDefined(x, "sigmoid");
  std::vector<double> out(x.numel());
  const double* xv = x.values().data();
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double v = xv[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
  }
  return detail::MakeOp(
      x.shape(), std::move(out), Parents1(x),
      [](const std::vector<double>& gout, const std::vector<double>& y,
         const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& gx = *gp[0];
        for (size_t i = 0; i < gout.size(); ++i)
          gx[i] += gout[i] * y[i] * (1.0 - y[i]);
      });
}

Tensor Tanh(const Tensor& x) {
  CheckDefined(x, "tanh");
  std::vector<double> out(x.numel());
  const double* xv = x.values().data();
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::tanh(xv[i]);
  return detail::MakeOp(
      x.shape(), std::move(out), Parents1(x),
      [](const std::vector<double>& gout, const std::vector<double>& y,
         const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& gx = *gp[0];
        for (size_t i = 0; i < gout.size(); ++i)
          gx[i] += gout[i] * (1.0 - y[i] * y[i]);
      });
}

Tensor Gelu(const Tensor& x) {
  CheckDefined(x, "gelu");
  std::vector<double> out(x.numel());
  const double* xv = x.values().data();
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double v = xv[i];
    out[i] = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  }
  auto xval = x.values();
  return detail::MakeOp(
      x.shape(), std::move(out), Parents1(x),
      [xval = std::move(xval)](const std::vector<double>& gout,
                               const std::vector<double>&,
                               const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& gx = *gp[0];
        constexpr double kInvSqrt2Pi = 0.3989422804014327;
        for (size_t i = 0; i < gout.size(); ++i) {
          const double v = xval[i];
          const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
          const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
          gx[i] += gout[i] * (cdf + v * pdf);
        }
      });
}

Tensor Softplus(const Tensor& x) {
  CheckDefined(x, "softplus");
  std::vector<double> out(x.numel());
  const double* xv = x.values().data();
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double v = xv[i];
    out[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
  }
  auto xval = x.values();
  return detail::MakeOp(
      x.shape(), std::move(out), Parents1(x),
      [xval = std::move(xval)](const std::vector<double>& gout,
                               const std::vector<double>&,
                               const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& gx = *gp[0];
        for (size_t i = 0; i < gout.size(); ++i) {
          const double v = xval[i];
          const double sig = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                      : std::exp(v) / (1.0 + std::exp(v));
          gx[i] += gout[i] * sig;
        }
      });
}

Tensor DepthwiseConv1d(const Tensor& x, const Tensor& weight,
                       const Tensor& bias) {
  CheckDefined(x, "depthwise_conv1d");
  CheckArg(x.ndim() == 2 && weight.ndim() == 2 && bias.ndim() == 1,
           "depthwise_conv1d: expected x [T,C], weight [C,K], bias [C]");
  const int64_t t_len = x.dim(0), ch = x.dim(1), k = weight.dim(1);
  CheckArg(weight.dim(0) == ch && bias.dim(0) == ch,
           "depthwise_conv1d: shape mismatch " + ShapeToString(x.shape()) +
               " vs " + ShapeToString(weight.shape()));
  CheckArg(k % 2 == 1, "depthwise_conv1d: kernel size must be odd");
  const int64_t pad = (k - 1) / 2;
  std::vector<double> out(x.numel());
  const double* xv = x.values().data();
  const double* wv = weight.values().data();
  const double* bv = bias.values().data();
  for (int64_t t = 0; t < t_len; ++t) {
    for (int64_t c = 0; c < ch; ++c) {
      double acc = bv[c];
      for (int64_t j = 0; j < k; ++j) {
        const int64_t s = t + j - pad;
        if (s < 0 || s >= t_len) continue;
        acc += wv[c * k + j] * xv[s * ch + c];
      }
      out[t * ch + c] = acc;
    }
  }
  auto xval = x.values();
  auto wval = weight.values();
  return detail::MakeOp(
      x.shape(), std::move(out), {x, weight, bias},
      [t_len, ch, k, pad, xval = std::move(xval), wval = std::move(wval)](
          const std::vector<double>& gout, const std::vector<double>&,
          const std::vector<std::vector<double>*>& gp) {
        for (int64_t t = 0; t < t_len; ++t) {
          for (int64_t c = 0; c < ch; ++c) {
            const double g = gout[t * ch + c];
            if (gp[2]) (*gp[2])[c] += g;
            for (int64_t j = 0; j < k; ++j) {
              const int64_t s = t + j - pad;
              if (s < 0 || s >= t_len) continue;
              if (gp[0]) (*gp[0])[s * ch + c] += wval[c * k + j] * g;
              if (gp[1]) (*gp[1])[c * k + j] += xval[s * ch + c] * g;
            }
          }
        }
      });
}

Tensor Sum(const Tensor& x) {
  CheckDefined(x, "sum");
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return detail::MakeOp(
      {1}, {acc}, Parents1(x),
      [](const std::vector<double>& gout, const std::vector<double>&,
         const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        for (double& g : *gp[0]) g += gout[0];
      });
}

Tensor Mean(const Tensor& x) {
  CheckDefined(x, "mean");
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double inv = 1.0 / static_cast<double>(x.numel());
  return detail::MakeOp(
      {1}, {acc * inv}, Parents1(x),
      [inv](const std::vector<double>& gout, const std::vector<double>&,
            const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        for (double& g : *gp[0]) g += gout[0] * inv;
      });
}

Tensor Detach(const Tensor& x) {
  CheckDefined(x, "detach");
  return Tensor::FromData(x.shape(), x.values());
}

double LogSumExp(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("logsumexp: empty input");
  double mx = kNegInf;
  for (double v : values) mx = std::max(mx, v);
  if (mx == kNegInf) return kNegInf;
  double z = 0.0;
  for (double v : values) z += std::exp(v - mx);
  return mx + std::log(z);
}

double GradCheck(const std::function<Tensor(const Tensor&)>& fn,
                 const Tensor& point, double eps) {
  CheckArg(eps > 0.0 && eps <= 1e-2, "grad_check: eps must be in (0, 1e-2]");
  Tensor x = Tensor::FromData(point.shape(), point.values());
  x.set_requires_grad(true);
  Tensor y = fn(x);
  if (!y.is_scalar()) {
    throw std::runtime_error("grad_check: function must return a scalar, got " +
                             ShapeToString(y.shape()));
  }
  if (!std::isfinite(y.item())) {
    throw std::runtime_error("grad_check: non-finite function value");
  }
  y.Backward();
  std::vector<double> analytic = x.grad();

  Tensor probe = Tensor::FromData(point.shape(), point.values());
  double max_err = 0.0;
  NoGradGuard no_grad;
  for (int64_t i = 0; i < probe.numel(); ++i) {
    const double orig = probe.values()[i];
    probe.mutable_values()[i] = orig + eps;
    const double up = fn(probe).item();
    probe.mutable_values()[i] = orig - eps;
    const double down = fn(probe).item();
    probe.mutable_values()[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error("grad_check: non-finite value at coordinate " +
                               std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double denom =
        std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric)});
    max_err = std::max(max_err, std::fabs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

}  // namespace blankskip
