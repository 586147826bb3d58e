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

#include "blankskip/ctc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "blankskip/rng.h"

namespace blankskip {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::fabs(a - b)));
}

int64_t RequiredFrames(const LabelSeq& labels) {
  int64_t need = static_cast<int64_t>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++need;
  return need;
}

void CheckLabels(const LabelSeq& labels, int64_t vocab_size) {
  for (int id : labels) {
    if (id < 1 || id > vocab_size) {
      throw std::invalid_argument("ctc: label id " + std::to_string(id) +
                                  " outside [1," + std::to_string(vocab_size) +
                                  "]");
    }
  }
}

}  // namespace

PosteriorGrid PosteriorGrid::FromTensor(const Tensor& log_probs) {
  if (log_probs.ndim() != 2 || log_probs.dim(1) < 2) {
    throw std::invalid_argument("posterior grid: expected [T',V+1], got " +
                                ShapeToString(log_probs.shape()));
  }
  PosteriorGrid grid;
  grid.vocab_size = log_probs.dim(1) - 1;
  grid.log_probs = log_probs.values();
  return grid;
}

Tensor PosteriorGrid::ToTensor() const {
  return Tensor::FromData({frames(), vocab_size + 1}, log_probs);
}

bool PosteriorGrid::IsNormalized(double tol) const {
  const int64_t width = vocab_size + 1;
  for (int64_t t = 0; t < frames(); ++t) {
    double sum = 0.0;
    for (int64_t k = 0; k < width; ++k) sum += std::exp(LogProb(t, k));
    if (std::fabs(sum - 1.0) > tol) return false;
  }
  return true;
}

LabelSeq Collapse(const std::vector<int>& alignment) {
  LabelSeq out;
  int prev = -1;
  for (int id : alignment) {
    if (id != prev && id != kBlankId) out.push_back(id);
    prev = id;
  }
  return out;
}

// CTC forward/backward over the blank-interleaved state lattice.
// States s in [0, 2U]: even states are blanks, odd state s carries label
// y[(s-1)/2]. alpha include the emission at their frame; beta likewise, so
// log p(y|x) = logsumexp_s(alpha[t][s] + beta[t][s] - lp(t, lab(s))) at any t.
Tensor CtcLoss(const Tensor& log_probs, const LabelSeq& labels) {
  if (log_probs.ndim() != 2 || log_probs.dim(1) < 2) {
    throw std::invalid_argument("ctc: expected log probs [T',V+1], got " +
                                ShapeToString(log_probs.shape()));
  }
  const int64_t frames = log_probs.dim(0);
  const int64_t width = log_probs.dim(1);
  CheckLabels(labels, width - 1);
  const int64_t need = RequiredFrames(labels);
  if (frames < need) {
    throw std::runtime_error(
        "ctc: no valid alignment (T'=" + std::to_string(frames) +
        " < required " + std::to_string(need) + ")");
  }

  const int64_t u_len = static_cast<int64_t>(labels.size());
  const int64_t states = 2 * u_len + 1;
  auto state_label = [&](int64_t s) -> int64_t {
    return (s % 2 == 0) ? kBlankId : labels[(s - 1) / 2];
  };

  const std::vector<double>& lp = log_probs.values();
  auto lp_at = [&](int64_t t, int64_t k) { return lp[t * width + k]; };

  std::vector<double> alpha(frames * states, kNegInf);
  alpha[0 * states + 0] = lp_at(0, kBlankId);
  if (states > 1) alpha[0 * states + 1] = lp_at(0, state_label(1));
  for (int64_t t = 1; t < frames; ++t) {
    for (int64_t s = 0; s < states; ++s) {
      double acc = alpha[(t - 1) * states + s];
      if (s >= 1) acc = LogAdd(acc, alpha[(t - 1) * states + s - 1]);
      if (s >= 2 && state_label(s) != kBlankId &&
          state_label(s) != state_label(s - 2)) {
        acc = LogAdd(acc, alpha[(t - 1) * states + s - 2]);
      }
      alpha[t * states + s] =
          acc == kNegInf ? kNegInf : acc + lp_at(t, state_label(s));
    }
  }
  double log_like = alpha[(frames - 1) * states + states - 1];
  if (states > 1) {
    log_like = LogAdd(log_like, alpha[(frames - 1) * states + states - 2]);
  }

  auto labels_copy = labels;
  auto lp_copy = lp;
  return detail::MakeOp(
      {1}, {-log_like}, {log_probs},
      [frames, width, states, log_like, alpha = std::move(alpha),
       lp = std::move(lp_copy), labels = std::move(labels_copy)](
          const std::vector<double>& gout, const std::vector<double>&,
          const std::vector<std::vector<double>*>& gp) {
        if (!gp[0] || log_like == kNegInf) return;
        auto state_label = [&](int64_t s) -> int64_t {
          return (s % 2 == 0) ? kBlankId : labels[(s - 1) / 2];
        };
        auto lp_at = [&](int64_t t, int64_t k) { return lp[t * width + k]; };
        // backward recursion, emission at t included
        std::vector<double> beta(frames * states, kNegInf);
        beta[(frames - 1) * states + states - 1] =
            lp_at(frames - 1, state_label(states - 1));
        if (states > 1) {
          beta[(frames - 1) * states + states - 2] =
              lp_at(frames - 1, state_label(states - 2));
        }
        for (int64_t t = frames - 2; t >= 0; --t) {
          for (int64_t s = 0; s < states; ++s) {
            double acc = beta[(t + 1) * states + s];
            if (s + 1 < states) acc = LogAdd(acc, beta[(t + 1) * states + s + 1]);
            if (s + 2 < states && state_label(s + 2) != kBlankId &&
                state_label(s + 2) != state_label(s)) {
              acc = LogAdd(acc, beta[(t + 1) * states + s + 2]);
            }
            beta[t * states + s] =
                acc == kNegInf ? kNegInf : acc + lp_at(t, state_label(s));
          }
        }
        // d(-log p)/d lp(t,k) = -sum of posterior path mass through label k
        std::vector<double>& ga = *gp[0];
        std::vector<double> occ(width);
        for (int64_t t = 0; t < frames; ++t) {
          std::fill(occ.begin(), occ.end(), kNegInf);
          for (int64_t s = 0; s < states; ++s) {
            const int64_t k = state_label(s);
            const double joint = alpha[t * states + s] + beta[t * states + s] -
                                 lp_at(t, k);
            occ[k] = LogAdd(occ[k], joint);
          }
          for (int64_t k = 0; k < width; ++k) {
            if (occ[k] == kNegInf) continue;
            ga[t * width + k] -= gout[0] * std::exp(occ[k] - log_like);
          }
        }
      });
}

double CtcLossValue(const PosteriorGrid& grid, const LabelSeq& labels) {
  NoGradGuard no_grad;
  return CtcLoss(grid.ToTensor(), labels).item();
}

Tensor KlFrameLoss(const Tensor& logp_in, const Tensor& logp_final,
                   const std::optional<std::vector<double>>& frame_weights) {
  if (logp_in.shape() != logp_final.shape()) {
    throw std::invalid_argument("kl_frame_loss: shape mismatch " +
                                ShapeToString(logp_in.shape()) + " vs " +
                                ShapeToString(logp_final.shape()));
  }
  if (logp_in.ndim() != 2) {
    throw std::invalid_argument("kl_frame_loss: expected [T',V+1], got " +
                                ShapeToString(logp_in.shape()));
  }
  const int64_t frames = logp_in.dim(0);
  const int64_t width = logp_in.dim(1);
  std::vector<double> weights;
  if (frame_weights) {
    if (static_cast<int64_t>(frame_weights->size()) != frames) {
      throw std::invalid_argument(
          "kl_frame_loss: weight count " +
          std::to_string(frame_weights->size()) + " does not match T'=" +
          std::to_string(frames));
    }
    double total = 0.0;
    for (double w : *frame_weights) {
      if (w < 0.0) throw std::invalid_argument("kl_frame_loss: negative weight");
      total += w;
    }
    if (total <= 0.0) {
      throw std::invalid_argument("kl_frame_loss: weights sum to zero");
    }
    weights = *frame_weights;
    for (double& w : weights) w /= total;
  } else {
    weights.assign(frames, 1.0 / static_cast<double>(frames));
  }

  const std::vector<double>& a = logp_in.values();
  const std::vector<double> b = logp_final.values();  // constant target
  double loss = 0.0;
  for (int64_t t = 0; t < frames; ++t) {
    double frame_kl = 0.0;
    for (int64_t k = 0; k < width; ++k) {
      const int64_t i = t * width + k;
      frame_kl += std::exp(a[i]) * (a[i] - b[i]);
    }
    loss += weights[t] * frame_kl;
  }
  auto aval = a;
  return detail::MakeOp(
      {1}, {loss}, {logp_in},
      [frames, width, weights = std::move(weights), aval = std::move(aval),
       bval = std::move(b)](const std::vector<double>& gout,
                            const std::vector<double>&,
                            const std::vector<std::vector<double>*>& gp) {
        if (!gp[0]) return;
        std::vector<double>& ga = *gp[0];
        for (int64_t t = 0; t < frames; ++t) {
          for (int64_t k = 0; k < width; ++k) {
            const int64_t i = t * width + k;
            ga[i] += gout[0] * weights[t] * std::exp(aval[i]) *
                     (aval[i] - bval[i] + 1.0);
          }
        }
      });
}

double KlFrameLossValue(const PosteriorGrid& p_in,
                        const PosteriorGrid& p_final) {
  NoGradGuard no_grad;
  return KlFrameLoss(p_in.ToTensor(), p_final.ToTensor()).item();
}

CtcHead CtcHead::Standard(int64_t model_dim, int64_t vocab_size, Rng* rng) {
  CtcHead head;
  head.factorized = false;
  const double scale = 1.0 / std::sqrt(static_cast<double>(model_dim));
  head.w = Tensor::Randn({model_dim, vocab_size + 1}, rng, scale);
  head.b = Tensor::Zeros({vocab_size + 1});
  head.w.set_requires_grad(true);
  head.b.set_requires_grad(true);
  return head;
}

CtcHead CtcHead::Factorized(int64_t model_dim, int64_t vocab_size, Rng* rng) {
  CtcHead head;
  head.factorized = true;
  const double scale = 1.0 / std::sqrt(static_cast<double>(model_dim));
  head.v = Tensor::Randn({model_dim}, rng, scale);
  head.bv = Tensor::Zeros({1});
  head.w_nb = Tensor::Randn({model_dim, vocab_size}, rng, scale);
  head.b_nb = Tensor::Zeros({vocab_size});
  head.v.set_requires_grad(true);
  head.bv.set_requires_grad(true);
  head.w_nb.set_requires_grad(true);
  head.b_nb.set_requires_grad(true);
  return head;
}

Tensor CtcHead::Apply(const Tensor& h) const {
  if (!factorized) {
    return LogSoftmax(Add(MatMul(h, w), b));
  }
  const int64_t model_dim = h.dim(1);
  // blank gate logit per frame
  Tensor z = Add(MatMul(h, Reshape(v, {model_dim, 1})),
                 Reshape(bv, {1}));                       // [T',1]
  Tensor log_blank = Scale(Softplus(Scale(z, -1.0)), -1.0);   // log sigmoid(z)
  Tensor log_keep = Scale(Softplus(z), -1.0);                 // log(1-sigmoid)
  Tensor nb = LogSoftmax(Add(MatMul(h, w_nb), b_nb));         // [T',V]
  Tensor log_nonblank = Add(nb, log_keep);                    // column bcast
  return Concat({log_blank, log_nonblank}, 1);
}

void CtcHead::CollectParams(
    const std::string& prefix,
    std::vector<std::pair<std::string, Tensor>>* out) const {
  if (!factorized) {
    out->emplace_back(prefix + ".w", w);
    out->emplace_back(prefix + ".b", b);
  } else {
    out->emplace_back(prefix + ".v", v);
    out->emplace_back(prefix + ".bv", bv);
    out->emplace_back(prefix + ".w_nb", w_nb);
    out->emplace_back(prefix + ".b_nb", b_nb);
  }
}

Tensor FactorizedLogRow(const CtcHead& head, const Tensor& h_frame) {
  if (!head.factorized) {
    throw std::invalid_argument("factorized_apply: head is not factorized");
  }
  Tensor h = h_frame.ndim() == 1 ? Reshape(h_frame, {1, h_frame.dim(0)})
                                 : h_frame;
  Tensor grid = head.Apply(h);
  return Reshape(grid, {grid.dim(1)});
}

std::vector<double> BlankPosteriors(const PosteriorGrid& grid) {
  std::vector<double> out(grid.frames());
  for (int64_t t = 0; t < grid.frames(); ++t)
    out[t] = std::exp(grid.LogProb(t, kBlankId));
  return out;
}

LabelSeq GreedyDecode(const PosteriorGrid& grid) {
  std::vector<int> argmax(grid.frames());
  const int64_t width = grid.vocab_size + 1;
  for (int64_t t = 0; t < grid.frames(); ++t) {
    int best = 0;
    double best_lp = grid.LogProb(t, 0);
    for (int64_t k = 1; k < width; ++k) {
      if (grid.LogProb(t, k) > best_lp) {
        best_lp = grid.LogProb(t, k);
        best = static_cast<int>(k);
      }
    }
    argmax[t] = best;
  }
  return Collapse(argmax);
}

}  // namespace blankskip
