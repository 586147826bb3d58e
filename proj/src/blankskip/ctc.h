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

#ifndef BLANKSKIP_CTC_H_
#define BLANKSKIP_CTC_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blankskip/tensor.h"

namespace blankskip {

class Rng;

// Blank always sits at index 0 of every output distribution.
constexpr int kBlankId = 0;

// Label ids in [1, vocab_size]; never the blank.
using LabelSeq = std::vector<int>;

// Per-frame log distributions over {blank} + vocabulary, row-major
// frames x (vocab_size + 1). Column 0 is the blank.
struct PosteriorGrid {
  int64_t vocab_size = 0;
  std::vector<double> log_probs;

  int64_t frames() const {
    return vocab_size == 0 ? 0
                           : static_cast<int64_t>(log_probs.size()) /
                                 (vocab_size + 1);
  }
  double LogProb(int64_t t, int64_t k) const {
    return log_probs[t * (vocab_size + 1) + k];
  }
  static PosteriorGrid FromTensor(const Tensor& log_probs);
  Tensor ToTensor() const;
  // each row must exponentiate to a distribution summing to 1 +- tol
  bool IsNormalized(double tol = 1e-9) const;
};

// Merge adjacent duplicates, then drop blanks.
LabelSeq Collapse(const std::vector<int>& alignment);

// Negative log-likelihood of `labels` under the standard CTC alignment
// lattice, computed in log space over a [T', V+1] log-prob tensor. Gradient
// w.r.t. the log-probs comes from dedicated forward/backward recursions.
// Throws if no alignment of length T' can produce the labels.
Tensor CtcLoss(const Tensor& log_probs, const LabelSeq& labels);
double CtcLossValue(const PosteriorGrid& grid, const LabelSeq& labels);

// Mean over frames of KL(p_in || p_final). p_final is a constant target:
// no gradient ever flows into it. Optional nonnegative frame weights replace
// the uniform mean by a normalized weighted mean.
Tensor KlFrameLoss(const Tensor& logp_in, const Tensor& logp_final,
                   const std::optional<std::vector<double>>& frame_weights =
                       std::nullopt);
double KlFrameLossValue(const PosteriorGrid& p_in, const PosteriorGrid& p_final);

// Output head producing per-frame log distributions from encoder states.
// Standard form: log_softmax(h W + b). Factorized form: a scalar blank gate
// sigmoid(h v + bv) and a non-blank softmax scaled by (1 - gate), assembled
// in the log domain so each row exponentiates to exactly 1 up to rounding.
struct CtcHead {
  bool factorized = false;
  // standard
  Tensor w;  // [D, V+1]
  Tensor b;  // [V+1]
  // factorized
  Tensor v;     // [D]
  Tensor bv;    // [1]
  Tensor w_nb;  // [D, V]
  Tensor b_nb;  // [V]

  static CtcHead Standard(int64_t model_dim, int64_t vocab_size, Rng* rng);
  static CtcHead Factorized(int64_t model_dim, int64_t vocab_size, Rng* rng);

  // h: [T', D] -> log probs [T', V+1]
  Tensor Apply(const Tensor& h) const;
  void CollectParams(const std::string& prefix,
                     std::vector<std::pair<std::string, Tensor>>* out) const;
};

// Single-frame factorized application; returns the V+1 log-prob row.
Tensor FactorizedLogRow(const CtcHead& head, const Tensor& h_frame);

// exp of column 0 per frame.
std::vector<double> BlankPosteriors(const PosteriorGrid& grid);

// collapse(argmax per frame); ties resolve to the lowest id.
LabelSeq GreedyDecode(const PosteriorGrid& grid);

}  // namespace blankskip

#endif  // BLANKSKIP_CTC_H_
