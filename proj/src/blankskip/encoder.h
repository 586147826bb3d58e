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

#ifndef BLANKSKIP_ENCODER_H_
#define BLANKSKIP_ENCODER_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "blankskip/ctc.h"
#include "blankskip/tensor.h"

namespace blankskip {

class Rng;

struct ModelConfig {
  int64_t input_dim = 16;
  int64_t subsample_stride = 2;
  int64_t model_dim = 32;
  int64_t num_layers = 6;
  int64_t split_layer = 4;  // layers 1..split run always, the rest are gated
  int64_t num_heads = 2;
  int64_t ffn_dim = 64;
  int64_t vocab_size = 8;
  bool use_conv_block = true;
  bool factorized_heads = false;
  double tau_skip = 0.99;
  int64_t window_len = 3;

  void Validate() const;
};

// true = frame bypasses the upper encoder layers
using SkipMask = std::vector<bool>;

// Frame t is skipped iff every blank probability in the trailing window
// {t-window+1, ..., t} strictly exceeds tau. Positions before frame 0 count
// as blank-certain.
SkipMask ComputeSkipMask(const std::vector<double>& blank_probs, double tau,
                         int64_t window);

struct EncodeResult {
  Tensor h_in;   // [T', D] after the lower stack
  Tensor h;      // [T', D] after the full stack (skipped rows carry h_in)
  Tensor logp_in;  // [T', V+1]
  Tensor logp;     // [T', V+1]
  PosteriorGrid p_in;
  PosteriorGrid p;
  SkipMask skip_mask;
  int64_t upper_frames_computed = 0;
};

// Attention + optional depthwise-conv + feed-forward sub-blocks, all
// pre-norm with residuals.
struct ConformerBlock {
  int64_t num_heads = 1;
  bool use_conv = false;
  Tensor ln1_g, ln1_b;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor lnc_g, lnc_b, conv_w, conv_b, conv_pw_w, conv_pw_b;
  Tensor ln2_g, ln2_b;
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;

  static ConformerBlock Create(int64_t model_dim, int64_t num_heads,
                               int64_t ffn_dim, bool use_conv, Rng* rng);
  Tensor Forward(const Tensor& x) const;
  void CollectParams(const std::string& prefix,
                     std::vector<std::pair<std::string, Tensor>>* out) const;
};

// Stack input frames in groups of `stride`; the trailing remainder is
// dropped. Differentiable when applied to a tensor.
std::vector<std::vector<double>> Subsample(
    const std::vector<std::vector<double>>& features, int64_t stride);

// Absolute sinusoidal position table, [frames, dim].
Tensor SinusoidalPositions(int64_t frames, int64_t dim);

// Conformer-style encoder split at `split_layer` with an intermediate CTC
// head whose blank posterior gates execution of the remaining layers.
// A constructed model is immutable during encode calls and safe to share
// read-only across threads.
class Model {
 public:
  explicit Model(ModelConfig config);

  void InitParams(Rng* rng);
  bool initialized() const { return initialized_; }

  // Runs every layer on every frame (training path / no-skip baseline).
  EncodeResult EncodeFull(const Tensor& features) const;
  EncodeResult EncodeFull(const std::vector<std::vector<double>>& features) const;

  // Lower layers on all frames, upper layers only on frames the blank gate
  // keeps; kept frames attend to each other in a compacted subsequence.
  // Skipped frames carry h_in forward and reuse the intermediate posterior.
  EncodeResult EncodeSkip(const Tensor& features, double tau) const;
  EncodeResult EncodeSkip(const std::vector<std::vector<double>>& features,
                          double tau) const;
  EncodeResult EncodeSkip(const std::vector<std::vector<double>>& features) const;

  // Same as EncodeSkip but with a caller-supplied mask.
  EncodeResult EncodeWithMask(const Tensor& features,
                              const SkipMask& mask) const;

  const ModelConfig& config() const { return config_; }
  const CtcHead& intermediate_head() const { return head_in_; }
  const CtcHead& final_head() const { return head_final_; }
  const std::vector<ConformerBlock>& blocks() const { return blocks_; }

  // Canonical name -> parameter, in a fixed order.
  std::vector<std::pair<std::string, Tensor>> NamedParams() const;

 private:
  Tensor Stem(const Tensor& features) const;

  ModelConfig config_;
  bool initialized_ = false;
  Tensor input_w_, input_b_;
  std::vector<ConformerBlock> blocks_;
  CtcHead head_in_, head_final_;
};

}  // namespace blankskip

#endif  // BLANKSKIP_ENCODER_H_
