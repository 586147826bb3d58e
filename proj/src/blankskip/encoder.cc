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

#include "blankskip/encoder.h"

#include <cmath>
#include <stdexcept>

#include "blankskip/rng.h"

namespace blankskip {

void ModelConfig::Validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("model config: " + msg);
  };
  if (input_dim < 1 || model_dim < 1 || ffn_dim < 1 || vocab_size < 1)
    fail("dimensions must be positive");
  if (subsample_stride < 1) fail("subsample_stride must be >= 1");
  if (!(split_layer >= 1 && split_layer < num_layers))
    fail("split_layer must satisfy 1 <= K < L, got K=" +
         std::to_string(split_layer) + " L=" + std::to_string(num_layers));
  if (num_heads < 1 || model_dim % num_heads != 0)
    fail("model_dim must be divisible by num_heads");
  if (!(tau_skip > 0.0 && tau_skip <= 1.0)) fail("tau_skip must be in (0,1]");
  if (window_len < 1) fail("window_len must be >= 1");
}

SkipMask ComputeSkipMask(const std::vector<double>& blank_probs, double tau,
                         int64_t window) {
  if (window < 1) throw std::invalid_argument("skip mask: window must be >= 1");
  for (double p : blank_probs) {
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("skip mask: blank probability outside [0,1]");
  }
  const int64_t frames = static_cast<int64_t>(blank_probs.size());
  SkipMask mask(frames, false);
  for (int64_t t = 0; t < frames; ++t) {
    bool all_blank = true;
    for (int64_t u = t - window + 1; u <= t; ++u) {
      // positions before the utterance start count as blank-certain
      const double p = u < 0 ? 1.0 : blank_probs[u];
      if (!(p > tau)) {
        all_blank = false;
        break;
      }
    }
    mask[t] = all_blank;
  }
  return mask;
}

std::vector<std::vector<double>> Subsample(
    const std::vector<std::vector<double>>& features, int64_t stride) {
  const int64_t frames = static_cast<int64_t>(features.size());
  if (stride < 1) throw std::invalid_argument("subsample: stride must be >= 1");
  if (frames < stride) {
    throw std::invalid_argument("subsample: " + std::to_string(frames) +
                                " frames < stride " + std::to_string(stride));
  }
  const int64_t out_frames = frames / stride;
  std::vector<std::vector<double>> out(out_frames);
  for (int64_t i = 0; i < out_frames; ++i) {
    auto& row = out[i];
    for (int64_t j = 0; j < stride; ++j) {
      const auto& src = features[i * stride + j];
      row.insert(row.end(), src.begin(), src.end());
    }
  }
  return out;
}

Tensor SinusoidalPositions(int64_t frames, int64_t dim) {
  std::vector<double> table(frames * dim);
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t i = 0; i < dim / 2; ++i) {
      const double rate =
          std::pow(10000.0, -2.0 * static_cast<double>(i) /
                                static_cast<double>(dim));
      table[t * dim + 2 * i] = std::sin(t * rate);
      table[t * dim + 2 * i + 1] = std::cos(t * rate);
    }
    if (dim % 2 == 1) table[t * dim + dim - 1] = 0.0;
  }
  return Tensor::FromData({frames, dim}, std::move(table));
}

ConformerBlock ConformerBlock::Create(int64_t model_dim, int64_t num_heads,
                                      int64_t ffn_dim, bool use_conv,
                                      Rng* rng) {
  ConformerBlock blk;
  blk.num_heads = num_heads;
  blk.use_conv = use_conv;
  const double scale = 1.0 / std::sqrt(static_cast<double>(model_dim));
  auto param = [&](std::vector<int64_t> shape, double s) {
    Tensor t = Tensor::Randn(shape, rng, s);
    t.set_requires_grad(true);
    return t;
  };
  auto zeros = [&](std::vector<int64_t> shape) {
    Tensor t = Tensor::Zeros(shape);
    t.set_requires_grad(true);
    return t;
  };
  auto ones = [&](std::vector<int64_t> shape) {
    Tensor t = Tensor::Constant(shape, 1.0);
    t.set_requires_grad(true);
    return t;
  };
  blk.ln1_g = ones({model_dim});
  blk.ln1_b = zeros({model_dim});
  blk.wq = param({model_dim, model_dim}, scale);
  blk.bq = zeros({model_dim});
  blk.wk = param({model_dim, model_dim}, scale);
  blk.bk = zeros({model_dim});
  blk.wv = param({model_dim, model_dim}, scale);
  blk.bv = zeros({model_dim});
  blk.wo = param({model_dim, model_dim}, scale);
  blk.bo = zeros({model_dim});
  if (use_conv) {
    blk.lnc_g = ones({model_dim});
    blk.lnc_b = zeros({model_dim});
    blk.conv_w = param({model_dim, 3}, 0.5);
    blk.conv_b = zeros({model_dim});
    blk.conv_pw_w = param({model_dim, model_dim}, scale);
    blk.conv_pw_b = zeros({model_dim});
  }
  blk.ln2_g = ones({model_dim});
  blk.ln2_b = zeros({model_dim});
  blk.ffn_w1 = param({model_dim, ffn_dim}, scale);
  blk.ffn_b1 = zeros({ffn_dim});
  blk.ffn_w2 = param({ffn_dim, model_dim},
                     1.0 / std::sqrt(static_cast<double>(ffn_dim)));
  blk.ffn_b2 = zeros({model_dim});
  return blk;
}

Tensor ConformerBlock::Forward(const Tensor& x) const {
  const int64_t model_dim = x.dim(1);
  const int64_t head_dim = model_dim / num_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  // self-attention sub-block
  Tensor xn = LayerNorm(x, ln1_g, ln1_b);
  Tensor q = Add(MatMul(xn, wq), bq);
  Tensor k = Add(MatMul(xn, wk), bk);
  Tensor v = Add(MatMul(xn, wv), bv);
  std::vector<Tensor> heads;
  heads.reserve(num_heads);
  for (int64_t h = 0; h < num_heads; ++h) {
    Tensor qh = Slice(q, 1, h * head_dim, head_dim);
    Tensor kh = Slice(k, 1, h * head_dim, head_dim);
    Tensor vh = Slice(v, 1, h * head_dim, head_dim);
    Tensor scores = Scale(MatMul(qh, Transpose(kh)), inv_sqrt);
    heads.push_back(MatMul(Softmax(scores), vh));
  }
  Tensor attn = num_heads == 1 ? heads[0] : Concat(heads, 1);
  Tensor y = Add(x, Add(MatMul(attn, wo), bo));

  // depthwise-conv sub-block
  if (use_conv) {
    Tensor cn = LayerNorm(y, lnc_g, lnc_b);
    Tensor c = Gelu(DepthwiseConv1d(cn, conv_w, conv_b));
    y = Add(y, Add(MatMul(c, conv_pw_w), conv_pw_b));
  }

  // feed-forward sub-block
  Tensor fn = LayerNorm(y, ln2_g, ln2_b);
  Tensor f = Add(MatMul(Gelu(Add(MatMul(fn, ffn_w1), ffn_b1)), ffn_w2), ffn_b2);
  return Add(y, f);
}

void ConformerBlock::CollectParams(
    const std::string& prefix,
    std::vector<std::pair<std::string, Tensor>>* out) const {
  out->emplace_back(prefix + ".ln1.g", ln1_g);
  out->emplace_back(prefix + ".ln1.b", ln1_b);
  out->emplace_back(prefix + ".attn.wq", wq);
  out->emplace_back(prefix + ".attn.bq", bq);
  out->emplace_back(prefix + ".attn.wk", wk);
  out->emplace_back(prefix + ".attn.bk", bk);
  out->emplace_back(prefix + ".attn.wv", wv);
  out->emplace_back(prefix + ".attn.bv", bv);
  out->emplace_back(prefix + ".attn.wo", wo);
  out->emplace_back(prefix + ".attn.bo", bo);
  if (use_conv) {
    out->emplace_back(prefix + ".conv.ln.g", lnc_g);
    out->emplace_back(prefix + ".conv.ln.b", lnc_b);
    out->emplace_back(prefix + ".conv.w", conv_w);
    out->emplace_back(prefix + ".conv.b", conv_b);
    out->emplace_back(prefix + ".conv.pw.w", conv_pw_w);
    out->emplace_back(prefix + ".conv.pw.b", conv_pw_b);
  }
  out->emplace_back(prefix + ".ln2.g", ln2_g);
  out->emplace_back(prefix + ".ln2.b", ln2_b);
  out->emplace_back(prefix + ".ffn.w1", ffn_w1);
  out->emplace_back(prefix + ".ffn.b1", ffn_b1);
  out->emplace_back(prefix + ".ffn.w2", ffn_w2);
  out->emplace_back(prefix + ".ffn.b2", ffn_b2);
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.Validate();
}

void Model::InitParams(Rng* rng) {
  const auto& c = config_;
  const int64_t stacked = c.input_dim * c.subsample_stride;
  input_w_ = Tensor::Randn({stacked, c.model_dim}, rng,
                           1.0 / std::sqrt(static_cast<double>(stacked)));
  input_b_ = Tensor::Zeros({c.model_dim});
  input_w_.set_requires_grad(true);
  input_b_.set_requires_grad(true);
  blocks_.clear();
  for (int64_t l = 0; l < c.num_layers; ++l) {
    blocks_.push_back(ConformerBlock::Create(c.model_dim, c.num_heads,
                                             c.ffn_dim, c.use_conv_block, rng));
  }
  if (c.factorized_heads) {
    head_in_ = CtcHead::Factorized(c.model_dim, c.vocab_size, rng);
    head_final_ = CtcHead::Factorized(c.model_dim, c.vocab_size, rng);
  } else {
    head_in_ = CtcHead::Standard(c.model_dim, c.vocab_size, rng);
    head_final_ = CtcHead::Standard(c.model_dim, c.vocab_size, rng);
  }
  initialized_ = true;
}

Tensor Model::Stem(const Tensor& features) const {
  const auto& c = config_;
  if (features.ndim() != 2 || features.dim(1) != c.input_dim) {
    throw std::invalid_argument("encode: expected features [T," +
                                std::to_string(c.input_dim) + "], got " +
                                ShapeToString(features.shape()));
  }
  const int64_t frames = features.dim(0);
  if (frames < c.subsample_stride) {
    throw std::invalid_argument("encode: " + std::to_string(frames) +
                                " frames < stride " +
                                std::to_string(c.subsample_stride));
  }
  const int64_t out_frames = frames / c.subsample_stride;
  // frame stacking is a crop plus reshape in row-major order
  Tensor x = features;
  if (out_frames * c.subsample_stride != frames) {
    x = Slice(x, 0, 0, out_frames * c.subsample_stride);
  }
  x = Reshape(x, {out_frames, c.input_dim * c.subsample_stride});
  x = Add(MatMul(x, input_w_), input_b_);
  return Add(x, SinusoidalPositions(out_frames, c.model_dim));
}

EncodeResult Model::EncodeFull(const Tensor& features) const {
  if (!initialized_) throw std::runtime_error("encode: model not initialized");
  EncodeResult result;
  Tensor x = Stem(features);
  for (int64_t l = 0; l < config_.split_layer; ++l) x = blocks_[l].Forward(x);
  result.h_in = x;
  result.logp_in = head_in_.Apply(x);
  for (int64_t l = config_.split_layer; l < config_.num_layers; ++l)
    x = blocks_[l].Forward(x);
  result.h = x;
  result.logp = head_final_.Apply(x);
  result.p_in = PosteriorGrid::FromTensor(result.logp_in);
  result.p = PosteriorGrid::FromTensor(result.logp);
  result.skip_mask.assign(result.h.dim(0), false);
  result.upper_frames_computed = result.h.dim(0);
  return result;
}

EncodeResult Model::EncodeFull(
    const std::vector<std::vector<double>>& features) const {
  return EncodeFull(Tensor::FromRows(features));
}

EncodeResult Model::EncodeWithMask(const Tensor& features,
                                   const SkipMask& mask) const {
  if (!initialized_) throw std::runtime_error("encode: model not initialized");
  EncodeResult result;
  Tensor x = Stem(features);
  for (int64_t l = 0; l < config_.split_layer; ++l) x = blocks_[l].Forward(x);
  result.h_in = x;
  result.logp_in = head_in_.Apply(x);
  const int64_t frames = x.dim(0);
  if (static_cast<int64_t>(mask.size()) != frames) {
    throw std::invalid_argument("encode: mask length " +
                                std::to_string(mask.size()) +
                                " does not match T'=" + std::to_string(frames));
  }

  std::vector<int64_t> kept;
  for (int64_t t = 0; t < frames; ++t)
    if (!mask[t]) kept.push_back(t);

  if (kept.empty()) {
    // everything bypasses the upper stack
    result.h = result.h_in;
    result.logp = result.logp_in;
  } else {
    Tensor sub = GatherRows(result.h_in, kept);
    for (int64_t l = config_.split_layer; l < config_.num_layers; ++l)
      sub = blocks_[l].Forward(sub);
    result.h = ScatterRows(result.h_in, kept, sub);
    // skipped frames reuse the intermediate posterior unchanged
    result.logp = ScatterRows(result.logp_in, kept, head_final_.Apply(sub));
  }
  result.p_in = PosteriorGrid::FromTensor(result.logp_in);
  result.p = PosteriorGrid::FromTensor(result.logp);
  result.skip_mask = mask;
  result.upper_frames_computed = static_cast<int64_t>(kept.size());
  return result;
}

EncodeResult Model::EncodeSkip(const Tensor& features, double tau) const {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("encode: tau must be in (0,1]");
  }
  if (!initialized_) throw std::runtime_error("encode: model not initialized");
  Tensor x = Stem(features);
  for (int64_t l = 0; l < config_.split_layer; ++l) x = blocks_[l].Forward(x);
  Tensor logp_in = head_in_.Apply(x);
  PosteriorGrid p_in = PosteriorGrid::FromTensor(logp_in);
  SkipMask mask =
      ComputeSkipMask(BlankPosteriors(p_in), tau, config_.window_len);

  EncodeResult result;
  result.h_in = x;
  result.logp_in = logp_in;
  const int64_t frames = x.dim(0);
  std::vector<int64_t> kept;
  for (int64_t t = 0; t < frames; ++t)
    if (!mask[t]) kept.push_back(t);
  if (kept.empty()) {
    result.h = result.h_in;
    result.logp = result.logp_in;
  } else {
    Tensor sub = GatherRows(result.h_in, kept);
    for (int64_t l = config_.split_layer; l < config_.num_layers; ++l)
      sub = blocks_[l].Forward(sub);
    result.h = ScatterRows(result.h_in, kept, sub);
    result.logp = ScatterRows(result.logp_in, kept, head_final_.Apply(sub));
  }
  result.p_in = p_in;
  result.p = PosteriorGrid::FromTensor(result.logp);
  result.skip_mask = std::move(mask);
  result.upper_frames_computed = static_cast<int64_t>(kept.size());
  return result;
}

EncodeResult Model::EncodeSkip(const std::vector<std::vector<double>>& features,
                               double tau) const {
  return EncodeSkip(Tensor::FromRows(features), tau);
}

EncodeResult Model::EncodeSkip(
    const std::vector<std::vector<double>>& features) const {
  return EncodeSkip(Tensor::FromRows(features), config_.tau_skip);
}

std::vector<std::pair<std::string, Tensor>> Model::NamedParams() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("input.w", input_w_);
  out.emplace_back("input.b", input_b_);
  for (size_t l = 0; l < blocks_.size(); ++l) {
    blocks_[l].CollectParams("enc." + std::to_string(l), &out);
  }
  head_in_.CollectParams("head_in", &out);
  head_final_.CollectParams("head_final", &out);
  return out;
}

}  // namespace blankskip
