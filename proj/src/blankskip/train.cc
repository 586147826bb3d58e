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

#include "blankskip/train.h"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "blankskip/decoder.h"
#include "blankskip/rng.h"

namespace blankskip {

void TrainConfig::Validate() const {
  model.Validate();
  task.Validate();
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("train config: " + msg);
  };
  if (lambda_kl < 0.0) fail("lambda_kl must be >= 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (learning_rate <= 0.0) fail("learning_rate must be > 0");
  if (clip_norm <= 0.0) fail("clip_norm must be > 0");
  if (early_stop_ter < 0.0) fail("early_stop_ter must be >= 0");
  if (model.input_dim != task.input_dim)
    fail("model input_dim " + std::to_string(model.input_dim) +
         " != task input_dim " + std::to_string(task.input_dim));
  if (model.vocab_size != task.vocab_size)
    fail("model vocab_size " + std::to_string(model.vocab_size) +
         " != task vocab_size " + std::to_string(task.vocab_size));
}

Tensor TotalLoss(const Model& model,
                 const std::vector<const Utterance*>& batch,
                 const TrainConfig& config, LossTerms* terms) {
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  Tensor ctc_final, ctc_in, kl;
  for (const Utterance* utt : batch) {
    EncodeResult res = model.EncodeFull(utt->features);
    try {
      Tensor lf = CtcLoss(res.logp, utt->labels);
      ctc_final = ctc_final.defined() ? Add(ctc_final, lf) : lf;
      if (config.use_mtl) {
        Tensor li = CtcLoss(res.logp_in, utt->labels);
        ctc_in = ctc_in.defined() ? Add(ctc_in, li) : li;
      }
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("total_loss: utterance " + utt->id + ": " +
                               e.what());
    }
    if (config.use_kl) {
      // frame-summed KL per utterance (batchmean-style): the per-frame
      // distillation term enters the loss once per frame
      Tensor k = Scale(KlFrameLoss(res.logp_in, res.logp),
                       static_cast<double>(res.logp_in.dim(0)));
      kl = kl.defined() ? Add(kl, k) : k;
    }
  }
  ctc_final = Scale(ctc_final, inv_batch);
  Tensor total = ctc_final;
  if (config.use_mtl) {
    ctc_in = Scale(ctc_in, inv_batch);
    total = Add(total, ctc_in);
  }
  if (config.use_kl) {
    kl = Scale(kl, inv_batch);
    total = Add(total, Scale(kl, config.lambda_kl));
  }
  if (terms) {
    terms->ctc_final = ctc_final.item();
    terms->ctc_in = config.use_mtl ? ctc_in.item() : 0.0;
    terms->kl = config.use_kl ? kl.item() : 0.0;
    terms->total = total.item();
  }
  return total;
}

namespace {

// Adam with global gradient-norm clipping.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<std::pair<std::string, Tensor>> params,
                const TrainConfig& config)
      : params_(std::move(params)), config_(config) {
    for (const auto& [name, p] : params_) {
      m_.emplace_back(p.numel(), 0.0);
      v_.emplace_back(p.numel(), 0.0);
    }
  }

  void ZeroGrads() {
    for (auto& [name, p] : params_) p.ZeroGrad();
  }

  void Step() {
    ++t_;
    double sq_norm = 0.0;
    for (const auto& [name, p] : params_) {
      for (double g : p.grad()) sq_norm += g * g;
    }
    const double norm = std::sqrt(sq_norm);
    const double clip_scale =
        norm > config_.clip_norm ? config_.clip_norm / norm : 1.0;
    double lr = config_.learning_rate;
    if (config_.warmup_steps > 0 && t_ < config_.warmup_steps) {
      lr *= static_cast<double>(t_) / static_cast<double>(config_.warmup_steps);
    }
    const double bc1 = 1.0 - std::pow(config_.beta1, t_);
    const double bc2 = 1.0 - std::pow(config_.beta2, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i].second;
      const std::vector<double>& grad = p.grad();
      std::vector<double>& value = p.mutable_values();
      for (size_t j = 0; j < value.size(); ++j) {
        const double g = grad[j] * clip_scale;
        m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * g;
        v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * g * g;
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        value[j] -= lr * mhat / (std::sqrt(vhat) + config_.adam_eps);
      }
    }
  }

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  const TrainConfig& config_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

void WriteLogHeader(std::ostream* log, const TrainConfig& config) {
  if (!log) return;
  nlohmann::json header;
  header["record"] = "train_header";
  header["lambda_kl"] = config.lambda_kl;
  header["use_kl"] = config.use_kl;
  header["use_mtl"] = config.use_mtl;
  header["learning_rate"] = config.learning_rate;
  header["epochs"] = config.epochs;
  header["batch_size"] = config.batch_size;
  header["seed"] = config.seed;
  header["factorized_heads"] = config.model.factorized_heads;
  (*log) << header.dump() << "\n";
}

}  // namespace

double EvaluateGreedyTer(const Model& model,
                         const std::vector<Utterance>& utterances) {
  NoGradGuard no_grad;
  int64_t errors = 0, ref_len = 0;
  for (const auto& utt : utterances) {
    EncodeResult res = model.EncodeFull(utt.features);
    LabelSeq hyp = GreedyDecode(res.p);
    errors += EditDistance(utt.labels, hyp).Total();
    ref_len += static_cast<int64_t>(utt.labels.size());
  }
  return static_cast<double>(errors) /
         static_cast<double>(std::max<int64_t>(1, ref_len));
}

TrainResult Train(const TrainConfig& config,
                  const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& heldout_set,
                  std::ostream* log) {
  config.Validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");

  Rng init_rng(config.seed);
  TrainResult result{Model(config.model), 0, {}, {}};
  result.model.InitParams(&init_rng);
  AdamOptimizer optimizer(result.model.NamedParams(), config);
  WriteLogHeader(log, config);

  Rng order_rng(config.seed + 0x9e3779b97f4a7c15ULL);
  std::vector<int64_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the dedicated order stream
    for (int64_t i = static_cast<int64_t>(order.size()) - 1; i > 0; --i) {
      std::swap(order[i], order[order_rng.UniformInt(0, i)]);
    }
    double epoch_loss = 0.0;
    int64_t epoch_batches = 0;
    LossTerms terms;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<const Utterance*> batch;
      for (size_t i = start;
           i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(&train_set[order[i]]);
      }
      optimizer.ZeroGrads();
      Tensor loss = TotalLoss(result.model, batch, config, &terms);
      if (!std::isfinite(terms.total)) {
        throw std::runtime_error(
            "train: non-finite loss at step " + std::to_string(result.steps) +
            " (ctc=" + std::to_string(terms.ctc_final) +
            " ctc_in=" + std::to_string(terms.ctc_in) +
            " kl=" + std::to_string(terms.kl) + ")");
      }
      loss.Backward();
      optimizer.Step();
      ++result.steps;
      result.loss_history.push_back(terms.total);
      epoch_loss += terms.total;
      ++epoch_batches;
    }
    const double ter =
        heldout_set.empty() ? 0.0 : EvaluateGreedyTer(result.model, heldout_set);
    result.heldout_ter_history.push_back(ter);
    if (log) {
      nlohmann::json entry;
      entry["record"] = "epoch";
      entry["epoch"] = epoch;
      entry["step"] = result.steps;
      entry["loss"] = epoch_loss / std::max<int64_t>(1, epoch_batches);
      entry["ctc"] = terms.ctc_final;
      entry["ctc_in"] = terms.ctc_in;
      entry["kl"] = terms.kl;
      entry["heldout_ter"] = ter;
      (*log) << entry.dump() << "\n" << std::flush;
    }
    if (!heldout_set.empty() && config.early_stop_ter > 0.0 &&
        ter <= config.early_stop_ter) {
      break;
    }
  }
  return result;
}

namespace {

nlohmann::json ModelConfigToJson(const ModelConfig& c) {
  return nlohmann::json{{"input_dim", c.input_dim},
                        {"subsample_stride", c.subsample_stride},
                        {"model_dim", c.model_dim},
                        {"num_layers", c.num_layers},
                        {"split_layer", c.split_layer},
                        {"num_heads", c.num_heads},
                        {"ffn_dim", c.ffn_dim},
                        {"vocab_size", c.vocab_size},
                        {"use_conv_block", c.use_conv_block},
                        {"factorized_heads", c.factorized_heads},
                        {"tau_skip", c.tau_skip},
                        {"window_len", c.window_len}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.input_dim = j.at("input_dim").get<int64_t>();
  c.subsample_stride = j.at("subsample_stride").get<int64_t>();
  c.model_dim = j.at("model_dim").get<int64_t>();
  c.num_layers = j.at("num_layers").get<int64_t>();
  c.split_layer = j.at("split_layer").get<int64_t>();
  c.num_heads = j.at("num_heads").get<int64_t>();
  c.ffn_dim = j.at("ffn_dim").get<int64_t>();
  c.vocab_size = j.at("vocab_size").get<int64_t>();
  c.use_conv_block = j.at("use_conv_block").get<bool>();
  c.factorized_heads = j.at("factorized_heads").get<bool>();
  c.tau_skip = j.at("tau_skip").get<double>();
  c.window_len = j.at("window_len").get<int64_t>();
  return c;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const Model& model,
                    int64_t steps, const std::vector<double>& loss_history) {
  nlohmann::json doc;
  doc["format"] = "blankskip-checkpoint-v1";
  doc["config"] = ModelConfigToJson(model.config());
  doc["steps"] = steps;
  doc["loss_history"] = loss_history;
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [name, tensor] : model.NamedParams()) {
    weights[name] = {{"shape", tensor.shape()}, {"data", tensor.values()}};
  }
  doc["weights"] = std::move(weights);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << doc.dump();
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint: parse error in " + path + ": " +
                             e.what());
  }
  LoadedCheckpoint loaded{Model(ModelConfigFromJson(doc.at("config"))), 0, {}};
  loaded.steps = doc.value("steps", int64_t{0});
  if (doc.contains("loss_history")) {
    loaded.loss_history = doc.at("loss_history").get<std::vector<double>>();
  }
  Rng dummy(0);
  loaded.model.InitParams(&dummy);

  const nlohmann::json& weights = doc.at("weights");
  auto params = loaded.model.NamedParams();
  std::string missing, extra;
  for (const auto& [name, tensor] : params) {
    if (!weights.contains(name)) missing += " " + name;
  }
  for (const auto& [name, value] : weights.items()) {
    bool known = false;
    for (const auto& [pname, tensor] : params) known = known || pname == name;
    if (!known) extra += " " + name;
  }
  if (!missing.empty() || !extra.empty()) {
    throw std::runtime_error("checkpoint: weight name mismatch in " + path +
                             (missing.empty() ? "" : "; missing:" + missing) +
                             (extra.empty() ? "" : "; unexpected:" + extra));
  }
  for (auto& [name, tensor] : params) {
    const nlohmann::json& entry = weights.at(name);
    const auto shape = entry.at("shape").get<std::vector<int64_t>>();
    if (shape != tensor.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name +
                               ": stored " + ShapeToString(shape) +
                               " vs expected " +
                               ShapeToString(tensor.shape()));
    }
    const auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != tensor.values().size()) {
      throw std::runtime_error("checkpoint: data length mismatch for " + name);
    }
    tensor.mutable_values() = data;
  }
  return loaded;
}

}  // namespace blankskip
