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

#include "blankskip/config_json.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace blankskip {

namespace {

using nlohmann::json;

void ApplyModel(const json& j, ModelConfig* c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "input_dim") c->input_dim = value.get<int64_t>();
    else if (key == "subsample_stride") c->subsample_stride = value.get<int64_t>();
    else if (key == "model_dim") c->model_dim = value.get<int64_t>();
    else if (key == "num_layers") c->num_layers = value.get<int64_t>();
    else if (key == "split_layer") c->split_layer = value.get<int64_t>();
    else if (key == "num_heads") c->num_heads = value.get<int64_t>();
    else if (key == "ffn_dim") c->ffn_dim = value.get<int64_t>();
    else if (key == "vocab_size") c->vocab_size = value.get<int64_t>();
    else if (key == "use_conv_block") c->use_conv_block = value.get<bool>();
    else if (key == "factorized_heads") c->factorized_heads = value.get<bool>();
    else if (key == "tau_skip") c->tau_skip = value.get<double>();
    else if (key == "window_len") c->window_len = value.get<int64_t>();
    else throw std::invalid_argument("config: unknown model key '" + key + "'");
  }
}

void ApplyTask(const json& j, TaskConfig* c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "vocab_size") c->vocab_size = value.get<int64_t>();
    else if (key == "input_dim") c->input_dim = value.get<int64_t>();
    else if (key == "prototype_len_min") c->prototype_len_min = value.get<int64_t>();
    else if (key == "prototype_len_max") c->prototype_len_max = value.get<int64_t>();
    else if (key == "silence_len_min") c->silence_len_min = value.get<int64_t>();
    else if (key == "silence_len_max") c->silence_len_max = value.get<int64_t>();
    else if (key == "tokens_min") c->tokens_min = value.get<int64_t>();
    else if (key == "tokens_max") c->tokens_max = value.get<int64_t>();
    else if (key == "noise_std") c->noise_std = value.get<double>();
    else if (key == "seed") c->seed = value.get<uint64_t>();
    else throw std::invalid_argument("config: unknown task key '" + key + "'");
  }
}

void ApplyTrain(const json& j, TrainConfig* c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") c->learning_rate = value.get<double>();
    else if (key == "epochs") c->epochs = value.get<int64_t>();
    else if (key == "batch_size") c->batch_size = value.get<int64_t>();
    else if (key == "lambda_kl") c->lambda_kl = value.get<double>();
    else if (key == "use_kl") c->use_kl = value.get<bool>();
    else if (key == "use_mtl") c->use_mtl = value.get<bool>();
    else if (key == "beta1") c->beta1 = value.get<double>();
    else if (key == "beta2") c->beta2 = value.get<double>();
    else if (key == "adam_eps") c->adam_eps = value.get<double>();
    else if (key == "clip_norm") c->clip_norm = value.get<double>();
    else if (key == "warmup_steps") c->warmup_steps = value.get<int64_t>();
    else if (key == "early_stop_ter") c->early_stop_ter = value.get<double>();
    else if (key == "seed") c->seed = value.get<uint64_t>();
    else throw std::invalid_argument("config: unknown train key '" + key + "'");
  }
}

void ApplyDecode(const json& j, DecodeOptions* c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "beam_width") c->beam_width = value.get<int>();
    else if (key == "tau_decode") c->tau_decode = value.get<double>();
    else if (key == "nbest") c->nbest = value.get<int>();
    else if (key == "enable_frame_skip") c->enable_frame_skip = value.get<bool>();
    else if (key == "skip_as_noop") c->skip_as_noop = value.get<bool>();
    else throw std::invalid_argument("config: unknown decode key '" + key + "'");
  }
}

json DumpConfigJson(const PipelineConfig& config) {
  const TrainConfig& t = config.train;
  json j;
  j["model"] = {{"input_dim", t.model.input_dim},
                {"subsample_stride", t.model.subsample_stride},
                {"model_dim", t.model.model_dim},
                {"num_layers", t.model.num_layers},
                {"split_layer", t.model.split_layer},
                {"num_heads", t.model.num_heads},
                {"ffn_dim", t.model.ffn_dim},
                {"vocab_size", t.model.vocab_size},
                {"use_conv_block", t.model.use_conv_block},
                {"factorized_heads", t.model.factorized_heads},
                {"tau_skip", t.model.tau_skip},
                {"window_len", t.model.window_len}};
  j["task"] = {{"vocab_size", t.task.vocab_size},
               {"input_dim", t.task.input_dim},
               {"prototype_len_min", t.task.prototype_len_min},
               {"prototype_len_max", t.task.prototype_len_max},
               {"silence_len_min", t.task.silence_len_min},
               {"silence_len_max", t.task.silence_len_max},
               {"tokens_min", t.task.tokens_min},
               {"tokens_max", t.task.tokens_max},
               {"noise_std", t.task.noise_std},
               {"seed", t.task.seed}};
  j["train"] = {{"learning_rate", t.learning_rate},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"lambda_kl", t.lambda_kl},
                {"use_kl", t.use_kl},
                {"use_mtl", t.use_mtl},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"adam_eps", t.adam_eps},
                {"clip_norm", t.clip_norm},
                {"warmup_steps", t.warmup_steps},
                {"early_stop_ter", t.early_stop_ter},
                {"seed", t.seed}};
  j["decode"] = {{"beam_width", config.decode.beam_width},
                 {"tau_decode", config.decode.tau_decode},
                 {"nbest", config.decode.nbest},
                 {"enable_frame_skip", config.decode.enable_frame_skip},
                 {"skip_as_noop", config.decode.skip_as_noop}};
  return j;
}

}  // namespace

void ApplyJsonConfig(const std::string& json_text, PipelineConfig* config) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") +
                                e.what());
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config: top level must be an object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "model") ApplyModel(value, &config->train.model);
    else if (key == "task") ApplyTask(value, &config->train.task);
    else if (key == "train") ApplyTrain(value, &config->train);
    else if (key == "decode") ApplyDecode(value, &config->decode);
    else throw std::invalid_argument("config: unknown section '" + key + "'");
  }
}

void ApplyConfigFile(const std::string& path, PipelineConfig* config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  ApplyJsonConfig(buffer.str(), config);
}

std::string DumpConfig(const PipelineConfig& config) {
  return DumpConfigJson(config).dump(2);
}

std::string ConfigHash(const PipelineConfig& config) {
  const std::string text = DumpConfigJson(config).dump();
  uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace blankskip
