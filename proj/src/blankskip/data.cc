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

#include "blankskip/data.h"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "blankskip/rng.h"

namespace blankskip {

void TaskConfig::Validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("task config: " + msg);
  };
  if (vocab_size < 1 || input_dim < 1) fail("dimensions must be positive");
  if (prototype_len_min < 1 || prototype_len_min > prototype_len_max)
    fail("empty prototype length range");
  if (silence_len_min < 0 || silence_len_min > silence_len_max)
    fail("empty silence length range");
  if (tokens_min < 1 || tokens_min > tokens_max)
    fail("empty tokens-per-utterance range");
  if (noise_std < 0.0) fail("noise_std must be >= 0");
}

SyntheticTask::SyntheticTask(TaskConfig config) : config_(std::move(config)) {
  config_.Validate();
  Rng proto_rng(config_.seed);
  prototypes_.resize(config_.vocab_size);
  for (auto& proto : prototypes_) {
    const int64_t len =
        proto_rng.UniformInt(config_.prototype_len_min, config_.prototype_len_max);
    proto.assign(len, std::vector<double>(config_.input_dim));
    for (auto& row : proto) {
      for (double& v : row) v = proto_rng.Normal();
    }
  }
}

Utterance SyntheticTask::GenUtterance(Rng* rng, const std::string& id) const {
  const auto& c = config_;
  Utterance utt;
  utt.id = id;
  const int64_t num_tokens = rng->UniformInt(c.tokens_min, c.tokens_max);
  utt.labels.reserve(num_tokens);
  for (int64_t i = 0; i < num_tokens; ++i) {
    utt.labels.push_back(static_cast<int>(rng->UniformInt(1, c.vocab_size)));
  }
  auto push_silence = [&] {
    const int64_t len = rng->UniformInt(c.silence_len_min, c.silence_len_max);
    for (int64_t i = 0; i < len; ++i) {
      std::vector<double> row(c.input_dim);
      for (double& v : row) v = rng->Normal() * c.noise_std;
      utt.features.push_back(std::move(row));
    }
  };
  push_silence();
  for (int64_t i = 0; i < num_tokens; ++i) {
    for (const auto& proto_row : prototypes_[utt.labels[i] - 1]) {
      std::vector<double> row(proto_row);
      for (double& v : row) v += rng->Normal() * c.noise_std;
      utt.features.push_back(std::move(row));
    }
    push_silence();
  }
  return utt;
}

std::vector<Utterance> SyntheticTask::GenDataset(
    int64_t count, uint64_t stream_seed, const std::string& id_prefix) const {
  Rng rng(stream_seed);
  std::vector<Utterance> out;
  out.reserve(count);
  for (int64_t i = 0; i < count; ++i) {
    char suffix[24];
    std::snprintf(suffix, sizeof(suffix), "%04lld",
                  static_cast<long long>(i));
    out.push_back(GenUtterance(&rng, id_prefix + suffix));
  }
  return out;
}

void WriteDataset(const std::string& path,
                  const std::vector<Utterance>& utterances) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write " + path);
  for (const auto& utt : utterances) {
    nlohmann::json record;
    record["id"] = utt.id;
    record["labels"] = utt.labels;
    record["features"] = utt.features;
    out << record.dump() << "\n";
  }
  if (!out) throw std::runtime_error("dataset: write failed for " + path);
}

std::vector<Utterance> ReadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot read " + path);
  std::vector<Utterance> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json record = nlohmann::json::parse(line);
      Utterance utt;
      utt.id = record.at("id").get<std::string>();
      utt.labels = record.at("labels").get<LabelSeq>();
      utt.features =
          record.at("features").get<std::vector<std::vector<double>>>();
      if (utt.features.empty()) {
        throw std::runtime_error("empty features");
      }
      for (int label : utt.labels) {
        if (label < 1) throw std::runtime_error("label id below 1");
      }
      out.push_back(std::move(utt));
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset: malformed line " +
                               std::to_string(line_no) + " in " + path + ": " +
                               e.what());
    }
  }
  return out;
}

}  // namespace blankskip
