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

#ifndef BLANKSKIP_DATA_H_
#define BLANKSKIP_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "blankskip/ctc.h"

namespace blankskip {

class Rng;

struct TaskConfig {
  int64_t vocab_size = 8;
  int64_t input_dim = 16;
  int64_t prototype_len_min = 6;
  int64_t prototype_len_max = 10;
  int64_t silence_len_min = 4;
  int64_t silence_len_max = 20;
  int64_t tokens_min = 5;
  int64_t tokens_max = 12;
  double noise_std = 0.05;
  uint64_t seed = 17;

  void Validate() const;
};

struct Utterance {
  std::string id;
  std::vector<std::vector<double>> features;  // T x d
  LabelSeq labels;
};

// Token prototype patterns separated by silence. Token k's prototype matrix
// is drawn once from the unit normal when the task is constructed and then
// frozen, so (seed, config) fully determines every dataset.
class SyntheticTask {
 public:
  explicit SyntheticTask(TaskConfig config);

  Utterance GenUtterance(Rng* rng, const std::string& id) const;
  std::vector<Utterance> GenDataset(int64_t count, uint64_t stream_seed,
                                    const std::string& id_prefix) const;

  const TaskConfig& config() const { return config_; }
  // prototypes()[k-1] is token k's pattern, [len_k x d]
  const std::vector<std::vector<std::vector<double>>>& prototypes() const {
    return prototypes_;
  }

 private:
  TaskConfig config_;
  std::vector<std::vector<std::vector<double>>> prototypes_;
};

// Line-delimited records {"id", "labels", "features"}; one utterance per
// line. Reading a malformed line reports its 1-based line number.
void WriteDataset(const std::string& path,
                  const std::vector<Utterance>& utterances);
std::vector<Utterance> ReadDataset(const std::string& path);

}  // namespace blankskip

#endif  // BLANKSKIP_DATA_H_
