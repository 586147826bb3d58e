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

#ifndef BLANKSKIP_TRAIN_H_
#define BLANKSKIP_TRAIN_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "blankskip/data.h"
#include "blankskip/encoder.h"

namespace blankskip {

struct TrainConfig {
  ModelConfig model;
  TaskConfig task;
  double learning_rate = 1e-3;
  int64_t epochs = 30;
  int64_t batch_size = 8;
  double lambda_kl = 0.5;
  bool use_kl = true;
  bool use_mtl = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  int64_t warmup_steps = 0;  // 0 disables the linear warmup
  // Stop once held-out greedy TER reaches this value; 0 disables.
  double early_stop_ter = 0.02;
  uint64_t seed = 1;

  void Validate() const;
};

struct LossTerms {
  double ctc_final = 0.0;
  double ctc_in = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

// Batch loss on the full-depth encoder: final CTC + intermediate CTC (MTL)
// + lambda * KL against the detached final posterior, the KL summed over
// frames per utterance. Each term is a mean over the batch; CTC per
// utterance is not length-normalized. An infeasible utterance is reported
// by id.
Tensor TotalLoss(const Model& model,
                 const std::vector<const Utterance*>& batch,
                 const TrainConfig& config, LossTerms* terms);

struct TrainResult {
  Model model;
  int64_t steps = 0;
  std::vector<double> loss_history;        // per-step total loss
  std::vector<double> heldout_ter_history;  // per-epoch
};

// Adam with gradient-norm clipping, deterministic batch order per seed.
// Writes one line-delimited log record per epoch (plus a header) when `log`
// is non-null. Aborts with diagnostics on a non-finite loss.
TrainResult Train(const TrainConfig& config,
                  const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& heldout_set,
                  std::ostream* log = nullptr);

// Corpus-level greedy token error rate of the full (no-skip) path.
double EvaluateGreedyTer(const Model& model,
                         const std::vector<Utterance>& utterances);

struct LoadedCheckpoint {
  Model model;
  int64_t steps = 0;
  std::vector<double> loss_history;
};

// Single JSON document: model config + every weight by canonical name +
// step count + loss history. Round-trips weights exactly through decimal
// text. Loading verifies the stored weight-name set matches the
// architecture and reports any discrepancy.
void SaveCheckpoint(const std::string& path, const Model& model,
                    int64_t steps, const std::vector<double>& loss_history);
LoadedCheckpoint LoadCheckpoint(const std::string& path);

}  // namespace blankskip

#endif  // BLANKSKIP_TRAIN_H_
