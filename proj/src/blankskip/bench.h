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

#ifndef BLANKSKIP_BENCH_H_
#define BLANKSKIP_BENCH_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "blankskip/data.h"
#include "blankskip/decoder.h"
#include "blankskip/encoder.h"

namespace blankskip {

struct BenchRow {
  // empty = the skipping-disabled baseline row
  std::optional<double> tau;
  double skip_ratio = 0.0;
  double effective_layers = 0.0;
  double ter = 0.0;
  double wall_encoder_s = 0.0;
  double wall_decode_s = 0.0;
  double rtf = 0.0;
  int64_t upper_frames_computed = 0;
  int64_t total_frames = 0;
};

struct BenchOptions {
  int beam_width = 10;
  int nbest = 1;
  // synthetic seconds per pre-subsampling input frame, for the RTF analog
  double frame_period_s = 0.01;
  // wall-clock medians are taken over this many repetitions
  int repetitions = 3;
};

// skip-ratio-weighted average layer count: s*K + (1-s)*L.
double EffectiveLayers(double skip_ratio, int64_t split_layer,
                       int64_t num_layers);

// One row per tau, preceded by a baseline row with skipping disabled
// entirely. Only the wall-clock fields are nondeterministic.
std::vector<BenchRow> RunBench(const Model& model,
                               const std::vector<Utterance>& utterances,
                               const std::vector<double>& tau_list,
                               const BenchOptions& opts);

// CSV report; first line records the frame period, then a header row naming
// every BenchRow field.
void WriteBenchCsv(std::ostream& out, const std::vector<BenchRow>& rows,
                   double frame_period_s);
std::string FormatCsvValue(double value);

struct SpikeOffsetResult {
  double mean_abs_offset = 0.0;
  int64_t matched = 0;
  int64_t unmatched = 0;
};

// Spikes are the first frames of maximal same-token non-blank argmax runs.
// Greedy in-order matching on equal tokens; the mean |frame delta| over
// matches measures intermediate/final alignment.
SpikeOffsetResult SpikeOffset(const PosteriorGrid& p_in,
                              const PosteriorGrid& p);

struct InspectRecord {
  std::string utt_id;
  double tau = 0.0;
  std::vector<double> blank_in;
  std::vector<double> blank_final;
  std::vector<bool> skipped;
  std::vector<int> argmax_in;
  std::vector<int> argmax_final;
};

// Per-frame dump of one utterance for external plotting.
InspectRecord InspectDump(const Model& model, const Utterance& utterance,
                          double tau);
void WriteInspectRecord(std::ostream& out, const InspectRecord& record);

}  // namespace blankskip

#endif  // BLANKSKIP_BENCH_H_
