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

#ifndef BLANKSKIP_DECODER_H_
#define BLANKSKIP_DECODER_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "blankskip/ctc.h"

namespace blankskip {

// Prefix with separated blank-ending / non-blank-ending log probabilities.
struct Hypothesis {
  LabelSeq prefix;
  double log_pb;   // alignments ending in blank
  double log_pnb;  // alignments ending in the last prefix token
  double TotalLogProb() const;
};

struct DecodeOptions {
  int beam_width = 10;
  // Frames whose blank probability strictly exceeds tau_decode are not
  // expanded; 1.0 disables frame skipping.
  double tau_decode = 1.0;
  int nbest = 1;
  // When false, the blank-threshold test is never evaluated. Output must be
  // bit-identical to tau_decode = 1.0.
  bool enable_frame_skip = true;
  // When true, frames over the threshold are dropped outright instead of
  // being treated as blank-certain.
  bool skip_as_noop = false;
};

// Frame-synchronous CTC prefix beam search. Frames over the blank threshold
// fold all hypothesis mass into the blank-ending term (or are dropped when
// skip_as_noop). Returns up to nbest (labels, total log prob) pairs ranked by
// probability, ties broken by lexicographic prefix order.
std::vector<std::pair<LabelSeq, double>> PrefixBeamSearch(
    const PosteriorGrid& grid, const DecodeOptions& opts);

struct EditCounts {
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t Total() const { return substitutions + insertions + deletions; }
};

// Levenshtein counts via dynamic programming.
EditCounts EditDistance(const LabelSeq& ref, const LabelSeq& hyp);

// (S+I+D) / max(1, |ref|)
double TokenErrorRate(const EditCounts& counts, int64_t ref_len);

}  // namespace blankskip

#endif  // BLANKSKIP_DECODER_H_
