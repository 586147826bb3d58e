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

#include "blankskip/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace blankskip {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::fabs(a - b)));
}

struct ProbPair {
  double log_pb = kNegInf;
  double log_pnb = kNegInf;
};

}  // namespace

double Hypothesis::TotalLogProb() const { return LogAdd(log_pb, log_pnb); }

std::vector<std::pair<LabelSeq, double>> PrefixBeamSearch(
    const PosteriorGrid& grid, const DecodeOptions& opts) {
  if (grid.frames() == 0) {
    throw std::invalid_argument("beam search: empty grid");
  }
  if (opts.beam_width < 1) {
    throw std::invalid_argument("beam search: beam_width must be >= 1");
  }
  if (opts.nbest < 1 || opts.nbest > opts.beam_width) {
    throw std::invalid_argument("beam search: need 1 <= nbest <= beam_width");
  }
  if (!(opts.tau_decode > 0.0 && opts.tau_decode <= 1.0)) {
    throw std::invalid_argument("beam search: tau_decode must be in (0,1]");
  }

  const int64_t vocab = grid.vocab_size;
  // map gives stable lexicographic iteration; beams stay tiny at desk scale
  std::map<LabelSeq, ProbPair> beam;
  beam[{}] = {0.0, kNegInf};

  for (int64_t t = 0; t < grid.frames(); ++t) {
    const double blank_prob = std::exp(grid.LogProb(t, kBlankId));
    if (opts.enable_frame_skip && blank_prob > opts.tau_decode) {
      if (opts.skip_as_noop) continue;
      // blank-certain update: all mass moves to the blank-ending term
      for (auto& [prefix, pp] : beam) {
        pp.log_pb = LogAdd(pp.log_pb, pp.log_pnb);
        pp.log_pnb = kNegInf;
      }
      continue;
    }

    std::map<LabelSeq, ProbPair> next;
    for (const auto& [prefix, pp] : beam) {
      const double total = LogAdd(pp.log_pb, pp.log_pnb);
      // stay on the prefix via blank
      {
        ProbPair& np = next[prefix];
        np.log_pb = LogAdd(np.log_pb, total + grid.LogProb(t, kBlankId));
      }
      const int last = prefix.empty() ? -1 : prefix.back();
      for (int k = 1; k <= vocab; ++k) {
        const double lp = grid.LogProb(t, k);
        if (k == last) {
          // repeat merges unless a blank intervened
          ProbPair& same = next[prefix];
          same.log_pnb = LogAdd(same.log_pnb, pp.log_pnb + lp);
          LabelSeq extended = prefix;
          extended.push_back(k);
          ProbPair& np = next[extended];
          np.log_pnb = LogAdd(np.log_pnb, pp.log_pb + lp);
        } else {
          LabelSeq extended = prefix;
          extended.push_back(k);
          ProbPair& np = next[extended];
          np.log_pnb = LogAdd(np.log_pnb, total + lp);
        }
      }
    }

    // prefixes whose every alignment has probability zero are unreachable
    for (auto it = next.begin(); it != next.end();) {
      if (it->second.log_pb == kNegInf && it->second.log_pnb == kNegInf) {
        it = next.erase(it);
      } else {
        ++it;
      }
    }

    if (static_cast<int>(next.size()) > opts.beam_width) {
      std::vector<std::pair<const LabelSeq*, double>> ranked;
      ranked.reserve(next.size());
      for (const auto& [prefix, pp] : next) {
        ranked.emplace_back(&prefix, LogAdd(pp.log_pb, pp.log_pnb));
      }
      // ties break toward lexicographically smaller prefixes: map iteration
      // order plus stable sort guarantees it
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) {
                         return a.second > b.second;
                       });
      std::map<LabelSeq, ProbPair> pruned;
      for (int i = 0; i < opts.beam_width; ++i) {
        pruned[*ranked[i].first] = next[*ranked[i].first];
      }
      next = std::move(pruned);
    }
    beam = std::move(next);
  }

  std::vector<Hypothesis> hyps;
  hyps.reserve(beam.size());
  for (const auto& [prefix, pp] : beam) {
    hyps.push_back({prefix, pp.log_pb, pp.log_pnb});
  }
  std::stable_sort(hyps.begin(), hyps.end(), [](const auto& a, const auto& b) {
    return a.TotalLogProb() > b.TotalLogProb();
  });
  std::vector<std::pair<LabelSeq, double>> out;
  const int count = std::min<int>(opts.nbest, static_cast<int>(hyps.size()));
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.emplace_back(hyps[i].prefix, hyps[i].TotalLogProb());
  }
  return out;
}

EditCounts EditDistance(const LabelSeq& ref, const LabelSeq& hyp) {
  const size_t n = ref.size(), m = hyp.size();
  // cost[i][j] = min edits aligning ref[:i] with hyp[:j]
  std::vector<std::vector<int64_t>> cost(n + 1, std::vector<int64_t>(m + 1));
  for (size_t i = 0; i <= n; ++i) cost[i][0] = static_cast<int64_t>(i);
  for (size_t j = 0; j <= m; ++j) cost[0][j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const int64_t sub = cost[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]);
      const int64_t del = cost[i - 1][j] + 1;
      const int64_t ins = cost[i][j - 1] + 1;
      cost[i][j] = std::min({sub, del, ins});
    }
  }
  // backtrace for the counts
  EditCounts counts;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])) {
      if (ref[i - 1] != hyp[j - 1]) ++counts.substitutions;
      --i;
      --j;
    } else if (j > 0 && cost[i][j] == cost[i][j - 1] + 1) {
      ++counts.insertions;
      --j;
    } else {
      ++counts.deletions;
      --i;
    }
  }
  return counts;
}

double TokenErrorRate(const EditCounts& counts, int64_t ref_len) {
  return static_cast<double>(counts.Total()) /
         static_cast<double>(std::max<int64_t>(1, ref_len));
}

}  // namespace blankskip
