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

#include "blankskip/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace blankskip {

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double Median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[xs.size() / 2];
}

std::vector<int> ArgmaxPerFrame(const PosteriorGrid& grid) {
  std::vector<int> out(grid.frames());
  for (int64_t t = 0; t < grid.frames(); ++t) {
    int best = 0;
    double best_lp = grid.LogProb(t, 0);
    for (int64_t k = 1; k <= grid.vocab_size; ++k) {
      if (grid.LogProb(t, k) > best_lp) {
        best_lp = grid.LogProb(t, k);
        best = static_cast<int>(k);
      }
    }
    out[t] = best;
  }
  return out;
}

struct Spike {
  int64_t frame;
  int token;
};

std::vector<Spike> ExtractSpikes(const PosteriorGrid& grid) {
  std::vector<Spike> spikes;
  const std::vector<int> argmax = ArgmaxPerFrame(grid);
  int prev = kBlankId;
  for (int64_t t = 0; t < static_cast<int64_t>(argmax.size()); ++t) {
    if (argmax[t] != kBlankId && argmax[t] != prev) {
      spikes.push_back({t, argmax[t]});
    }
    prev = argmax[t];
  }
  return spikes;
}

struct PassStats {
  double encoder_s = 0.0;
  double decode_s = 0.0;
  int64_t skipped = 0;
  int64_t upper = 0;
  int64_t total_frames = 0;       // post-subsampling
  int64_t total_input_frames = 0;  // pre-subsampling
  int64_t errors = 0;
  int64_t ref_len = 0;
};

PassStats RunPass(const Model& model, const std::vector<Utterance>& utterances,
                  std::optional<double> tau, const BenchOptions& opts) {
  NoGradGuard no_grad;
  PassStats stats;
  DecodeOptions dopts;
  dopts.beam_width = opts.beam_width;
  dopts.nbest = 1;
  if (tau) {
    dopts.tau_decode = *tau;
  } else {
    dopts.enable_frame_skip = false;
  }
  for (const auto& utt : utterances) {
    const auto enc_start = Clock::now();
    EncodeResult res = tau ? model.EncodeSkip(utt.features, *tau)
                           : model.EncodeFull(utt.features);
    stats.encoder_s += SecondsSince(enc_start);
    const int64_t frames = res.p.frames();
    stats.total_frames += frames;
    stats.total_input_frames += static_cast<int64_t>(utt.features.size());
    stats.upper += res.upper_frames_computed;
    stats.skipped += frames - res.upper_frames_computed;
    const auto dec_start = Clock::now();
    auto nbest = PrefixBeamSearch(res.p, dopts);
    stats.decode_s += SecondsSince(dec_start);
    const LabelSeq& hyp = nbest.empty() ? LabelSeq{} : nbest.front().first;
    stats.errors += EditDistance(utt.labels, hyp).Total();
    stats.ref_len += static_cast<int64_t>(utt.labels.size());
  }
  return stats;
}

BenchRow RowFromStats(const PassStats& stats, std::optional<double> tau,
                      const Model& model, const BenchOptions& opts,
                      std::vector<double> encoder_times,
                      std::vector<double> decode_times) {
  BenchRow row;
  row.tau = tau;
  row.total_frames = stats.total_frames;
  row.upper_frames_computed = stats.upper;
  row.skip_ratio = stats.total_frames == 0
                       ? 0.0
                       : static_cast<double>(stats.skipped) /
                             static_cast<double>(stats.total_frames);
  row.effective_layers =
      EffectiveLayers(row.skip_ratio, model.config().split_layer,
                      model.config().num_layers);
  row.ter = static_cast<double>(stats.errors) /
            static_cast<double>(std::max<int64_t>(1, stats.ref_len));
  row.wall_encoder_s = Median(std::move(encoder_times));
  row.wall_decode_s = Median(std::move(decode_times));
  const double audio_s =
      static_cast<double>(stats.total_input_frames) * opts.frame_period_s;
  row.rtf = audio_s > 0.0
                ? (row.wall_encoder_s + row.wall_decode_s) / audio_s
                : 0.0;
  return row;
}

}  // namespace

double EffectiveLayers(double skip_ratio, int64_t split_layer,
                       int64_t num_layers) {
  if (skip_ratio < 0.0 || skip_ratio > 1.0) {
    throw std::invalid_argument("effective_layers: skip ratio outside [0,1]");
  }
  if (!(split_layer < num_layers)) {
    throw std::invalid_argument("effective_layers: need K < L");
  }
  return skip_ratio * static_cast<double>(split_layer) +
         (1.0 - skip_ratio) * static_cast<double>(num_layers);
}

std::vector<BenchRow> RunBench(const Model& model,
                               const std::vector<Utterance>& utterances,
                               const std::vector<double>& tau_list,
                               const BenchOptions& opts) {
  if (utterances.empty()) throw std::invalid_argument("bench: empty dataset");
  if (opts.repetitions < 1) {
    throw std::invalid_argument("bench: repetitions must be >= 1");
  }
  std::vector<BenchRow> rows;
  std::vector<std::optional<double>> passes;
  passes.push_back(std::nullopt);  // baseline, skipping disabled
  for (double tau : tau_list) passes.push_back(tau);
  for (const auto& tau : passes) {
    std::vector<double> encoder_times, decode_times;
    PassStats stats;
    for (int rep = 0; rep < opts.repetitions; ++rep) {
      stats = RunPass(model, utterances, tau, opts);
      encoder_times.push_back(stats.encoder_s);
      decode_times.push_back(stats.decode_s);
    }
    rows.push_back(RowFromStats(stats, tau, model, opts,
                                std::move(encoder_times),
                                std::move(decode_times)));
  }
  return rows;
}

std::string FormatCsvValue(double value) {
  std::ostringstream os;
  os.precision(10);
  os << value;
  return os.str();
}

void WriteBenchCsv(std::ostream& out, const std::vector<BenchRow>& rows,
                   double frame_period_s) {
  out << "# frame_period_s=" << FormatCsvValue(frame_period_s) << "\n";
  out << "tau,skip_ratio,effective_layers,ter,wall_encoder_s,wall_decode_s,"
         "rtf,upper_frames_computed,total_frames\n";
  for (const auto& row : rows) {
    if (row.tau) out << FormatCsvValue(*row.tau);
    out << "," << FormatCsvValue(row.skip_ratio) << ","
        << FormatCsvValue(row.effective_layers) << ","
        << FormatCsvValue(row.ter) << "," << FormatCsvValue(row.wall_encoder_s)
        << "," << FormatCsvValue(row.wall_decode_s) << ","
        << FormatCsvValue(row.rtf) << "," << row.upper_frames_computed << ","
        << row.total_frames << "\n";
  }
}

SpikeOffsetResult SpikeOffset(const PosteriorGrid& p_in,
                              const PosteriorGrid& p) {
  if (p_in.frames() != p.frames()) {
    throw std::invalid_argument("spike_offset: frame count mismatch");
  }
  const std::vector<Spike> a = ExtractSpikes(p_in);
  const std::vector<Spike> b = ExtractSpikes(p);
  SpikeOffsetResult result;
  double total = 0.0;
  size_t j = 0;
  std::vector<bool> b_used(b.size(), false);
  for (const Spike& spike : a) {
    size_t k = j;
    while (k < b.size() && b[k].token != spike.token) ++k;
    if (k < b.size()) {
      total += std::fabs(static_cast<double>(spike.frame - b[k].frame));
      b_used[k] = true;
      ++result.matched;
      j = k + 1;
    } else {
      ++result.unmatched;
    }
  }
  for (bool used : b_used) {
    if (!used) ++result.unmatched;
  }
  result.mean_abs_offset = result.matched == 0 ? 0.0 : total / result.matched;
  return result;
}

InspectRecord InspectDump(const Model& model, const Utterance& utterance,
                          double tau) {
  NoGradGuard no_grad;
  EncodeResult res = model.EncodeSkip(utterance.features, tau);
  InspectRecord record;
  record.utt_id = utterance.id;
  record.tau = tau;
  record.blank_in = BlankPosteriors(res.p_in);
  record.blank_final = BlankPosteriors(res.p);
  record.skipped = res.skip_mask;
  record.argmax_in = ArgmaxPerFrame(res.p_in);
  record.argmax_final = ArgmaxPerFrame(res.p);
  return record;
}

void WriteInspectRecord(std::ostream& out, const InspectRecord& record) {
  nlohmann::json j;
  j["id"] = record.utt_id;
  j["tau"] = record.tau;
  j["blank_in"] = record.blank_in;
  j["blank_final"] = record.blank_final;
  j["skipped"] = record.skipped;
  j["argmax_in"] = record.argmax_in;
  j["argmax_final"] = record.argmax_final;
  out << j.dump() << "\n";
}

}  // namespace blankskip
