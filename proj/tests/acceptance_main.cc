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

// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 7-10 share three trained models (standard KL+MTL,
// MTL-only, factorized KL+MTL) over the default synthetic task.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "blankskip/bench.h"
#include "blankskip/ctc.h"
#include "blankskip/data.h"
#include "blankskip/decoder.h"
#include "blankskip/encoder.h"
#include "blankskip/rng.h"
#include "blankskip/tensor.h"
#include "blankskip/train.h"

using namespace blankskip;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Reporter {
  int failures = 0;

  void Run(int id, const std::string& name,
           const std::function<Outcome()>& fn) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("[%s] %2d. %-22s (%.1fs)%s%s\n",
                outcome.pass ? "PASS" : "FAIL", id, name.c_str(), seconds,
                outcome.detail.empty() ? "" : " -- ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
};

void Expect(Outcome* outcome, bool ok, const std::string& what) {
  if (!ok) {
    outcome->pass = false;
    if (!outcome->detail.empty()) outcome->detail += "; ";
    outcome->detail += what;
  }
}

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------- shared oracles ----------

double EnumeratedCtcLoss(const PosteriorGrid& grid, const LabelSeq& labels) {
  const int64_t frames = grid.frames();
  const int64_t width = grid.vocab_size + 1;
  double total = 0.0;
  std::vector<int> alignment(frames, 0);
  while (true) {
    if (Collapse(alignment) == labels) {
      double path = 1.0;
      for (int64_t t = 0; t < frames; ++t) {
        path *= std::exp(grid.LogProb(t, alignment[t]));
      }
      total += path;
    }
    int64_t pos = frames - 1;
    while (pos >= 0 && alignment[pos] == width - 1) alignment[pos--] = 0;
    if (pos < 0) break;
    ++alignment[pos];
  }
  return -std::log(total);
}

std::map<LabelSeq, double> EnumerateSequenceProbs(const PosteriorGrid& grid) {
  const int64_t frames = grid.frames();
  const int64_t width = grid.vocab_size + 1;
  std::map<LabelSeq, double> probs;
  std::vector<int> alignment(frames, 0);
  while (true) {
    double path = 1.0;
    for (int64_t t = 0; t < frames; ++t) {
      path *= std::exp(grid.LogProb(t, alignment[t]));
    }
    probs[Collapse(alignment)] += path;
    int64_t pos = frames - 1;
    while (pos >= 0 && alignment[pos] == width - 1) alignment[pos--] = 0;
    if (pos < 0) break;
    ++alignment[pos];
  }
  return probs;
}

PosteriorGrid RandomGrid(Rng* rng, int64_t frames, int64_t vocab,
                         double spread = 1.5) {
  NoGradGuard no_grad;
  return PosteriorGrid::FromTensor(
      LogSoftmax(Tensor::Randn({frames, vocab + 1}, rng, spread)));
}

LabelSeq RandomFeasibleLabels(Rng* rng, int64_t frames, int64_t max_u,
                              int64_t vocab) {
  while (true) {
    const int64_t u = rng->UniformInt(1, max_u);
    LabelSeq labels;
    for (int64_t i = 0; i < u; ++i) {
      labels.push_back(static_cast<int>(rng->UniformInt(1, vocab)));
    }
    int64_t need = static_cast<int64_t>(labels.size());
    for (size_t i = 1; i < labels.size(); ++i) {
      if (labels[i] == labels[i - 1]) ++need;
    }
    if (need <= frames) return labels;
  }
}

ModelConfig PipelineCheckConfig() {
  ModelConfig cfg;
  cfg.input_dim = 4;
  cfg.subsample_stride = 1;
  cfg.model_dim = 8;
  cfg.num_layers = 2;
  cfg.split_layer = 1;
  cfg.num_heads = 2;
  cfg.ffn_dim = 16;
  cfg.vocab_size = 3;
  cfg.use_conv_block = true;
  return cfg;
}

// ---------- trained-model fixtures for criteria 7-10 ----------

struct TrainedModels {
  TrainConfig config;  // the defaults
  std::vector<Utterance> heldout;
  TrainResult standard;    // KL + MTL
  TrainResult no_kl;       // MTL only
  TrainResult factorized;  // factorized heads, KL + MTL

  TrainedModels()
      : standard{Model(ModelConfig{})},
        no_kl{Model(ModelConfig{})},
        factorized{Model(ModelConfig{})} {
    SyntheticTask task(config.task);
    auto train_set = task.GenDataset(2000, config.task.seed + 1, "train-");
    heldout = task.GenDataset(200, config.task.seed + 2, "test-");

    std::cerr << "training standard KL+MTL model...\n";
    standard = Train(config, train_set, heldout, nullptr);

    TrainConfig no_kl_cfg = config;
    no_kl_cfg.use_kl = false;
    std::cerr << "training MTL-only model...\n";
    no_kl = Train(no_kl_cfg, train_set, heldout, nullptr);

    TrainConfig fact_cfg = config;
    fact_cfg.model.factorized_heads = true;
    std::cerr << "training factorized model...\n";
    factorized = Train(fact_cfg, train_set, heldout, nullptr);
  }
};

double SkippedTer(const Model& model, const std::vector<Utterance>& utts,
                  double tau) {
  NoGradGuard no_grad;
  DecodeOptions opts;
  opts.beam_width = 10;
  opts.tau_decode = tau;
  int64_t errors = 0, ref_len = 0;
  for (const auto& utt : utts) {
    EncodeResult res = model.EncodeSkip(utt.features, tau);
    auto nbest = PrefixBeamSearch(res.p, opts);
    errors += EditDistance(utt.labels, nbest.front().first).Total();
    ref_len += static_cast<int64_t>(utt.labels.size());
  }
  return static_cast<double>(errors) /
         static_cast<double>(std::max<int64_t>(1, ref_len));
}

// Aggregate intermediate/final spike alignment over a set.
double MeanSpikeOffset(const Model& model,
                       const std::vector<Utterance>& utts) {
  NoGradGuard no_grad;
  double total = 0.0;
  int64_t matches = 0;
  for (const auto& utt : utts) {
    EncodeResult res = model.EncodeFull(utt.features);
    SpikeOffsetResult r = SpikeOffset(res.p_in, res.p);
    total += r.mean_abs_offset * r.matched;
    matches += r.matched;
  }
  return matches == 0 ? 0.0 : total / static_cast<double>(matches);
}

}  // namespace

int main() {
  Reporter reporter;

  reporter.Run(1, "ctc-oracle", [] {
    Outcome outcome;
    Rng rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const int64_t frames = rng.UniformInt(1, 8);
      const int64_t vocab = rng.UniformInt(1, 4);
      PosteriorGrid grid = RandomGrid(&rng, frames, vocab);
      LabelSeq labels = RandomFeasibleLabels(&rng, frames, 4, vocab);
      const double expected = EnumeratedCtcLoss(grid, labels);
      const double got = CtcLossValue(grid, labels);
      worst = std::max(worst, std::fabs(got - expected));
    }
    Expect(&outcome, worst <= 1e-6, "max deviation " + Fmt(worst));
    outcome.detail = "max |loss - enumeration| = " + Fmt(worst);
    return outcome;
  });

  reporter.Run(2, "gradient-suite", [] {
    Outcome outcome;
    double worst = 0.0;
    auto note = [&](double err) { worst = std::max(worst, err); };
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(2000 + seed);
      auto scalarized = [&rng](const std::function<Tensor(const Tensor&)>& op) {
        Tensor probe;
        return [op, &rng, probe](const Tensor& x) mutable {
          Tensor y = op(x);
          if (!probe.defined()) probe = Tensor::Randn(y.shape(), &rng);
          return Sum(Mul(y, probe));
        };
      };
      auto check = [&](const std::function<Tensor(const Tensor&)>& op,
                       std::vector<int64_t> shape) {
        Tensor point = Tensor::Randn(shape, &rng);
        note(GradCheck(scalarized(op), point, 1e-4));
      };

      Tensor m34 = Tensor::Randn({3, 4}, &rng);
      Tensor m43 = Tensor::Randn({4, 3}, &rng);
      Tensor v4 = Tensor::Randn({4}, &rng);
      Tensor col3 = Tensor::Randn({3, 1}, &rng);
      Tensor gain = Tensor::Randn({4}, &rng, 0.5);
      Tensor bias = Tensor::Randn({4}, &rng, 0.5);
      Tensor conv_w = Tensor::Randn({4, 3}, &rng);
      Tensor conv_b = Tensor::Randn({4}, &rng);
      Tensor base54 = Tensor::Randn({5, 4}, &rng);

      check([&](const Tensor& x) { return MatMul(x, m43); }, {3, 4});
      check([&](const Tensor& x) { return MatMul(m34, x); }, {4, 3});
      check([](const Tensor& x) { return Transpose(x); }, {3, 4});
      check([&](const Tensor& x) { return Add(x, m34); }, {3, 4});
      check([&](const Tensor& x) { return Add(x, v4); }, {3, 4});
      check([&](const Tensor& x) { return Add(x, col3); }, {3, 4});
      check([&](const Tensor& x) { return Add(m34, x); }, {4});
      check([&](const Tensor& x) { return Sub(x, m34); }, {3, 4});
      check([&](const Tensor& x) { return Mul(x, m34); }, {3, 4});
      check([](const Tensor& x) { return Scale(x, -1.7); }, {3, 4});
      check([](const Tensor& x) { return Reshape(x, {4, 3}); }, {3, 4});
      check([&](const Tensor& x) { return Concat({x, m34}, 0); }, {2, 4});
      check([&](const Tensor& x) { return Concat({m43, x}, 1); }, {4, 2});
      check([](const Tensor& x) { return Slice(x, 0, 1, 2); }, {4, 3});
      check([](const Tensor& x) { return Slice(x, 1, 0, 2); }, {4, 3});
      check([](const Tensor& x) { return GatherRows(x, {2, 0, 2}); }, {4, 3});
      check([&](const Tensor& x) { return ScatterRows(x, {1, 3, 0}, m34); },
            {5, 4});
      check([&](const Tensor& x) { return ScatterRows(base54, {0, 4, 2}, x); },
            {3, 4});
      check([&](const Tensor& x) { return LayerNorm(x, gain, bias); }, {3, 4});
      check([](const Tensor& x) { return Softmax(x); }, {3, 4});
      check([](const Tensor& x) { return LogSoftmax(x); }, {3, 4});
      check([](const Tensor& x) { return Sigmoid(x); }, {3, 4});
      check([](const Tensor& x) { return Tanh(x); }, {3, 4});
      check([](const Tensor& x) { return Gelu(x); }, {3, 4});
      check([](const Tensor& x) { return Softplus(x); }, {3, 4});
      check([&](const Tensor& x) { return DepthwiseConv1d(x, conv_w, conv_b); },
            {6, 4});
      check([](const Tensor& x) { return Sum(x); }, {3, 4});
      check([](const Tensor& x) { return Mean(x); }, {3, 4});

      // one full conformer block
      ConformerBlock blk = ConformerBlock::Create(8, 2, 16, true, &rng);
      check([&](const Tensor& x) { return blk.Forward(x); }, {4, 8});

      // full encode_full pipeline at 4 frames, model_dim 8
      Model model(PipelineCheckConfig());
      model.InitParams(&rng);
      Tensor features = Tensor::Randn({4, 4}, &rng);
      Tensor probe_in, probe;
      {
        NoGradGuard no_grad;
        EncodeResult res = model.EncodeFull(features);
        probe_in = Tensor::Randn(res.logp_in.shape(), &rng);
        probe = Tensor::Randn(res.logp.shape(), &rng);
      }
      note(GradCheck(
          [&](const Tensor& x) {
            EncodeResult res = model.EncodeFull(x);
            return Add(Sum(Mul(res.logp, probe)),
                       Sum(Mul(res.logp_in, probe_in)));
          },
          features, 1e-4));

      // ctc loss
      {
        Tensor logits = Tensor::Randn({5, 4}, &rng);
        LabelSeq labels = RandomFeasibleLabels(&rng, 5, 3, 3);
        note(GradCheck(
            [&labels](const Tensor& lp) { return CtcLoss(lp, labels); },
            logits, 1e-4));
      }

      // kl frame loss
      {
        Tensor target = LogSoftmax(Tensor::Randn({3, 4}, &rng));
        Tensor point = LogSoftmax(Tensor::Randn({3, 4}, &rng));
        note(GradCheck(
            [&target](const Tensor& lp) { return KlFrameLoss(lp, target); },
            point, 1e-4));
      }

      // factorized head application, input and gate-vector sides
      {
        CtcHead head = CtcHead::Factorized(6, 4, &rng);
        Tensor h = Tensor::Randn({3, 6}, &rng);
        Tensor probe_f = Tensor::Randn({3, 5}, &rng);
        note(GradCheck(
            [&](const Tensor& x) { return Sum(Mul(head.Apply(x), probe_f)); },
            h, 1e-4));
        CtcHead by_gate = head;
        note(GradCheck(
            [&](const Tensor& gate_v) {
              CtcHead probe_head = by_gate;
              probe_head.v = gate_v;
              return Sum(Mul(probe_head.Apply(h), probe_f));
            },
            head.v, 1e-4));
      }
    }
    Expect(&outcome, worst < 1e-4, "max rel error " + Fmt(worst));
    outcome.detail = "max rel error = " + Fmt(worst);
    return outcome;
  });

  reporter.Run(3, "factorized-validity", [] {
    Outcome outcome;
    Rng rng(3001);
    double worst = 0.0;
    NoGradGuard no_grad;
    for (int trial = 0; trial < 100; ++trial) {
      const int64_t dim = rng.UniformInt(4, 12);
      const int64_t vocab = rng.UniformInt(2, 8);
      CtcHead head = CtcHead::Factorized(dim, vocab, &rng);
      Tensor h = Tensor::Randn({4, dim}, &rng, 2.0);
      PosteriorGrid grid = PosteriorGrid::FromTensor(head.Apply(h));
      for (int64_t t = 0; t < grid.frames(); ++t) {
        double sum = 0.0;
        for (int64_t k = 0; k <= vocab; ++k) sum += std::exp(grid.LogProb(t, k));
        worst = std::max(worst, std::fabs(sum - 1.0));
      }
    }
    Expect(&outcome, worst <= 1e-12, "max |row sum - 1| " + Fmt(worst));
    outcome.detail = "max |row sum - 1| = " + Fmt(worst);
    return outcome;
  });

  reporter.Run(4, "skip-mask-oracle", [] {
    Outcome outcome;
    Rng rng(4001);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int64_t frames = rng.UniformInt(1, 40);
      std::vector<double> blanks(frames);
      for (double& b : blanks) {
        b = rng.Uniform() < 0.5 ? rng.Uniform() : 0.985 + 0.015 * rng.Uniform();
      }
      const double tau = trial % 3 == 0 ? 0.99 : rng.Uniform();
      const int64_t window = rng.UniformInt(1, 5);
      SkipMask got = ComputeSkipMask(blanks, tau, window);
      SkipMask expected(frames, false);
      for (int64_t t = 0; t < frames; ++t) {
        bool skip = true;
        for (int64_t u = t - window + 1; u <= t; ++u) {
          const double p = u < 0 ? 1.0 : blanks[u];
          if (p <= tau) skip = false;
        }
        expected[t] = skip;
      }
      if (got != expected) ++mismatches;
    }
    Expect(&outcome, mismatches == 0,
           std::to_string(mismatches) + " mismatching masks");
    outcome.detail = "1000 random sequences, exact match";
    return outcome;
  });

  reporter.Run(5, "degenerate-tau", [] {
    Outcome outcome;
    Rng rng(5001);
    NoGradGuard no_grad;
    ModelConfig cfg = PipelineCheckConfig();
    Model model(cfg);
    model.InitParams(&rng);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      Tensor features = Tensor::Randn({6 + trial, 4}, &rng);
      EncodeResult full = model.EncodeFull(features);
      EncodeResult skip = model.EncodeSkip(features, 1.0);
      for (size_t i = 0; i < full.h.values().size(); ++i) {
        worst = std::max(worst,
                         std::fabs(full.h.values()[i] - skip.h.values()[i]));
      }
      for (size_t i = 0; i < full.logp.values().size(); ++i) {
        worst = std::max(
            worst, std::fabs(full.logp.values()[i] - skip.logp.values()[i]));
      }
    }
    Expect(&outcome, worst <= 1e-12, "encode mismatch " + Fmt(worst));

    bool beams_identical = true;
    for (int trial = 0; trial < 20; ++trial) {
      PosteriorGrid grid = RandomGrid(&rng, 6, 3);
      DecodeOptions with_tau;
      with_tau.beam_width = 5;
      with_tau.nbest = 5;
      with_tau.tau_decode = 1.0;
      DecodeOptions without;
      without.beam_width = 5;
      without.nbest = 5;
      without.enable_frame_skip = false;
      auto a = PrefixBeamSearch(grid, with_tau);
      auto b = PrefixBeamSearch(grid, without);
      if (a.size() != b.size()) beams_identical = false;
      for (size_t i = 0; beams_identical && i < a.size(); ++i) {
        if (a[i].first != b[i].first || a[i].second != b[i].second) {
          beams_identical = false;
        }
      }
    }
    Expect(&outcome, beams_identical, "tau=1.0 beam differs from unskipped");
    outcome.detail = "max encode delta = " + Fmt(worst) +
                     ", beam outputs bit-identical";
    return outcome;
  });

  reporter.Run(6, "beam-oracle", [] {
    Outcome outcome;
    Rng rng(6001);
    double worst = 0.0;
    int label_mismatches = 0;
    for (int trial = 0; trial < 50; ++trial) {
      PosteriorGrid grid = RandomGrid(&rng, 4, 2);
      auto oracle = EnumerateSequenceProbs(grid);
      LabelSeq best;
      double best_prob = -1.0;
      for (const auto& [labels, prob] : oracle) {
        if (prob > best_prob) {
          best_prob = prob;
          best = labels;
        }
      }
      DecodeOptions opts;
      opts.beam_width = 64;  // > 31 distinct prefixes
      auto out = PrefixBeamSearch(grid, opts);
      if (out.front().first != best) ++label_mismatches;
      worst = std::max(worst,
                       std::fabs(out.front().second - std::log(best_prob)));
    }
    Expect(&outcome, label_mismatches == 0,
           std::to_string(label_mismatches) + " top-label mismatches");
    Expect(&outcome, worst <= 1e-9, "log prob deviation " + Fmt(worst));
    outcome.detail = "max |log prob - oracle| = " + Fmt(worst);
    return outcome;
  });

  // ---- end-to-end criteria share the trained models ----
  TrainedModels models;

  reporter.Run(7, "end-to-end-baseline", [&] {
    Outcome outcome;
    const double ter = EvaluateGreedyTer(models.standard.model, models.heldout);
    Expect(&outcome, ter <= 0.05, "held-out TER " + Fmt(ter));
    outcome.detail = "held-out greedy TER = " + Fmt(ter) + " after " +
                     std::to_string(models.standard.steps) + " steps";
    return outcome;
  });

  reporter.Run(8, "end-to-end-skipping", [&] {
    Outcome outcome;
    BenchOptions opts;
    opts.beam_width = 10;
    opts.repetitions = 3;
    auto rows = RunBench(models.standard.model, models.heldout, {1.0, 0.99},
                         opts);
    const BenchRow& baseline = rows[0];
    const BenchRow& full_tau = rows[1];
    const BenchRow& skip = rows[2];
    Expect(&outcome, skip.skip_ratio >= 0.25,
           "skip ratio " + Fmt(skip.skip_ratio));
    Expect(&outcome, skip.ter - baseline.ter <= 0.02,
           "TER degradation " + Fmt(skip.ter - baseline.ter));
    const double s = 1.0 - static_cast<double>(skip.upper_frames_computed) /
                               static_cast<double>(skip.total_frames);
    const int64_t K = models.config.model.split_layer;
    const int64_t L = models.config.model.num_layers;
    const double identity = K + (1.0 - s) * (L - K);
    Expect(&outcome, std::fabs(skip.effective_layers - identity) <= 1e-12,
           "effective layers " + Fmt(skip.effective_layers) + " vs identity " +
               Fmt(identity));
    Expect(&outcome,
           skip.effective_layers == EffectiveLayers(s, K, L),
           "closed form differs from frame counts");
    Expect(&outcome, skip.wall_encoder_s < full_tau.wall_encoder_s,
           "encoder wall " + Fmt(skip.wall_encoder_s) + " !< " +
               Fmt(full_tau.wall_encoder_s));
    outcome.detail = "skip ratio = " + Fmt(skip.skip_ratio) +
                     ", TER " + Fmt(baseline.ter) + " -> " + Fmt(skip.ter) +
                     ", effective layers = " + Fmt(skip.effective_layers) +
                     ", encoder wall " + Fmt(full_tau.wall_encoder_s) + "s -> " +
                     Fmt(skip.wall_encoder_s) + "s";
    return outcome;
  });

  reporter.Run(9, "kl-alignment-effect", [&] {
    Outcome outcome;
    const double offset_kl =
        MeanSpikeOffset(models.standard.model, models.heldout);
    const double offset_plain =
        MeanSpikeOffset(models.no_kl.model, models.heldout);
    Expect(&outcome, offset_kl <= offset_plain,
           "spike offset " + Fmt(offset_kl) + " > " + Fmt(offset_plain));
    const double ter_kl = SkippedTer(models.standard.model, models.heldout,
                                     0.99);
    const double ter_plain = SkippedTer(models.no_kl.model, models.heldout,
                                        0.99);
    Expect(&outcome, ter_kl <= ter_plain,
           "skipped TER " + Fmt(ter_kl) + " > " + Fmt(ter_plain));
    outcome.detail = "spike offset KL=" + Fmt(offset_kl) + " vs plain=" +
                     Fmt(offset_plain) + "; skipped TER KL=" + Fmt(ter_kl) +
                     " vs plain=" + Fmt(ter_plain);
    return outcome;
  });

  reporter.Run(10, "factorized-parity", [&] {
    Outcome outcome;
    const double ter_fact =
        EvaluateGreedyTer(models.factorized.model, models.heldout);
    const double ter_std =
        EvaluateGreedyTer(models.standard.model, models.heldout);
    Expect(&outcome, std::fabs(ter_fact - ter_std) <= 0.02,
           "TER gap " + Fmt(std::fabs(ter_fact - ter_std)));

    // blank posterior of a factorized grid is exactly the sigmoid gate
    NoGradGuard no_grad;
    double worst = 0.0;
    const CtcHead& head = models.factorized.model.intermediate_head();
    for (int i = 0; i < 5; ++i) {
      EncodeResult res =
          models.factorized.model.EncodeFull(models.heldout[i].features);
      auto blanks = BlankPosteriors(res.p_in);
      Tensor gate = Sigmoid(
          Add(MatMul(res.h_in, Reshape(head.v, {head.v.dim(0), 1})),
              Reshape(head.bv, {1})));
      for (int64_t t = 0; t < res.p_in.frames(); ++t) {
        worst = std::max(worst, std::fabs(blanks[t] - gate.At(t, 0)));
      }
    }
    Expect(&outcome, worst <= 1e-12, "gate deviation " + Fmt(worst));
    outcome.detail = "TER factorized=" + Fmt(ter_fact) + " vs standard=" +
                     Fmt(ter_std) + "; max |blank - sigmoid| = " + Fmt(worst);
    return outcome;
  });

  if (reporter.failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", reporter.failures);
  return 1;
}
