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

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "doctest.h"

#include "blankskip/bench.h"
#include "blankskip/rng.h"
#include "blankskip/train.h"

using namespace blankskip;

namespace {

PosteriorGrid GridFromProbs(const std::vector<std::vector<double>>& rows) {
  PosteriorGrid grid;
  grid.vocab_size = static_cast<int64_t>(rows[0].size()) - 1;
  for (const auto& row : rows) {
    for (double p : row) grid.log_probs.push_back(std::log(p));
  }
  return grid;
}

// Small trained-ish setup shared by the run_bench cases.
struct BenchFixture {
  TrainConfig cfg;
  std::vector<Utterance> data;
  TrainResult trained;

  BenchFixture() : trained{Model(ModelConfig{})} {
    cfg.model.input_dim = 6;
    cfg.model.subsample_stride = 2;
    cfg.model.model_dim = 16;
    cfg.model.num_layers = 3;
    cfg.model.split_layer = 2;
    cfg.model.num_heads = 2;
    cfg.model.ffn_dim = 32;
    cfg.model.vocab_size = 3;
    cfg.task.vocab_size = 3;
    cfg.task.input_dim = 6;
    cfg.task.prototype_len_min = 5;
    cfg.task.prototype_len_max = 7;
    cfg.task.silence_len_min = 4;
    cfg.task.silence_len_max = 10;
    cfg.task.tokens_min = 2;
    cfg.task.tokens_max = 4;
    cfg.task.seed = 31;
    cfg.epochs = 8;
    cfg.batch_size = 4;
    cfg.early_stop_ter = 0.0;
    SyntheticTask task(cfg.task);
    auto train_set = task.GenDataset(40, 32, "train-");
    data = task.GenDataset(12, 33, "test-");
    trained = Train(cfg, train_set, {}, nullptr);
  }
};

}  // namespace

TEST_SUITE_BEGIN("bench");

TEST_CASE("effective layers closed form") {
  CHECK(EffectiveLayers(0.33, 8, 12) == doctest::Approx(10.68));
  CHECK(EffectiveLayers(0.0, 4, 6) == doctest::Approx(6.0));
  CHECK(EffectiveLayers(1.0, 4, 6) == doctest::Approx(4.0));
  CHECK_THROWS_AS(EffectiveLayers(1.5, 4, 6), std::invalid_argument);
}

TEST_CASE("bench rows satisfy the accounting identity and baseline ties") {
  BenchFixture fx;
  BenchOptions opts;
  opts.beam_width = 4;
  opts.repetitions = 1;
  auto rows = RunBench(fx.trained.model, fx.data, {1.0, 0.99, 0.9}, opts);
  REQUIRE(rows.size() == 4);
  CHECK(!rows[0].tau.has_value());

  const int64_t K = fx.cfg.model.split_layer;
  const int64_t L = fx.cfg.model.num_layers;
  for (const auto& row : rows) {
    const double s =
        1.0 - static_cast<double>(row.upper_frames_computed) /
                  static_cast<double>(row.total_frames);
    CHECK(row.skip_ratio == doctest::Approx(s).epsilon(1e-15));
    CHECK(row.effective_layers ==
          doctest::Approx(s * K + (1.0 - s) * L).epsilon(1e-15));
    CHECK(row.skip_ratio >= 0.0);
    CHECK(row.skip_ratio <= 1.0);
  }
  // tau = 1.0 row matches the baseline exactly
  CHECK(rows[1].tau.value() == 1.0);
  CHECK(rows[1].ter == rows[0].ter);
  CHECK(rows[1].skip_ratio == 0.0);
  CHECK(rows[1].effective_layers == doctest::Approx(L));

  // skip ratio never rises as tau rises
  CHECK(rows[1].skip_ratio <= rows[2].skip_ratio + 1e-15);
  CHECK(rows[2].skip_ratio <= rows[3].skip_ratio + 1e-15);
}

TEST_CASE("bench rows are deterministic outside the wall-clock fields") {
  BenchFixture fx;
  BenchOptions opts;
  opts.beam_width = 4;
  opts.repetitions = 1;
  auto a = RunBench(fx.trained.model, fx.data, {0.99}, opts);
  auto b = RunBench(fx.trained.model, fx.data, {0.99}, opts);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].skip_ratio == b[i].skip_ratio);
    CHECK(a[i].effective_layers == b[i].effective_layers);
    CHECK(a[i].ter == b[i].ter);
    CHECK(a[i].upper_frames_computed == b[i].upper_frames_computed);
    CHECK(a[i].total_frames == b[i].total_frames);
  }
}

TEST_CASE("bench rejects an empty dataset") {
  BenchFixture fx;
  BenchOptions opts;
  CHECK_THROWS_AS(RunBench(fx.trained.model, {}, {1.0}, opts),
                  std::invalid_argument);
}

TEST_CASE("csv report carries the exact header and parses back") {
  std::vector<BenchRow> rows(2);
  rows[0].tau = std::nullopt;
  rows[0].skip_ratio = 0.0;
  rows[0].effective_layers = 6.0;
  rows[0].ter = 0.0123456;
  rows[1].tau = 0.99;
  rows[1].skip_ratio = 0.4321;
  rows[1].effective_layers = 5.13580;
  rows[1].ter = 0.0123456;
  rows[1].upper_frames_computed = 123;
  rows[1].total_frames = 456;
  std::ostringstream out;
  WriteBenchCsv(out, rows, 0.01);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "# frame_period_s=0.01");
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "tau,skip_ratio,effective_layers,ter,wall_encoder_s,wall_decode_s,"
        "rtf,upper_frames_computed,total_frames");
  REQUIRE(std::getline(in, line));
  CHECK(line.rfind(",0,6,", 0) == 0);  // baseline row has an empty tau cell
  REQUIRE(std::getline(in, line));
  CHECK(line.rfind("0.99,", 0) == 0);
}

TEST_CASE("csv values survive a six-significant-digit round trip") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const double value = rng.Uniform() * std::pow(10.0, trial % 5 - 2);
    char before[32], after[32];
    std::snprintf(before, sizeof(before), "%.6g", value);
    std::snprintf(after, sizeof(after), "%.6g",
                  std::stod(FormatCsvValue(value)));
    CHECK(std::string(before) == after);
  }
}

TEST_CASE("spike offset of identical grids is zero") {
  PosteriorGrid grid = GridFromProbs({{0.9, 0.05, 0.05},
                                      {0.1, 0.8, 0.1},
                                      {0.9, 0.05, 0.05},
                                      {0.2, 0.1, 0.7}});
  SpikeOffsetResult res = SpikeOffset(grid, grid);
  CHECK(res.mean_abs_offset == 0.0);
  CHECK(res.matched == 2);
  CHECK(res.unmatched == 0);
}

TEST_CASE("a uniform one-frame lag yields offset one") {
  PosteriorGrid late = GridFromProbs({{0.9, 0.05, 0.05},
                                      {0.1, 0.8, 0.1},
                                      {0.9, 0.05, 0.05},
                                      {0.9, 0.05, 0.05},
                                      {0.2, 0.1, 0.7}});
  PosteriorGrid early = GridFromProbs({{0.1, 0.8, 0.1},
                                       {0.9, 0.05, 0.05},
                                       {0.9, 0.05, 0.05},
                                       {0.2, 0.1, 0.7},
                                       {0.9, 0.05, 0.05}});
  SpikeOffsetResult res = SpikeOffset(late, early);
  CHECK(res.mean_abs_offset == doctest::Approx(1.0));
  CHECK(res.matched == 2);
  CHECK(res.unmatched == 0);
}

TEST_CASE("unmatched spikes are counted separately") {
  PosteriorGrid two = GridFromProbs({{0.1, 0.8, 0.1},
                                     {0.9, 0.05, 0.05},
                                     {0.2, 0.1, 0.7}});
  PosteriorGrid one = GridFromProbs({{0.1, 0.8, 0.1},
                                     {0.9, 0.05, 0.05},
                                     {0.9, 0.05, 0.05}});
  SpikeOffsetResult res = SpikeOffset(two, one);
  CHECK(res.matched == 1);
  CHECK(res.unmatched == 1);
}

TEST_CASE("inspect dump fields all cover T prime and obey the window rule") {
  BenchFixture fx;
  InspectRecord record = InspectDump(fx.trained.model, fx.data[0], 0.99);
  const size_t frames = record.blank_in.size();
  CHECK(frames > 0);
  CHECK(record.blank_final.size() == frames);
  CHECK(record.skipped.size() == frames);
  CHECK(record.argmax_in.size() == frames);
  CHECK(record.argmax_final.size() == frames);
  SkipMask expected = ComputeSkipMask(record.blank_in, 0.99,
                                      fx.cfg.model.window_len);
  CHECK(record.skipped == expected);

  std::ostringstream out;
  WriteInspectRecord(out, record);
  CHECK(out.str().find("\"id\"") != std::string::npos);
}

TEST_SUITE_END();
