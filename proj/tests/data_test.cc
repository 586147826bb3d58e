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
#include <fstream>
#include <stdexcept>

#include "doctest.h"

#include "blankskip/data.h"
#include "blankskip/rng.h"

using namespace blankskip;

namespace {

TaskConfig SmallTask() {
  TaskConfig cfg;
  cfg.vocab_size = 4;
  cfg.input_dim = 6;
  cfg.prototype_len_min = 6;
  cfg.prototype_len_max = 8;
  cfg.silence_len_min = 3;
  cfg.silence_len_max = 8;
  cfg.tokens_min = 2;
  cfg.tokens_max = 5;
  cfg.noise_std = 0.05;
  cfg.seed = 99;
  return cfg;
}

std::string TempPath(const std::string& name) {
  return "/tmp/blankskip_data_test_" + name;
}

double FrobeniusDistance(const std::vector<std::vector<double>>& a,
                         const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) return 1e18;
  double total = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < a[i].size(); ++j) {
      const double d = a[i][j] - b[i][j];
      total += d * d;
    }
  }
  return std::sqrt(total);
}

}  // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("identical seeds generate identical utterances") {
  SyntheticTask task(SmallTask());
  Rng r1(5), r2(5);
  Utterance a = task.GenUtterance(&r1, "u0");
  Utterance b = task.GenUtterance(&r2, "u0");
  CHECK(a.labels == b.labels);
  CHECK(a.features == b.features);
}

TEST_CASE("zero noise leaves silence at zero and prototypes exact") {
  TaskConfig cfg = SmallTask();
  cfg.noise_std = 0.0;
  SyntheticTask task(cfg);
  Rng rng(2);
  Utterance utt = task.GenUtterance(&rng, "u0");
  REQUIRE(!utt.labels.empty());
  // locate the first prototype: skip leading all-zero rows
  size_t t = 0;
  auto is_zero = [&](size_t row) {
    for (double v : utt.features[row]) {
      if (v != 0.0) return false;
    }
    return true;
  };
  while (t < utt.features.size() && is_zero(t)) ++t;
  const auto& proto = task.prototypes()[utt.labels[0] - 1];
  REQUIRE(t + proto.size() <= utt.features.size());
  for (size_t i = 0; i < proto.size(); ++i) {
    CHECK(utt.features[t + i] == proto[i]);
  }
}

TEST_CASE("label counts stay in the configured range") {
  SyntheticTask task(SmallTask());
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Utterance utt = task.GenUtterance(&rng, "u");
    CHECK(utt.labels.size() >= 2);
    CHECK(utt.labels.size() <= 5);
    for (int id : utt.labels) {
      CHECK(id >= 1);
      CHECK(id <= 4);
    }
    CHECK(!utt.features.empty());
  }
}

TEST_CASE("noiseless segments classify to their prototype") {
  TaskConfig cfg = SmallTask();
  cfg.noise_std = 0.0;
  SyntheticTask task(cfg);
  Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Utterance utt = task.GenUtterance(&rng, "u");
    // walk the utterance, extracting each non-zero segment
    size_t t = 0;
    auto is_zero = [&](size_t row) {
      for (double v : utt.features[row]) {
        if (v != 0.0) return false;
      }
      return true;
    };
    size_t label_idx = 0;
    while (t < utt.features.size() && label_idx < utt.labels.size()) {
      if (is_zero(t)) {
        ++t;
        continue;
      }
      const size_t expected_len =
          task.prototypes()[utt.labels[label_idx] - 1].size();
      std::vector<std::vector<double>> segment(
          utt.features.begin() + t, utt.features.begin() + t + expected_len);
      // nearest prototype by Frobenius distance
      int best = -1;
      double best_dist = 1e18;
      for (size_t k = 0; k < task.prototypes().size(); ++k) {
        const double d = FrobeniusDistance(segment, task.prototypes()[k]);
        if (d < best_dist) {
          best_dist = d;
          best = static_cast<int>(k) + 1;
        }
      }
      CHECK(best == utt.labels[label_idx]);
      ++checked;
      t += expected_len;
      ++label_idx;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("silence dominates the frame budget") {
  TaskConfig cfg;  // library defaults
  SyntheticTask task(cfg);
  Rng rng(11);
  int64_t silence_frames = 0, total_frames = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Utterance utt = task.GenUtterance(&rng, "u");
    int64_t token_frames = 0;
    for (int id : utt.labels) {
      token_frames += static_cast<int64_t>(task.prototypes()[id - 1].size());
    }
    total_frames += static_cast<int64_t>(utt.features.size());
    silence_frames += static_cast<int64_t>(utt.features.size()) - token_frames;
  }
  const double fraction =
      static_cast<double>(silence_frames) / static_cast<double>(total_frames);
  CHECK(fraction >= 0.40);
}

TEST_CASE("dataset round trip preserves values") {
  SyntheticTask task(SmallTask());
  Rng rng(13);
  std::vector<Utterance> utts;
  for (int i = 0; i < 3; ++i) {
    utts.push_back(task.GenUtterance(&rng, "utt-" + std::to_string(i)));
  }
  const std::string path = TempPath("roundtrip.jsonl");
  WriteDataset(path, utts);
  auto loaded = ReadDataset(path);
  REQUIRE(loaded.size() == utts.size());
  for (size_t i = 0; i < utts.size(); ++i) {
    CHECK(loaded[i].id == utts[i].id);
    CHECK(loaded[i].labels == utts[i].labels);
    REQUIRE(loaded[i].features.size() == utts[i].features.size());
    for (size_t t = 0; t < utts[i].features.size(); ++t) {
      for (size_t j = 0; j < utts[i].features[t].size(); ++j) {
        CHECK(std::fabs(loaded[i].features[t][j] - utts[i].features[t][j]) <=
              1e-9);
      }
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("empty dataset round trips") {
  const std::string path = TempPath("empty.jsonl");
  WriteDataset(path, {});
  CHECK(ReadDataset(path).empty());
  std::remove(path.c_str());
}

TEST_CASE("a malformed line is reported with its number") {
  const std::string path = TempPath("broken.jsonl");
  {
    std::ofstream out(path);
    out << R"({"id":"u0","labels":[1],"features":[[0.0]]})" << "\n";
    out << R"({"id":"u1","labels":[1],"features":[[0.0)" << "\n";  // truncated
  }
  try {
    ReadDataset(path);
    FAIL("expected runtime_error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("task config validation") {
  TaskConfig cfg = SmallTask();
  cfg.prototype_len_min = 9;  // > max
  CHECK_THROWS_AS(SyntheticTask{cfg}, std::invalid_argument);
  cfg = SmallTask();
  cfg.noise_std = -0.1;
  CHECK_THROWS_AS(SyntheticTask{cfg}, std::invalid_argument);
}

TEST_SUITE_END();
