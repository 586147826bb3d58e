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

// Command-line front end: data generation, training, decoding, benchmarking
// and per-utterance inspection over one shared config scheme. Exit codes:
// 0 success, 1 usage error, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "blankskip/bench.h"
#include "blankskip/config_json.h"
#include "blankskip/data.h"
#include "blankskip/decoder.h"
#include "blankskip/encoder.h"
#include "blankskip/train.h"

namespace {

namespace fs = std::filesystem;
using namespace blankskip;

// --config is applied before the flag definitions so that flags override
// file values; scan for it ahead of full parsing.
std::string PreScanConfigPath(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return "";
}

std::vector<double> ParseTauList(const std::string& text) {
  std::vector<double> taus;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    taus.push_back(std::stod(item));
  }
  if (taus.empty()) throw std::invalid_argument("bench: empty tau list");
  return taus;
}

void EnsureDir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

int RunGenData(const PipelineConfig& config, const std::string& out_dir,
               int64_t train_count, int64_t test_count) {
  EnsureDir(out_dir);
  SyntheticTask task(config.train.task);
  const uint64_t seed = config.train.task.seed;
  auto train_set = task.GenDataset(train_count, seed + 1, "train-");
  auto test_set = task.GenDataset(test_count, seed + 2, "test-");
  WriteDataset((fs::path(out_dir) / "train.jsonl").string(), train_set);
  WriteDataset((fs::path(out_dir) / "test.jsonl").string(), test_set);

  nlohmann::json manifest;
  manifest["seed"] = seed;
  manifest["config_hash"] = ConfigHash(config);
  manifest["train_count"] = train_count;
  manifest["test_count"] = test_count;
  manifest["config"] = nlohmann::json::parse(DumpConfig(config));
  std::ofstream mout((fs::path(out_dir) / "manifest.json").string());
  mout << manifest.dump(2) << "\n";
  std::cout << "wrote " << train_count << " train / " << test_count
            << " test utterances to " << out_dir << " (config hash "
            << manifest["config_hash"].get<std::string>() << ")\n";
  return 0;
}

int RunTrain(const PipelineConfig& config, const std::string& data_dir,
             const std::string& out_dir) {
  EnsureDir(out_dir);
  auto train_set = ReadDataset((fs::path(data_dir) / "train.jsonl").string());
  auto test_set = ReadDataset((fs::path(data_dir) / "test.jsonl").string());
  std::ofstream log((fs::path(out_dir) / "train_log.jsonl").string());
  TrainResult result = Train(config.train, train_set, test_set, &log);
  SaveCheckpoint((fs::path(out_dir) / "checkpoint.json").string(),
                 result.model, result.steps, result.loss_history);
  std::cout << "trained " << result.steps << " steps; held-out TER "
            << (result.heldout_ter_history.empty()
                    ? 0.0
                    : result.heldout_ter_history.back())
            << "; checkpoint in " << out_dir << "\n";
  return 0;
}

int RunDecode(const PipelineConfig& config, const std::string& checkpoint,
              const std::string& data_path, double tau,
              const std::string& out_path) {
  LoadedCheckpoint loaded = LoadCheckpoint(checkpoint);
  auto utterances = ReadDataset(data_path);
  DecodeOptions opts = config.decode;
  opts.tau_decode = tau;

  std::ofstream out;
  const bool to_file = !out_path.empty();
  if (to_file) {
    out.open(out_path);
    if (!out) throw std::runtime_error("decode: cannot write " + out_path);
  }
  NoGradGuard no_grad;
  int64_t errors = 0, ref_len = 0;
  for (const auto& utt : utterances) {
    EncodeResult res = loaded.model.EncodeSkip(utt.features, tau);
    auto nbest = PrefixBeamSearch(res.p, opts);
    errors += EditDistance(utt.labels, nbest.front().first).Total();
    ref_len += static_cast<int64_t>(utt.labels.size());
    nlohmann::json record;
    record["id"] = utt.id;
    record["ref"] = utt.labels;
    nlohmann::json hyps = nlohmann::json::array();
    for (const auto& [labels, log_prob] : nbest) {
      hyps.push_back({{"labels", labels}, {"log_prob", log_prob}});
    }
    record["nbest"] = std::move(hyps);
    (to_file ? out : std::cout) << record.dump() << "\n";
  }
  const double ter = static_cast<double>(errors) /
                     static_cast<double>(std::max<int64_t>(1, ref_len));
  std::cout << "TER " << ter << " (" << errors << " errors / " << ref_len
            << " tokens) at tau " << tau << "\n";
  return 0;
}

int RunBenchCmd(const PipelineConfig& config, const std::string& checkpoint,
                const std::string& data_path, const std::string& tau_list_text,
                const std::string& out_path, double frame_period,
                int repetitions) {
  LoadedCheckpoint loaded = LoadCheckpoint(checkpoint);
  auto utterances = ReadDataset(data_path);
  BenchOptions opts;
  opts.beam_width = config.decode.beam_width;
  opts.frame_period_s = frame_period;
  opts.repetitions = repetitions;
  auto rows = RunBench(loaded.model, utterances, ParseTauList(tau_list_text),
                       opts);
  if (out_path.empty()) {
    WriteBenchCsv(std::cout, rows, opts.frame_period_s);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("bench: cannot write " + out_path);
    WriteBenchCsv(out, rows, opts.frame_period_s);
    std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  }
  return 0;
}

int RunInspect(const std::string& checkpoint, const std::string& data_path,
               const std::string& utt_id, double tau,
               const std::string& out_path) {
  LoadedCheckpoint loaded = LoadCheckpoint(checkpoint);
  auto utterances = ReadDataset(data_path);
  const Utterance* target = nullptr;
  for (const auto& utt : utterances) {
    if (utt.id == utt_id) {
      target = &utt;
      break;
    }
  }
  if (!target) {
    std::string available;
    for (const auto& utt : utterances) available += " " + utt.id;
    throw std::runtime_error("inspect: unknown utterance id '" + utt_id +
                             "'; available:" + available);
  }
  InspectRecord record = InspectDump(loaded.model, *target, tau);
  if (out_path.empty()) {
    WriteInspectRecord(std::cout, record);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("inspect: cannot write " + out_path);
    WriteInspectRecord(out, record);
    std::cout << "wrote dump for " << utt_id << " to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CTC blank-triggered dynamic layer skipping at desk scale"};
  app.require_subcommand(1);

  PipelineConfig config;
  const std::string config_path = PreScanConfigPath(argc, argv);
  if (!config_path.empty()) {
    try {
      ApplyConfigFile(config_path, &config);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  std::string config_flag;  // consumed by the pre-scan above
  app.add_option("--config", config_flag, "JSON config file");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate synthetic datasets");
  std::string gen_out = "data";
  int64_t train_count = 2000, test_count = 200;
  uint64_t gen_seed = config.train.task.seed;
  gen->add_option("--out", gen_out, "Output directory")
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "Task seed")->capture_default_str();
  gen->add_option("--train-count", train_count, "Training utterances")
      ->capture_default_str();
  gen->add_option("--test-count", test_count, "Held-out utterances")
      ->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a model");
  std::string train_data = "data", train_out = "run";
  train->add_option("--data", train_data, "Dataset directory")
      ->capture_default_str();
  train->add_option("--out", train_out, "Output directory")
      ->capture_default_str();
  train->add_option("--epochs", config.train.epochs, "Max epochs")
      ->capture_default_str();
  train->add_option("--batch-size", config.train.batch_size, "Batch size")
      ->capture_default_str();
  train->add_option("--learning-rate", config.train.learning_rate,
                    "Adam learning rate")
      ->capture_default_str();
  train->add_option("--lambda-kl", config.train.lambda_kl,
                    "Weight of the KL distillation term")
      ->capture_default_str();
  train->add_flag("--use-kl,!--no-use-kl", config.train.use_kl,
                  "Distill the intermediate head toward the final head")
      ->capture_default_str();
  train->add_flag("--use-mtl,!--no-use-mtl", config.train.use_mtl,
                  "Add the intermediate CTC loss term")
      ->capture_default_str();
  train->add_flag("--factorized-heads,!--no-factorized-heads",
                  config.train.model.factorized_heads,
                  "Blank-gate factorized output heads")
      ->capture_default_str();
  train->add_option("--seed", config.train.seed, "Training seed")
      ->capture_default_str();
  train->add_option("--early-stop-ter", config.train.early_stop_ter,
                    "Stop once held-out TER reaches this value (0 disables)")
      ->capture_default_str();

  // decode
  auto* decode = app.add_subcommand("decode", "Decode a dataset");
  std::string dec_checkpoint, dec_data, dec_out;
  double dec_tau = config.decode.tau_decode;
  decode->add_option("--checkpoint", dec_checkpoint, "Checkpoint file")
      ->required();
  decode->add_option("--data", dec_data, "Dataset file")->required();
  decode->add_option("--tau", dec_tau,
                     "Blank threshold for layer and frame skipping")
      ->capture_default_str();
  decode->add_option("--beam", config.decode.beam_width, "Beam width")
      ->capture_default_str();
  decode->add_option("--nbest", config.decode.nbest, "Hypotheses per utterance")
      ->capture_default_str();
  decode->add_option("--out", dec_out, "Hypotheses file (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Sweep tau and report metrics");
  std::string bench_checkpoint, bench_data, bench_out;
  std::string tau_list = "1.0,0.99,0.95";
  double frame_period = 0.01;
  int repetitions = 3;
  bench->add_option("--checkpoint", bench_checkpoint, "Checkpoint file")
      ->required();
  bench->add_option("--data", bench_data, "Dataset file")->required();
  bench->add_option("--tau-list", tau_list, "Comma-separated thresholds")
      ->capture_default_str();
  bench->add_option("--out", bench_out, "CSV report path (default stdout)");
  bench->add_option("--frame-period", frame_period,
                    "Synthetic seconds per input frame")
      ->capture_default_str();
  bench->add_option("--repetitions", repetitions,
                    "Timing repetitions (median)")
      ->capture_default_str();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Dump per-frame gating state");
  std::string ins_checkpoint, ins_data, ins_utt, ins_out;
  double ins_tau = 0.99;
  inspect->add_option("--checkpoint", ins_checkpoint, "Checkpoint file")
      ->required();
  inspect->add_option("--data", ins_data, "Dataset file")->required();
  inspect->add_option("--utt-id", ins_utt, "Utterance id")->required();
  inspect->add_option("--tau", ins_tau, "Blank threshold")
      ->capture_default_str();
  inspect->add_option("--out", ins_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      config.train.task.seed = gen_seed;
      return RunGenData(config, gen_out, train_count, test_count);
    }
    if (train->parsed()) return RunTrain(config, train_data, train_out);
    if (decode->parsed())
      return RunDecode(config, dec_checkpoint, dec_data, dec_tau, dec_out);
    if (bench->parsed())
      return RunBenchCmd(config, bench_checkpoint, bench_data, tau_list,
                         bench_out, frame_period, repetitions);
    if (inspect->parsed())
      return RunInspect(ins_checkpoint, ins_data, ins_utt, ins_tau, ins_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
