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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "blankskip/bench.h"
#include "blankskip/ctc.h"
#include "blankskip/data.h"
#include "blankskip/decoder.h"
#include "blankskip/encoder.h"
#include "blankskip/rng.h"
#include "blankskip/train.h"

namespace py = pybind11;
using namespace blankskip;

namespace {

std::vector<std::vector<double>> GridRows(const PosteriorGrid& grid) {
  std::vector<std::vector<double>> rows(grid.frames());
  for (int64_t t = 0; t < grid.frames(); ++t) {
    rows[t].resize(grid.vocab_size + 1);
    for (int64_t k = 0; k <= grid.vocab_size; ++k) {
      rows[t][k] = grid.LogProb(t, k);
    }
  }
  return rows;
}

PosteriorGrid GridFromRows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows[0].size() < 2) {
    throw std::invalid_argument("grid rows must be [T', V+1] with V >= 1");
  }
  PosteriorGrid grid;
  grid.vocab_size = static_cast<int64_t>(rows[0].size()) - 1;
  for (const auto& row : rows) {
    if (row.size() != rows[0].size()) {
      throw std::invalid_argument("ragged grid rows");
    }
    grid.log_probs.insert(grid.log_probs.end(), row.begin(), row.end());
  }
  return grid;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CTC blank-triggered dynamic layer skipping at desk scale";

  py::class_<TaskConfig>(m, "TaskConfig")
      .def(py::init<>())
      .def_readwrite("vocab_size", &TaskConfig::vocab_size)
      .def_readwrite("input_dim", &TaskConfig::input_dim)
      .def_readwrite("prototype_len_min", &TaskConfig::prototype_len_min)
      .def_readwrite("prototype_len_max", &TaskConfig::prototype_len_max)
      .def_readwrite("silence_len_min", &TaskConfig::silence_len_min)
      .def_readwrite("silence_len_max", &TaskConfig::silence_len_max)
      .def_readwrite("tokens_min", &TaskConfig::tokens_min)
      .def_readwrite("tokens_max", &TaskConfig::tokens_max)
      .def_readwrite("noise_std", &TaskConfig::noise_std)
      .def_readwrite("seed", &TaskConfig::seed);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("input_dim", &ModelConfig::input_dim)
      .def_readwrite("subsample_stride", &ModelConfig::subsample_stride)
      .def_readwrite("model_dim", &ModelConfig::model_dim)
      .def_readwrite("num_layers", &ModelConfig::num_layers)
      .def_readwrite("split_layer", &ModelConfig::split_layer)
      .def_readwrite("num_heads", &ModelConfig::num_heads)
      .def_readwrite("ffn_dim", &ModelConfig::ffn_dim)
      .def_readwrite("vocab_size", &ModelConfig::vocab_size)
      .def_readwrite("use_conv_block", &ModelConfig::use_conv_block)
      .def_readwrite("factorized_heads", &ModelConfig::factorized_heads)
      .def_readwrite("tau_skip", &ModelConfig::tau_skip)
      .def_readwrite("window_len", &ModelConfig::window_len);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("model", &TrainConfig::model)
      .def_readwrite("task", &TrainConfig::task)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lambda_kl", &TrainConfig::lambda_kl)
      .def_readwrite("use_kl", &TrainConfig::use_kl)
      .def_readwrite("use_mtl", &TrainConfig::use_mtl)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("adam_eps", &TrainConfig::adam_eps)
      .def_readwrite("clip_norm", &TrainConfig::clip_norm)
      .def_readwrite("warmup_steps", &TrainConfig::warmup_steps)
      .def_readwrite("early_stop_ter", &TrainConfig::early_stop_ter)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<DecodeOptions>(m, "DecodeOptions")
      .def(py::init<>())
      .def_readwrite("beam_width", &DecodeOptions::beam_width)
      .def_readwrite("tau_decode", &DecodeOptions::tau_decode)
      .def_readwrite("nbest", &DecodeOptions::nbest)
      .def_readwrite("enable_frame_skip", &DecodeOptions::enable_frame_skip)
      .def_readwrite("skip_as_noop", &DecodeOptions::skip_as_noop);

  py::class_<Utterance>(m, "Utterance")
      .def(py::init<>())
      .def_readwrite("id", &Utterance::id)
      .def_readwrite("features", &Utterance::features)
      .def_readwrite("labels", &Utterance::labels);

  py::class_<PosteriorGrid>(m, "PosteriorGrid")
      .def_property_readonly("frames", &PosteriorGrid::frames)
      .def_readonly("vocab_size", &PosteriorGrid::vocab_size)
      .def("log_probs", &GridRows)
      .def_static("from_log_probs", &GridFromRows);

  py::class_<EncodeResult>(m, "EncodeResult")
      .def_readonly("p_in", &EncodeResult::p_in)
      .def_readonly("p", &EncodeResult::p)
      .def_readonly("skip_mask", &EncodeResult::skip_mask)
      .def_readonly("upper_frames_computed",
                    &EncodeResult::upper_frames_computed);

  py::class_<Model>(m, "Model")
      .def(py::init([](const ModelConfig& config, uint64_t seed) {
             Model model(config);
             Rng rng(seed);
             model.InitParams(&rng);
             return model;
           }),
           py::arg("config"), py::arg("seed") = 1)
      .def_property_readonly("config", &Model::config)
      .def("encode_full",
           [](const Model& model,
              const std::vector<std::vector<double>>& features) {
             NoGradGuard no_grad;
             return model.EncodeFull(features);
           })
      .def("encode_skip",
           [](const Model& model,
              const std::vector<std::vector<double>>& features, double tau) {
             NoGradGuard no_grad;
             return model.EncodeSkip(features, tau);
           },
           py::arg("features"), py::arg("tau"));

  py::class_<SyntheticTask>(m, "SyntheticTask")
      .def(py::init<TaskConfig>())
      .def("gen_dataset", &SyntheticTask::GenDataset, py::arg("count"),
           py::arg("stream_seed"), py::arg("id_prefix") = "utt-");

  py::class_<LossTerms>(m, "LossTerms")
      .def_readonly("ctc_final", &LossTerms::ctc_final)
      .def_readonly("ctc_in", &LossTerms::ctc_in)
      .def_readonly("kl", &LossTerms::kl)
      .def_readonly("total", &LossTerms::total);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("steps", &TrainResult::steps)
      .def_readonly("loss_history", &TrainResult::loss_history)
      .def_readonly("heldout_ter_history", &TrainResult::heldout_ter_history);

  py::class_<EditCounts>(m, "EditCounts")
      .def_readonly("substitutions", &EditCounts::substitutions)
      .def_readonly("insertions", &EditCounts::insertions)
      .def_readonly("deletions", &EditCounts::deletions)
      .def("total", &EditCounts::Total);

  py::class_<BenchRow>(m, "BenchRow")
      .def_readonly("tau", &BenchRow::tau)
      .def_readonly("skip_ratio", &BenchRow::skip_ratio)
      .def_readonly("effective_layers", &BenchRow::effective_layers)
      .def_readonly("ter", &BenchRow::ter)
      .def_readonly("wall_encoder_s", &BenchRow::wall_encoder_s)
      .def_readonly("wall_decode_s", &BenchRow::wall_decode_s)
      .def_readonly("rtf", &BenchRow::rtf)
      .def_readonly("upper_frames_computed", &BenchRow::upper_frames_computed)
      .def_readonly("total_frames", &BenchRow::total_frames);

  py::class_<SpikeOffsetResult>(m, "SpikeOffsetResult")
      .def_readonly("mean_abs_offset", &SpikeOffsetResult::mean_abs_offset)
      .def_readonly("matched", &SpikeOffsetResult::matched)
      .def_readonly("unmatched", &SpikeOffsetResult::unmatched);

  m.def("train",
        [](const TrainConfig& config, const std::vector<Utterance>& train_set,
           const std::vector<Utterance>& heldout) {
          return Train(config, train_set, heldout, nullptr);
        },
        py::arg("config"), py::arg("train_set"),
        py::arg("heldout") = std::vector<Utterance>{});
  m.def("evaluate_greedy_ter", &EvaluateGreedyTer);
  m.def("save_checkpoint", &SaveCheckpoint, py::arg("path"), py::arg("model"),
        py::arg("steps") = 0,
        py::arg("loss_history") = std::vector<double>{});
  m.def("load_checkpoint",
        [](const std::string& path) { return LoadCheckpoint(path).model; });
  m.def("write_dataset", &WriteDataset);
  m.def("read_dataset", &ReadDataset);

  m.def("collapse", &Collapse);
  m.def("greedy_decode", &GreedyDecode);
  m.def("blank_posteriors", &BlankPosteriors);
  m.def("ctc_loss",
        [](const PosteriorGrid& grid, const LabelSeq& labels) {
          return CtcLossValue(grid, labels);
        });
  m.def("kl_frame_loss",
        [](const PosteriorGrid& p_in, const PosteriorGrid& p_final) {
          return KlFrameLossValue(p_in, p_final);
        });
  m.def("compute_skip_mask", &ComputeSkipMask, py::arg("blank_probs"),
        py::arg("tau"), py::arg("window") = 3);
  m.def("prefix_beam_search", &PrefixBeamSearch, py::arg("grid"),
        py::arg("options"));
  m.def("edit_distance", &EditDistance);
  m.def("token_error_rate", &TokenErrorRate);
  m.def("effective_layers", &EffectiveLayers, py::arg("skip_ratio"),
        py::arg("split_layer"), py::arg("num_layers"));
  m.def("spike_offset", &SpikeOffset);
  m.def("run_bench",
        [](const Model& model, const std::vector<Utterance>& utterances,
           const std::vector<double>& tau_list, int beam_width,
           double frame_period_s, int repetitions) {
          BenchOptions opts;
          opts.beam_width = beam_width;
          opts.frame_period_s = frame_period_s;
          opts.repetitions = repetitions;
          return RunBench(model, utterances, tau_list, opts);
        },
        py::arg("model"), py::arg("utterances"), py::arg("tau_list"),
        py::arg("beam_width") = 10, py::arg("frame_period_s") = 0.01,
        py::arg("repetitions") = 3);
  m.def("bench_csv",
        [](const std::vector<BenchRow>& rows, double frame_period_s) {
          std::ostringstream out;
          WriteBenchCsv(out, rows, frame_period_s);
          return out.str();
        },
        py::arg("rows"), py::arg("frame_period_s") = 0.01);
  m.def("logsumexp", &LogSumExp);
}
