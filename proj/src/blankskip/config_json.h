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

#ifndef BLANKSKIP_CONFIG_JSON_H_
#define BLANKSKIP_CONFIG_JSON_H_

#include <cstdint>
#include <string>

#include "blankskip/decoder.h"
#include "blankskip/train.h"

namespace blankskip {

struct PipelineConfig {
  TrainConfig train;  // includes model and task
  DecodeOptions decode;
};

// Applies a JSON config document with top-level sections "model", "task",
// "train" and "decode" (all optional) over the given defaults. Unknown keys
// at any level are rejected.
void ApplyJsonConfig(const std::string& json_text, PipelineConfig* config);

// Loads and applies a config file; the error names the path when missing.
void ApplyConfigFile(const std::string& path, PipelineConfig* config);

// FNV-1a hash of the canonical serialized config, as fixed-width hex.
std::string ConfigHash(const PipelineConfig& config);

// Canonical JSON form of the full pipeline config.
std::string DumpConfig(const PipelineConfig& config);

}  // namespace blankskip

#endif  // BLANKSKIP_CONFIG_JSON_H_
