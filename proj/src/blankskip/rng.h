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

#ifndef BLANKSKIP_RNG_H_
#define BLANKSKIP_RNG_H_

#include <cstdint>
#include <random>

namespace blankskip {

// Deterministic pseudo-random stream. Identical seeds give identical streams
// within one build; bit equality across standard library implementations is
// not guaranteed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t seed() const { return seed_; }

  // [0, 1)
  double Uniform() { return uniform_(gen_); }

  // standard normal
  double Normal() { return normal_(gen_); }

  // inclusive on both ends
  int64_t UniformInt(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(gen_);
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace blankskip

#endif  // BLANKSKIP_RNG_H_
