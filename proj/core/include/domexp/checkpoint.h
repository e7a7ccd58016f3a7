// domexp/checkpoint.h

// Copyright 2026  The domexp Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DOMEXP_CHECKPOINT_H_
#define DOMEXP_CHECKPOINT_H_

// Binary container for models, Fisher diagonals and soft targets.
//
//   bytes 0-3   magic "DXPC"
//   u32         format version (kCheckpointVersion)
//   u32         payload kind (1 model, 2 fisher, 3 soft targets)
//   payload:
//     model:        u64 seed, u64 input_dim, u64 num_hidden, u64 hidden[...],
//                   u64 num_classes, u64 n, f64 params[n]  (flat layout order)
//     fisher:       f64 offset, u64 n, f64 values[n]
//     soft targets: f64 temperature, u64 rows, u64 cols, f64 probs[rows*cols]
//
// All integers and IEEE-754 doubles are little-endian, so save -> load is
// bit-exact.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "domexp/net.h"
#include "domexp/regularizers.h"

namespace domexp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ModelCheckpoint {
  ParamVector params;
  std::uint64_t seed = 0;
};

void write_model(std::ostream &out, const ParamVector &params, std::uint64_t seed);
ModelCheckpoint read_model(std::istream &in);
void save_model(const std::filesystem::path &path, const ParamVector &params,
                std::uint64_t seed);
ModelCheckpoint load_model(const std::filesystem::path &path);

void write_fisher(std::ostream &out, const FisherDiagonal &fisher);
FisherDiagonal read_fisher(std::istream &in);
void save_fisher(const std::filesystem::path &path, const FisherDiagonal &fisher);
FisherDiagonal load_fisher(const std::filesystem::path &path);

void write_soft_targets(std::ostream &out, const SoftTargets &targets);
SoftTargets read_soft_targets(std::istream &in);
void save_soft_targets(const std::filesystem::path &path, const SoftTargets &targets);
SoftTargets load_soft_targets(const std::filesystem::path &path);

}  // namespace domexp

#endif  // DOMEXP_CHECKPOINT_H_
