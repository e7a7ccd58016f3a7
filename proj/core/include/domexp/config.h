// domexp/config.h

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

#ifndef DOMEXP_CONFIG_H_
#define DOMEXP_CONFIG_H_

// Experiment configuration and its INI-style text form:
//
//   seed = 1
//   output_dir = runs
//   methods = fine-tune, wca, ewc, skld, skld-ewc
//
//   [data]
//   source = synthetic            ; or "files"
//   split = 0.6666666666666666, 0.16666666666666666, 0.16666666666666666
//
//   [domain.original]             ; DomainSpec fields (seed comes from `seed`)
//   noise_std = 1.0
//   [domain.new]
//   domain_shift = 1.0
//
//   [files]                       ; used when source = files
//   original_train = a.csv        ; ...original_dev, original_eval, new_*
//   stack_context = 5             ; optional frame stacking
//
//   [net]             hidden_dims = 64, 64
//   [train.original]  learning_rate, batch_size, max_epochs, early_stop_patience
//   [train.expansion] learning_rate, batch_size, fixed_epochs
//   [grid]            lambda_w, lambda_e, lambda_s, temperature (lists)
//   [regularizers]    fisher_offset, distill_t_squared
//   [forgetting]      lambda_s, temperature (optional; tuned on dev if unset)
//
// Unknown sections or keys are a ConfigError.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "domexp/datagen.h"
#include "domexp/trainer.h"

namespace domexp {

struct GridSpec {
  std::vector<double> lambda_w;
  std::vector<double> lambda_e;
  std::vector<double> lambda_s;
  std::vector<double> temperature;
};

struct FileSources {
  std::filesystem::path original_train, original_dev, original_eval;
  std::filesystem::path new_train, new_dev, new_eval;
  std::optional<std::size_t> stack_context;
  std::optional<std::size_t> num_classes;
};

struct ExpansionConfig {
  enum class Source { kSynthetic, kFiles };

  Source source = Source::kSynthetic;
  DomainSpec original_domain;
  DomainSpec new_domain;
  SplitFractions split;
  FileSources files;

  std::vector<std::size_t> hidden_dims;
  TrainConfig original_train;
  TrainConfig expansion_train;

  std::vector<Method> methods;
  GridSpec grid;
  double fisher_offset = 1.0;
  bool distill_t_squared = false;

  std::optional<double> forgetting_lambda_s;
  std::optional<double> forgetting_temperature;

  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 1;

  /// Throws ConfigError when the configuration cannot describe a run.
  void validate() const;
};

/// Desk-scale defaults: two synthetic domains of 8 classes in 20 dimensions,
/// 600 samples each (400/100/100 after splitting), a 64-64 hidden net, all
/// five expansion methods and the default lambda grids. The new domain is
/// the original layout rotated by 0.5 rad per plane and moved 5 units along a
/// random direction; expansion uses minibatches of 8.
ExpansionConfig default_config();

/// Starts from default_config() and applies every key in the stream.
ExpansionConfig parse_config(std::istream &in);
ExpansionConfig load_config(const std::filesystem::path &path);

/// Every field except `seed` and `output_dir` as sorted key = value lines with
/// round-trip number formatting. Two configs describe the same experiment iff
/// their canonical texts match.
std::string canonical_config(const ExpansionConfig &config);

/// `<output_dir>/run-<16 hex digits of the canonical hash>-s<seed>`.
std::filesystem::path run_directory(const ExpansionConfig &config);

}  // namespace domexp

#endif  // DOMEXP_CONFIG_H_
