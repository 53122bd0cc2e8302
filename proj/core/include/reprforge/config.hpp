// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reprforge/augment.hpp"
#include "reprforge/dataset.hpp"
#include "reprforge/encoder.hpp"
#include "reprforge/losses.hpp"
#include "reprforge/metrics.hpp"
#include "reprforge/optim.hpp"
#include "reprforge/schedule.hpp"

namespace reprforge {

enum class TaskKind { kClassification, kFace, kRetrieval };

std::string task_kind_name(TaskKind t);
TaskKind task_kind_from_name(const std::string& name);

struct DataConfig {
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::string> path;
  int batch_size = 32;
  double val_fraction = 0.25;
  int sampler_identities = 4;  // P, face/retrieval batches
  int sampler_views = 4;       // Q
};

struct TrainConfig {
  int epochs = 1;
  std::uint64_t seed = 42;
  int eval_every = 0;  // 0 = final evaluation only
};

struct EvalConfig {
  std::vector<std::string> metrics;  // empty = task defaults
  std::vector<int> k_values{1};
  DistanceMetric metric = DistanceMetric::kEuclidean;
};

/// Full declarative description of one training/eval run.
struct RunConfig {
  TaskKind task = TaskKind::kClassification;
  EncoderConfig model;
  int model_classes = 0;  // 0 = derive from the dataset
  LossSpec loss;
  OptimHyper optimizer;
  double encoder_lr_scale = 1.0;
  double head_lr_scale = 1.0;
  ScheduleSpec scheduler;
  AugmentPlan augment;
  DataConfig data;
  TrainConfig train;
  EvalConfig eval;

  /// Cross-field checks (task/loss compatibility, sampler shape, ranges).
  void validate() const;
  /// Canonical YAML serialization; load(to_yaml()) round-trips exactly.
  std::string to_yaml() const;
};

/// Parse and validate YAML text. Unknown keys are rejected with their path.
RunConfig parse_config(const std::string& yaml_text);
/// Parse and validate a YAML file.
RunConfig load_config(const std::string& path);

/// Spec file for `gen-data`: a data.synthetic block plus a val_fraction.
struct GenDataSpec {
  SyntheticSpec synthetic;
  double val_fraction = 0.25;
};
GenDataSpec load_gendata_spec(const std::string& path);

} // namespace reprforge
