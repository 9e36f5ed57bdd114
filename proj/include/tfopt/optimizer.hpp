// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tfopt/augmentation.hpp"
#include "tfopt/initialization.hpp"
#include "tfopt/objective.hpp"
#include "tfopt/renderer.hpp"
#include "tfopt/scorer.hpp"
#include "tfopt/transfer_function.hpp"
#include "tfopt/volume.hpp"

namespace tfopt {

struct OptimizerConfig {
  double learning_rate = 10.0;
  double momentum = 0.75;
  int total_steps = 300;
  int views_per_step = 3;
  /// Draw a fresh negative-prompt sample for every view instead of once per step.
  bool resample_negatives_per_view = false;

  void validate() const;
};

/// eta_i = eta_0 (1 - (i - 1) / S) for 1-based step i.
double annealed_learning_rate(int step, double base_rate, int total_steps);

/// Heavy-ball SGD: m <- mu m + g; x <- x - eta_i m.
class MomentumSGD {
 public:
  MomentumSGD(std::size_t size, double learning_rate, double momentum, int total_steps);

  /// Returns the learning rate used.
  double apply(int step, std::span<double> params, std::span<const double> gradient);

  const std::vector<double>& momentum_buffer() const { return buffer_; }

 private:
  double learning_rate_;
  double momentum_;
  int total_steps_;
  std::vector<double> buffer_;
};

/// Everything the engine needs beyond the volume, prompts and scorer.
struct EngineSettings {
  std::size_t control_points = 32;
  double target_transmittance = 0.05;
  RenderConfig render;
  ObjectiveConfig objective;
  OptimizerConfig optimizer;
  InitOptions init;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ViewRecord {
  CameraPose pose;
  BackgroundKind background = BackgroundKind::ConstantGray;
};

struct StepReport {
  int step = 0;
  double learning_rate = 0.0;
  double l_clip = 0.0;
  double l_density = 0.0;
  double l_reg = 0.0;
  double mean_transmittance = 0.0;
  bool skipped = false;
  std::string skip_reason;
  std::vector<ViewRecord> views;
};

struct ViewEvaluation {
  ObjectiveReport report;
  double mean_transmittance = 0.0;
  RgbImage image;
};

/// Render, score and differentiate one view. The density prior contributes
/// density_weight * its adjoint through T_N only when `prior_active`.
ViewEvaluation evaluate_view(const ScalarField& field, const TFParams& params,
                             const RenderConfig& render_config, const ObjectiveConfig& objective,
                             bool prior_active, Scorer& scorer, const ScoreContext& context,
                             const RgbImage& background);

struct OptimizerState {
  int step = 0;  // completed steps
  TFParams params;
  std::vector<double> momentum;
};

class Optimizer {
 public:
  Optimizer(const ScalarField& field, Scorer& scorer, EngineSettings settings, PromptSet prompts,
            std::optional<PromptPool> pool = std::nullopt);

  /// Mean-transmittance initialization at the fixed view.
  InitResult initialize();
  void set_params(TFParams params);

  StepReport step();

  const OptimizerState& state() const { return state_; }
  const EngineSettings& settings() const { return settings_; }
  const ScalarField& field() const { return field_; }
  TFRealized realized() const;

 private:
  PromptSet prompts_for(int step, int view) const;

  const ScalarField& field_;
  Scorer& scorer_;
  EngineSettings settings_;
  PromptSet prompts_;
  std::optional<PromptPool> pool_;
  OptimizerState state_;
  std::optional<MomentumSGD> sgd_;
};

struct RunResult {
  InitResult init;
  TFParams params;
  TFRealized realized;
  std::vector<StepReport> log;
};

using StepCallback = std::function<void(const StepReport&, const Optimizer&)>;

RunResult run_optimization(const ScalarField& field, const PromptSet& prompts,
                           std::optional<PromptPool> pool, Scorer& scorer,
                           const EngineSettings& settings, const StepCallback& on_step = {});

/// CSV columns: step, lr, l_clip, l_density, l_reg, mean_T_N, skipped, then
/// yaw_v, pitch_v, distance_v, background_v for each view v.
void write_log_header(std::ostream& out, int views);
void write_log_row(std::ostream& out, const StepReport& report, int views);

}  // namespace tfopt
