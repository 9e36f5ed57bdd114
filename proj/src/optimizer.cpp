// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/optimizer.hpp"

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <limits>
#include <ostream>

namespace tfopt {

namespace {

// Seed streams per (step, stream). Views use streams 0..views-1.
constexpr std::uint64_t kNegativeStream = 1u << 20;
constexpr std::uint64_t kInitStream = 1u << 21;

}  // namespace

void OptimizerConfig::validate() const
{
  if (!(learning_rate > 0.0))
    throw ValidationError("optimizer.learning_rate", "must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ValidationError("optimizer.momentum", "must lie in [0, 1)");
  if (total_steps < 1)
    throw ValidationError("optimizer.total_steps", "must be >= 1");
  if (views_per_step < 1)
    throw ValidationError("optimizer.views_per_step", "must be >= 1");
}

double annealed_learning_rate(int step, double base_rate, int total_steps)
{
  return base_rate * (1.0 - static_cast<double>(step - 1) / static_cast<double>(total_steps));
}

MomentumSGD::MomentumSGD(std::size_t size, double learning_rate, double momentum, int total_steps)
    : learning_rate_(learning_rate), momentum_(momentum), total_steps_(total_steps),
      buffer_(size, 0.0)
{
}

double MomentumSGD::apply(int step, std::span<double> params, std::span<const double> gradient)
{
  const double lr = annealed_learning_rate(step, learning_rate_, total_steps_);
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    buffer_[i] = momentum_ * buffer_[i] + gradient[i];
    params[i] -= lr * buffer_[i];
  }
  return lr;
}

void EngineSettings::validate() const
{
  if (control_points < 2)
    throw ValidationError("tf.control_points", "at least 2 control points are required");
  if (!(target_transmittance > 0.0 && target_transmittance < 1.0))
    throw ValidationError("tf.target_transmittance", "must lie in (0, 1)");
  render.validate();
  objective.validate();
  optimizer.validate();
  if (init.max_iterations < 1)
    throw ValidationError("tf.init_max_iterations", "must be >= 1");
  if (!(init.tolerance > 0.0))
    throw ValidationError("tf.init_tolerance", "must be > 0");
  if (!(init.histogram_eps > 0.0))
    throw ValidationError("tf.histogram_eps", "must be > 0");
}

ViewEvaluation evaluate_view(const ScalarField& field, const TFParams& params,
                             const RenderConfig& render_config, const ObjectiveConfig& objective,
                             bool prior_active, Scorer& scorer, const ScoreContext& context,
                             const RgbImage& background)
{
  const double vmin = field.value_min();
  const double vmax = field.value_max();
  const TFRealized tf = realize(params, vmin, vmax);
  RenderOutput out = render(field, tf, context.pose, render_config, background);

  ViewEvaluation eval;
  eval.mean_transmittance = out.mean_hit_transmittance();

  ScoreResult score = scorer.score(out.image, context);
  if (!score.dloss_dimage.same_shape(out.image))
    throw ScorerError("scorer gradient shape does not match the rendered image");
  eval.report.l_clip = score.loss;

  ScalarImage dloss_dtransmittance;
  if (prior_active) {
    BetaPriorResult prior =
        beta_prior_loss(out.transmittance, objective.beta_shape, objective.transmittance_eps);
    eval.report.l_density = prior.loss;
    dloss_dtransmittance = std::move(prior.gradient);
    for (double& g : dloss_dtransmittance.values)
      g *= objective.density_weight;
  }

  RealizedGradient grad = render_adjoint_realized(
      tf, out, background, score.dloss_dimage, prior_active ? &dloss_dtransmittance : nullptr);
  const RegularizerTerms reg =
      tf_regularizer(tf, objective.lambda_density, objective.lambda_color);
  eval.report.l_reg = reg.total();
  grad += reg.gradient;

  eval.report.grad_phi = backprop_to_params(params, vmin, vmax, grad);
  eval.image = std::move(out.image);
  return eval;
}

Optimizer::Optimizer(const ScalarField& field, Scorer& scorer, EngineSettings settings,
                     PromptSet prompts, std::optional<PromptPool> pool)
    : field_(field), scorer_(scorer), settings_(std::move(settings)), prompts_(std::move(prompts)),
      pool_(std::move(pool))
{
  settings_.validate();
  require_range(field_);
  state_.params = TFParams::uniform(settings_.control_points);
  state_.momentum.assign(state_.params.size(), 0.0);
}

InitResult Optimizer::initialize()
{
  Rng rng(derive_seed(settings_.seed, 0, kInitStream));
  InitResult init = init_params(field_, settings_.control_points, rng,
                                settings_.target_transmittance,
                                initial_view(field_.bounding_radius()), settings_.render,
                                settings_.init);
  set_params(init.params);
  return init;
}

void Optimizer::set_params(TFParams params)
{
  params.validate();
  state_.params = std::move(params);
  state_.step = 0;
  const OptimizerConfig& oc = settings_.optimizer;
  sgd_.emplace(state_.params.size(), oc.learning_rate, oc.momentum, oc.total_steps);
  state_.momentum = sgd_->momentum_buffer();
}

TFRealized Optimizer::realized() const
{
  return realize(state_.params, field_.value_min(), field_.value_max());
}

PromptSet Optimizer::prompts_for(int step, int view) const
{
  PromptSet set = prompts_;
  if (pool_) {
    const std::uint64_t stream =
        settings_.optimizer.resample_negatives_per_view ? kNegativeStream + 1 + view : kNegativeStream;
    Rng rng(derive_seed(settings_.seed, static_cast<std::uint64_t>(step), stream));
    set.pool_negatives =
        pool_->sample(static_cast<std::size_t>(settings_.objective.negatives_per_step), rng);
  }
  return set;
}

StepReport Optimizer::step()
{
  if (!sgd_)
    set_params(state_.params);

  const int step = state_.step + 1;
  const SchedulePhase phase = schedule(step, settings_.objective);
  const RenderConfig& rc = settings_.render;
  const int views = settings_.optimizer.views_per_step;
  const double radius = field_.bounding_radius();

  StepReport report;
  report.step = step;
  report.learning_rate =
      annealed_learning_rate(step, settings_.optimizer.learning_rate, settings_.optimizer.total_steps);

  std::vector<double> gradient(state_.params.size(), 0.0);
  const PromptSet shared_prompts = prompts_for(step, 0);
  try {
    for (int v = 0; v < views; ++v) {
      Rng rng(derive_seed(settings_.seed, static_cast<std::uint64_t>(step),
                          static_cast<std::uint64_t>(v)));
      ViewRecord record;
      record.pose = sample_pose(rng, radius);
      BackgroundSample background =
          sample_background(phase.augmented_background, rng, rc.width, rc.height);
      record.background = background.kind;
      report.views.push_back(record);

      const PromptSet view_prompts =
          settings_.optimizer.resample_negatives_per_view ? prompts_for(step, v) : shared_prompts;
      ScoreContext context;
      context.step = step;
      context.view = v;
      context.pose = record.pose;
      context.prompts = &view_prompts;
      context.background = &background.image;

      const ViewEvaluation eval =
          evaluate_view(field_, state_.params, rc, settings_.objective, phase.prior_active,
                        scorer_, context, background.image);
      report.l_clip += eval.report.l_clip / views;
      report.l_density += eval.report.l_density / views;
      report.l_reg += eval.report.l_reg / views;
      report.mean_transmittance += eval.mean_transmittance / views;
      for (std::size_t i = 0; i < gradient.size(); ++i)
        gradient[i] += eval.report.grad_phi[i] / views;
    }
  } catch (const ScorerError& e) {
    report.skipped = true;
    report.skip_reason = e.what();
  }

  if (!report.skipped
      && !std::all_of(gradient.begin(), gradient.end(), [](double g) { return std::isfinite(g); })) {
    report.skipped = true;
    report.skip_reason = "step " + std::to_string(step) + ": non-finite gradient";
  }

  if (report.skipped) {
    std::cerr << "warning: skipping step " << step << ": " << report.skip_reason << '\n';
  } else {
    std::vector<double> flat = state_.params.flatten();
    sgd_->apply(step, flat, gradient);
    state_.params = TFParams::unflatten(flat, settings_.control_points);
    state_.momentum = sgd_->momentum_buffer();
  }
  state_.step = step;
  return report;
}

RunResult run_optimization(const ScalarField& field, const PromptSet& prompts,
                           std::optional<PromptPool> pool, Scorer& scorer,
                           const EngineSettings& settings, const StepCallback& on_step)
{
  Optimizer opt(field, scorer, settings, prompts, std::move(pool));
  RunResult result;
  result.init = opt.initialize();
  if (!result.init.converged) {
    std::cerr << "warning: initialization reached mean transmittance "
              << result.init.mean_transmittance << " (target " << settings.target_transmittance
              << ") after " << result.init.iterations << " iterations\n";
  }
  for (int i = 0; i < settings.optimizer.total_steps; ++i) {
    result.log.push_back(opt.step());
    if (on_step)
      on_step(result.log.back(), opt);
  }
  result.params = opt.state().params;
  result.realized = opt.realized();
  return result;
}

void write_log_header(std::ostream& out, int views)
{
  out << "step,lr,l_clip,l_density,l_reg,mean_T_N,skipped";
  for (int v = 0; v < views; ++v)
    out << ",yaw_" << v << ",pitch_" << v << ",distance_" << v << ",background_" << v;
  out << '\n';
}

void write_log_row(std::ostream& out, const StepReport& r, int views)
{
  const auto precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << r.step << ',' << r.learning_rate << ',' << r.l_clip << ',' << r.l_density << ','
      << r.l_reg << ',' << r.mean_transmittance << ',' << (r.skipped ? 1 : 0);
  for (int v = 0; v < views; ++v) {
    if (v < static_cast<int>(r.views.size())) {
      const ViewRecord& view = r.views[static_cast<std::size_t>(v)];
      out << ',' << view.pose.yaw << ',' << view.pose.pitch << ',' << view.pose.distance << ','
          << to_string(view.background);
    } else {
      out << ",,,,";
    }
  }
  out << '\n';
  out.precision(precision);
}

}  // namespace tfopt
