// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "tfopt/optimizer.hpp"
#include "tfopt/synthetic.hpp"

using namespace tfopt;

namespace {

// Zero loss and zero image gradient; optionally fails on chosen steps.
class StubScorer : public Scorer {
 public:
  std::vector<int> fail_steps;
  int calls = 0;

  ScoreResult score(const RgbImage& image, const ScoreContext& context) override
  {
    ++calls;
    if (std::find(fail_steps.begin(), fail_steps.end(), context.step) != fail_steps.end())
      throw ScorerError("step " + std::to_string(context.step) + ": service unavailable");
    ScoreResult r;
    r.dloss_dimage = RgbImage(image.width, image.height, 0.0);
    return r;
  }
  std::string description() const override { return "stub"; }
};

EngineSettings tiny_settings(int steps)
{
  EngineSettings s;
  s.control_points = 6;
  s.render.width = 8;
  s.render.height = 8;
  s.optimizer.total_steps = steps;
  s.optimizer.views_per_step = 2;
  s.objective.augment_start_step = 2;
  s.objective.prior_start_step = 3;
  s.seed = 19;
  return s;
}

PromptSet prompts()
{
  PromptSet p;
  p.positive = "a sphere";
  return p;
}

}  // namespace

TEST_CASE("annealed learning rate")
{
  CHECK(annealed_learning_rate(1, 10.0, 300) == 10.0);
  CHECK(annealed_learning_rate(151, 10.0, 300) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(annealed_learning_rate(300, 10.0, 300) == doctest::Approx(10.0 / 300.0).epsilon(1e-15));
  for (int i = 1; i < 300; ++i)
    CHECK(annealed_learning_rate(i + 1, 10.0, 300) < annealed_learning_rate(i, 10.0, 300));
}

TEST_CASE("heavy-ball update by hand")
{
  MomentumSGD sgd(1, 0.5, 0.75, 4);
  std::vector<double> x = {1.0};
  const std::vector<double> g = {2.0};
  // m1 = 2, x = 1 - 0.5 * 2 = 0
  CHECK(sgd.apply(1, x, g) == 0.5);
  CHECK(x[0] == 0.0);
  // m2 = 0.75 * 2 + 2 = 3.5, lr = 0.375, x = -1.3125
  CHECK(sgd.apply(2, x, g) == 0.375);
  CHECK(x[0] == doctest::Approx(-1.3125).epsilon(1e-15));
  CHECK(sgd.momentum_buffer()[0] == 3.5);
}

TEST_CASE("heavy-ball converges on a quadratic")
{
  // f = 0.5 * sum a_i x_i^2
  const std::vector<double> a = {1.0, 0.2, 3.0};
  std::vector<double> x = {1.0, -2.0, 0.5};
  const int steps = 400;
  MomentumSGD sgd(3, 0.1, 0.75, steps);
  for (int i = 1; i <= steps; ++i) {
    std::vector<double> g(3);
    for (std::size_t k = 0; k < 3; ++k)
      g[k] = a[k] * x[k];
    sgd.apply(i, x, g);
  }
  for (double v : x)
    CHECK(std::abs(v) < 1e-6);

  SUBCASE("zero gradient is a fixed point")
  {
    MomentumSGD still(3, 10.0, 0.75, 10);
    std::vector<double> y = {0.3, -0.1, 7.0};
    const std::vector<double> before = y;
    for (int i = 1; i <= 10; ++i)
      still.apply(i, y, std::vector<double>(3, 0.0));
    CHECK(y == before);
  }
}

TEST_CASE("optimizer config validation")
{
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  c.momentum = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.total_steps = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.views_per_step = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("failed scorer calls skip the step without touching state")
{
  const ScalarField field = make_two_shell_volume(8);
  StubScorer scorer;
  scorer.fail_steps = {2};
  Optimizer opt(field, scorer, tiny_settings(4), prompts());
  opt.initialize();
  CHECK_FALSE(opt.step().skipped);
  const auto params = opt.state().params.flatten();
  const auto momentum = opt.state().momentum;
  const StepReport r = opt.step();
  CHECK(r.skipped);
  CHECK(r.step == 2);
  CHECK(r.skip_reason.find("step 2") != std::string::npos);
  CHECK(opt.state().params.flatten() == params);
  CHECK(opt.state().momentum == momentum);
  CHECK(opt.state().step == 2);
  // the schedule keeps advancing
  const StepReport next = opt.step();
  CHECK_FALSE(next.skipped);
  CHECK(next.step == 3);
  CHECK(opt.state().params.flatten() != params);
}

TEST_CASE("step gradient is the mean over views")
{
  const ScalarField field = make_two_shell_volume(8);
  RgbImage target(8, 8, 0.2);
  ReferenceImageScorer scorer(target);
  EngineSettings s = tiny_settings(5);
  s.optimizer.views_per_step = 3;
  s.optimizer.momentum = 0.0;
  Optimizer opt(field, scorer, s, prompts());
  opt.initialize();
  const TFParams before = opt.state().params;
  const StepReport r = opt.step();
  REQUIRE_FALSE(r.skipped);
  REQUIRE(r.views.size() == 3);

  // Independent recomputation at the logged poses over the gray background
  // used before augmentation starts.
  std::vector<double> mean(before.size(), 0.0);
  for (int v = 0; v < 3; ++v) {
    Rng rng(derive_seed(s.seed, 1, static_cast<std::uint64_t>(v)));
    const CameraPose pose = sample_pose(rng, field.bounding_radius());
    CHECK(pose.yaw == r.views[v].pose.yaw);
    const BackgroundSample bg = sample_background(false, rng, 8, 8);
    ScoreContext ctx;
    ctx.pose = pose;
    const ViewEvaluation e =
        evaluate_view(field, before, s.render, s.objective, false, scorer, ctx, bg.image);
    for (std::size_t i = 0; i < mean.size(); ++i)
      mean[i] += e.report.grad_phi[i] / 3.0;
  }
  const auto a = before.flatten();
  const auto b = opt.state().params.flatten();
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(b[i] == doctest::Approx(a[i] - r.learning_rate * mean[i]).epsilon(1e-12));
}

TEST_CASE("density regularizer alone shrinks densities")
{
  const ScalarField field = make_two_shell_volume(8);
  StubScorer scorer;
  EngineSettings s = tiny_settings(30);
  s.objective.prior_start_step = 1000;
  s.objective.lambda_density = 1e-2;
  s.objective.lambda_color = 0.0;
  Optimizer opt(field, scorer, s, prompts());
  opt.initialize();
  TFRealized prev = opt.realized();
  for (int i = 0; i < 30; ++i) {
    opt.step();
    const TFRealized now = opt.realized();
    for (std::size_t k = 0; k < now.density.size(); ++k)
      CHECK(now.density[k] <= prev.density[k]);
    prev = now;
  }
}

TEST_CASE("runs are deterministic and logged per step")
{
  const ScalarField field = make_two_shell_volume(8);
  RgbImage target(8, 8, 0.6);
  const EngineSettings s = tiny_settings(5);
  auto run = [&] {
    ReferenceImageScorer scorer(target);
    return run_optimization(field, prompts(), PromptPool({"n1", "n2", "n3"}), scorer, s);
  };
  const RunResult a = run();
  const RunResult b = run();
  CHECK(a.params.flatten() == b.params.flatten());
  REQUIRE(a.log.size() == 5);

  std::ostringstream la, lb;
  write_log_header(la, 2);
  write_log_header(lb, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    write_log_row(la, a.log[i], 2);
    write_log_row(lb, b.log[i], 2);
  }
  CHECK(la.str() == lb.str());

  std::istringstream rows(la.str());
  std::string line;
  int n = 0;
  while (std::getline(rows, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 6 + 4 * 2);
    ++n;
  }
  CHECK(n == 6);

  // schedule: gray then augmented, prior from step 3
  CHECK(a.log[0].views[0].background == BackgroundKind::ConstantGray);
  CHECK(a.log[1].views[0].background != BackgroundKind::ConstantGray);
  CHECK(a.log[0].l_density == 0.0);
  CHECK(a.log[1].l_density == 0.0);
  CHECK(a.log[2].l_density != 0.0);

  EngineSettings other = s;
  other.seed = 20;
  ReferenceImageScorer scorer(target);
  const RunResult c = run_optimization(field, prompts(), std::nullopt, scorer, other);
  CHECK(c.params.flatten() != a.params.flatten());
}

TEST_CASE("negatives are resampled per step from a seeded stream")
{
  class Recorder : public StubScorer {
   public:
    std::vector<std::vector<std::string>> seen;
    ScoreResult score(const RgbImage& image, const ScoreContext& context) override
    {
      seen.push_back(context.prompts->negatives());
      return StubScorer::score(image, context);
    }
  };
  const ScalarField field = make_two_shell_volume(8);
  EngineSettings s = tiny_settings(3);
  s.objective.negatives_per_step = 4;
  PromptSet p = prompts();
  p.user_negatives = {"user"};
  std::vector<std::string> pool;
  for (int i = 0; i < 50; ++i)
    pool.push_back("p" + std::to_string(i));

  Recorder a;
  run_optimization(field, p, PromptPool(pool), a, s);
  REQUIRE(a.seen.size() == 6);
  for (const auto& n : a.seen) {
    REQUIRE(n.size() == 5);
    CHECK(n.back() == "user");
  }
  CHECK(a.seen[0] == a.seen[1]);  // shared within a step
  CHECK(a.seen[0] != a.seen[2]);

  s.optimizer.resample_negatives_per_view = true;
  Recorder b;
  run_optimization(field, p, PromptPool(pool), b, s);
  CHECK(b.seen[0] != b.seen[1]);
}
