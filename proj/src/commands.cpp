// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "tfopt/image_io.hpp"
#include "tfopt/synthetic.hpp"

namespace tfopt {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  out << text;
}

std::string step_name(int step)
{
  std::ostringstream name;
  name << "step_" << std::setw(4) << std::setfill('0') << step << ".png";
  return name.str();
}

}  // namespace

std::filesystem::path make_timestamped_directory(const std::filesystem::path& parent)
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream stamp;
  stamp << "run-" << std::put_time(&tm, "%Y%m%d-%H%M%S");
  std::filesystem::create_directories(parent);
  std::filesystem::path dir = parent / stamp.str();
  for (int n = 1; !std::filesystem::create_directory(dir); ++n)
    dir = parent / (stamp.str() + "-" + std::to_string(n));
  return dir;
}

OptimizeArtifacts cmd_optimize(const RunConfig& config, std::ostream& log)
{
  config.validate();
  const ScalarField field = load_volume(config.volume);

  std::unique_ptr<Scorer> scorer;
  if (config.scorer.reference_tf) {
    scorer = std::make_unique<ReferenceRenderScorer>(field, import_tf(*config.scorer.reference_tf),
                                                     config.engine.render);
  } else if (config.scorer.reference_image) {
    scorer = std::make_unique<ReferenceImageScorer>(read_raw_image(
        *config.scorer.reference_image, config.engine.render.width, config.engine.render.height));
  } else {
    scorer = std::make_unique<RemoteScorer>(*config.scorer.endpoint);
  }
  std::optional<PromptPool> pool;
  if (config.prompt_pool)
    pool = PromptPool::load(*config.prompt_pool);

  PromptSet prompts;
  prompts.positive = config.positive_prompt;
  prompts.user_negatives = config.user_negatives;

  OptimizeArtifacts artifacts;
  artifacts.directory = config.timestamped_output
                            ? make_timestamped_directory(config.output_directory)
                            : config.output_directory;
  std::filesystem::create_directories(artifacts.directory);
  const auto& dir = artifacts.directory;
  write_text(dir / "resolved_config.json", to_json(config).dump(2) + "\n");

  const EngineSettings& engine = config.engine;
  log << "volume " << field.dims()[0] << "x" << field.dims()[1] << "x" << field.dims()[2]
      << " range [" << field.value_min() << ", " << field.value_max() << "]\n"
      << "scorer " << scorer->description() << ", " << engine.control_points
      << " control points, step size " << engine.render.resolved_step(field) << ", image "
      << engine.render.width << "x" << engine.render.height << ", beta shape "
      << engine.objective.beta_shape << ", seed " << engine.seed << "\n";

  const int views = engine.optimizer.views_per_step;
  std::ofstream csv(dir / "log.csv");
  if (!csv)
    throw Error("cannot write " + (dir / "log.csv").string());
  write_log_header(csv, views);

  const CameraPose preview_pose = initial_view(field.bounding_radius());
  const RgbImage preview_bg(engine.render.width, engine.render.height, kPreviewGray);
  if (config.snapshot_interval > 0)
    std::filesystem::create_directories(dir / "snapshots");

  auto on_step = [&](const StepReport& report, const Optimizer& opt) {
    write_log_row(csv, report, views);
    if (config.snapshot_interval > 0 && report.step % config.snapshot_interval == 0) {
      write_png(dir / "snapshots" / step_name(report.step),
                render(field, opt.realized(), preview_pose, engine.render, preview_bg).image);
    }
  };

  artifacts.result = run_optimization(field, prompts, std::move(pool), *scorer, engine, on_step);
  csv.flush();
  export_tf(artifacts.result.realized, dir / "tf.txt");
  write_png(dir / "final.png",
            render(field, artifacts.result.realized, preview_pose, engine.render, preview_bg).image);

  std::size_t skipped = 0;
  for (const StepReport& r : artifacts.result.log)
    skipped += r.skipped ? 1 : 0;
  log << "initial mean transmittance " << artifacts.result.init.mean_transmittance << ", "
      << artifacts.result.log.size() << " steps, " << skipped << " skipped\n"
      << "output " << dir.string() << "\n";
  return artifacts;
}

RgbImage cmd_render(const VolumeSource& volume, const std::filesystem::path& tf_file,
                    const CameraPose& pose, int width, int height,
                    const std::filesystem::path& png_out,
                    const std::optional<std::filesystem::path>& raw_out, const RenderConfig& base)
{
  const ScalarField field = load_volume(volume);
  TFRealized tf = import_tf(tf_file);
  // Stored TFs may come from a volume with a slightly different range; the
  // end points are re-anchored to this field's range.
  if (tf.value_min() != field.value_min() || tf.value_max() != field.value_max()) {
    if (field.value_min() >= tf.positions[1] || field.value_max() <= tf.positions[tf.positions.size() - 2])
      throw ValidationError("tf", "transfer function range does not fit the volume range");
    tf.positions.front() = field.value_min();
    tf.positions.back() = field.value_max();
  }
  RenderConfig config = base;
  config.width = width;
  config.height = height;
  const RgbImage background(width, height, kPreviewGray);
  RgbImage image = render(field, tf, pose, config, background).image;
  write_png(png_out, image);
  if (raw_out)
    write_raw_image(*raw_out, image);
  return image;
}

InitResult cmd_init_density(const VolumeSource& volume, std::size_t control_points,
                            double target, const std::filesystem::path& tf_out,
                            std::uint64_t seed, const RenderConfig& render_config,
                            const InitOptions& options)
{
  if (control_points < 2)
    throw ValidationError("control_points", "at least 2 control points are required");
  if (!(target > 0.0 && target < 1.0))
    throw ValidationError("target_transmittance", "must lie in (0, 1)");
  const ScalarField field = load_volume(volume);
  Rng rng(seed);
  InitResult init = init_params(field, control_points, rng, target,
                                initial_view(field.bounding_radius()), render_config, options);
  export_tf(realize(init.params, field.value_min(), field.value_max()), tf_out);
  return init;
}

std::vector<std::size_t> density_peaks(const TFRealized& tf)
{
  std::vector<std::size_t> peaks;
  const auto& d = tf.density;
  const std::size_t m = d.size();
  std::size_t k = 0;
  while (k < m) {
    std::size_t end = k;
    while (end + 1 < m && d[end + 1] == d[k])
      ++end;
    const bool above_left = k == 0 || d[k - 1] < d[k];
    const bool above_right = end + 1 == m || d[end + 1] < d[k];
    const bool has_neighbor = k > 0 || end + 1 < m;
    if (above_left && above_right && has_neighbor)
      peaks.push_back(k);
    k = end + 1;
  }
  return peaks;
}

void cmd_inspect_tf(const std::filesystem::path& tf_file, std::ostream& out)
{
  const TFRealized tf = import_tf(tf_file);
  const auto precision = out.precision(6);
  out << "control points: " << tf.control_points() << "\n"
      << "range: [" << tf.value_min() << ", " << tf.value_max() << "]\n"
      << "  #  position  density  r  g  b\n";
  for (std::size_t k = 0; k < tf.control_points(); ++k) {
    out << "  " << k << "  " << tf.positions[k] << "  " << tf.density[k] << "  "
        << tf.color[k][0] << "  " << tf.color[k][1] << "  " << tf.color[k][2] << "\n";
  }
  const auto peaks = density_peaks(tf);
  out << "density peaks: " << peaks.size() << "\n";
  for (std::size_t k : peaks)
    out << "  peak at " << tf.positions[k] << " density " << tf.density[k] << "\n";
  out << "color stops:\n";
  for (std::size_t k = 0; k < tf.control_points(); ++k) {
    out << "  " << tf.positions[k] << " -> (" << tf.color[k][0] << ", " << tf.color[k][1] << ", "
        << tf.color[k][2] << ")\n";
  }
  out.precision(precision);
}

std::filesystem::path cmd_synth(const std::string& kind, int size,
                                const std::filesystem::path& out_dir)
{
  if (size < 2)
    throw ValidationError("size", "must be >= 2");
  std::filesystem::create_directories(out_dir);
  std::optional<ScalarField> field;
  if (kind == "two-shell")
    field = make_two_shell_volume(size);
  else if (kind == "tree")
    field = make_tree_volume(size);
  else
    throw ValidationError("kind", "unknown synthetic volume '" + kind + "' (two-shell, tree)");

  const std::string n = std::to_string(size);
  const std::filesystem::path raw = out_dir / (kind + "_" + n + "x" + n + "x" + n + "_float32.raw");
  save_raw_float32(*field, raw);
  if (kind == "two-shell") {
    // Re-load so the reference TF spans the float32-rounded range on disk.
    VolumeMeta meta;
    meta.dims = field->dims();
    meta.dtype = DType::Float32;
    export_tf(two_shell_reference_tf(load_raw(raw, meta)), out_dir / "two-shell_reference_tf.txt");
  }
  return raw;
}

ScoreHandler reference_service_handler(const ScalarField& field, TFRealized reference,
                                       const EngineSettings& settings)
{
  reference.validate();
  auto tf = std::make_shared<const TFRealized>(std::move(reference));
  return [&field, tf, settings](const ScoreRequest& request) {
    const nlohmann::json& ctx = request.context;
    if (!ctx.is_object() || !ctx.contains("step") || !ctx.contains("view"))
      throw Error("request lacks a step/view context");
    const int step = ctx.at("step").get<int>();
    const int view = ctx.at("view").get<int>();
    if (step < 1 || view < 0)
      throw Error("invalid step/view context");
    Rng rng(derive_seed(settings.seed, static_cast<std::uint64_t>(step),
                        static_cast<std::uint64_t>(view)));
    const CameraPose pose = sample_pose(rng, field.bounding_radius());
    const BackgroundSample background =
        sample_background(schedule(step, settings.objective).augmented_background, rng,
                          request.image.width, request.image.height);
    if (ctx.value("yaw", pose.yaw) != pose.yaw || ctx.value("pitch", pose.pitch) != pose.pitch
        || ctx.value("distance", pose.distance) != pose.distance)
      throw Error("request pose does not match the seeded view sequence");
    RenderConfig config = settings.render;
    config.width = request.image.width;
    config.height = request.image.height;
    return score_reference(request.image,
                           render(field, *tf, pose, config, background.image).image);
  };
}

}  // namespace tfopt
