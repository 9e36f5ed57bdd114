// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfopt/commands.hpp"
#include "tfopt/protocol.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct VolumeFlags {
  std::string path;
  std::vector<int> dims;
  std::string dtype;
  std::vector<double> spacing;
  int downsample = 1;

  void add_to(CLI::App& app)
  {
    app.add_option("--volume", path, "raw volume file")->required();
    app.add_option("--dims", dims, "voxel dimensions X Y Z")->expected(3);
    app.add_option("--dtype", dtype, "uint8, uint16 or float32");
    app.add_option("--spacing", spacing, "voxel spacing X Y Z")->expected(3);
    app.add_option("--downsample", downsample, "block-average factor")->default_val(1);
  }

  tfopt::VolumeSource source() const
  {
    tfopt::VolumeSource src;
    src.path = path;
    src.downsample = downsample;
    if (downsample < 1)
      throw tfopt::ValidationError("--downsample", "must be >= 1");
    if (dims.empty() != dtype.empty())
      throw tfopt::ValidationError("--dims", "--dims and --dtype must be given together");
    if (!dims.empty()) {
      tfopt::VolumeMeta meta;
      meta.dims = {dims[0], dims[1], dims[2]};
      meta.dtype = tfopt::parse_dtype(dtype);
      if (!spacing.empty())
        meta.spacing = {spacing[0], spacing[1], spacing[2]};
      src.meta = meta;
    } else if (!spacing.empty()) {
      throw tfopt::ValidationError("--spacing", "requires --dims and --dtype");
    }
    if (!std::filesystem::exists(src.path))
      throw tfopt::ValidationError("--volume", "file not found: " + path);
    return src;
  }
};

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Text-guided transfer function optimization for volume rendering"};
  app.require_subcommand(1);

  // optimize
  auto* optimize = app.add_subcommand("optimize", "optimize a transfer function from a config");
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> steps_flag;
  std::optional<std::string> output_flag;
  optimize->add_option("config", config_path, "JSON run config")->required();
  optimize->add_option("--set", overrides, "override a config key, e.g. --set optimizer.momentum=0.9");
  optimize->add_option("--seed", seed_flag, "global seed");
  optimize->add_option("--steps", steps_flag, "total optimization steps");
  optimize->add_option("--output", output_flag, "output parent directory");

  // render
  auto* render_cmd = app.add_subcommand("render", "render one view of a transfer function");
  VolumeFlags render_volume;
  render_volume.add_to(*render_cmd);
  std::string tf_path, png_path, raw_path;
  double yaw = 0.0, pitch = 0.0;
  std::optional<double> distance;
  int width = 224, height = 224;
  double step_size = 0.0;
  render_cmd->add_option("--tf", tf_path, "transfer function file")->required();
  render_cmd->add_option("--yaw", yaw, "radians");
  render_cmd->add_option("--pitch", pitch, "radians");
  render_cmd->add_option("--distance", distance, "default: 3x bounding radius");
  render_cmd->add_option("--width", width);
  render_cmd->add_option("--height", height);
  render_cmd->add_option("--step-size", step_size, "default: half the smallest spacing");
  render_cmd->add_option("--out", png_path, "output PNG")->required();
  render_cmd->add_option("--raw", raw_path, "also write the float32 image");

  // init-density
  auto* init_cmd = app.add_subcommand("init-density", "initialize densities to a mean transmittance");
  VolumeFlags init_volume;
  init_volume.add_to(*init_cmd);
  long control_points = 32;
  double target = 0.05;
  std::uint64_t init_seed = 0;
  std::string init_out;
  init_cmd->add_option("--control-points", control_points);
  init_cmd->add_option("--target", target, "target mean transmittance");
  init_cmd->add_option("--seed", init_seed);
  init_cmd->add_option("--width", width);
  init_cmd->add_option("--height", height);
  init_cmd->add_option("--out", init_out, "output TF file")->required();

  // inspect-tf
  auto* inspect = app.add_subcommand("inspect-tf", "summarize a transfer function file");
  std::string inspect_path;
  inspect->add_option("tf", inspect_path)->required();

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic test volume");
  std::string synth_kind = "two-shell", synth_dir = ".";
  int synth_size = 32;
  synth->add_option("kind", synth_kind, "two-shell or tree");
  synth->add_option("--size", synth_size);
  synth->add_option("--out", synth_dir, "output directory");

  // serve-reference
  auto* serve = app.add_subcommand(
      "serve-reference", "serve a reference-TF scorer over the wire protocol (stdio or TCP)");
  VolumeFlags serve_volume;
  serve_volume.add_to(*serve);
  std::string serve_tf;
  std::uint64_t serve_seed = 0;
  int augment_start = tfopt::ObjectiveConfig{}.augment_start_step;
  int port = -1;
  serve->add_option("--reference-tf", serve_tf)->required();
  serve->add_option("--seed", serve_seed, "engine seed of the client run");
  serve->add_option("--augment-start-step", augment_start);
  serve->add_option("--port", port, "listen on 127.0.0.1:PORT (0 = ephemeral) instead of stdio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*optimize) {
      std::vector<std::string> all = overrides;
      if (seed_flag)
        all.push_back("seed=" + std::to_string(*seed_flag));
      if (steps_flag)
        all.push_back("optimizer.total_steps=" + std::to_string(*steps_flag));
      if (output_flag)
        all.push_back("output.directory=" + nlohmann::json(*output_flag).dump());
      const tfopt::RunConfig config = tfopt::load_run_config(config_path, all);
      const auto artifacts = tfopt::cmd_optimize(config, std::cerr);
      std::cout << artifacts.directory.string() << '\n';
    } else if (*render_cmd) {
      const tfopt::VolumeSource src = render_volume.source();
      tfopt::RenderConfig rc;
      rc.step_size = step_size;
      tfopt::CameraPose pose{yaw, pitch, 0.0};
      if (distance) {
        pose.distance = *distance;
      } else {
        pose.distance = tfopt::initial_view(tfopt::load_volume(src).bounding_radius()).distance;
      }
      std::optional<std::filesystem::path> raw;
      if (!raw_path.empty())
        raw = raw_path;
      tfopt::cmd_render(src, tf_path, pose, width, height, png_path, raw, rc);
    } else if (*init_cmd) {
      if (control_points < 2)
        throw tfopt::ValidationError("--control-points", "at least 2 control points are required");
      tfopt::RenderConfig rc;
      rc.width = width;
      rc.height = height;
      const auto init = tfopt::cmd_init_density(init_volume.source(),
                                                static_cast<std::size_t>(control_points), target,
                                                init_out, init_seed, rc);
      if (!init.converged)
        std::cerr << "warning: target not reached within " << init.iterations << " iterations\n";
      std::cout << "mean transmittance " << init.mean_transmittance << " after " << init.iterations
                << " iterations\n";
    } else if (*inspect) {
      tfopt::cmd_inspect_tf(inspect_path, std::cout);
    } else if (*synth) {
      std::cout << tfopt::cmd_synth(synth_kind, synth_size, synth_dir).string() << '\n';
    } else if (*serve) {
      std::signal(SIGPIPE, SIG_IGN);
      const tfopt::ScalarField field = tfopt::load_volume(serve_volume.source());
      tfopt::EngineSettings settings;
      settings.seed = serve_seed;
      settings.objective.augment_start_step = augment_start;
      const auto handler =
          tfopt::reference_service_handler(field, tfopt::import_tf(serve_tf), settings);
      const nlohmann::json info = {{"model", "reference-tf"}, {"reference", serve_tf}};
      if (port >= 0) {
        tfopt::TcpListener listener(port);
        std::cerr << "listening on 127.0.0.1:" << listener.port() << std::endl;
        for (;;) {
          auto stream = listener.accept();
          try {
            tfopt::serve_scorer(*stream, info, handler);
          } catch (const tfopt::ProtocolError& e) {
            std::cerr << "connection dropped: " << e.what() << '\n';
          }
        }
      }
      tfopt::FdStream stdio(0, 1);
      tfopt::serve_scorer(stdio, info, handler);
    }
  } catch (const tfopt::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
