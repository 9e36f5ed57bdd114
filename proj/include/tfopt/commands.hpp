// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tfopt/config.hpp"
#include "tfopt/initialization.hpp"
#include "tfopt/optimizer.hpp"

namespace tfopt {

inline constexpr double kPreviewGray = 0.5;

struct OptimizeArtifacts {
  std::filesystem::path directory;
  RunResult result;
};

/// Runs a full optimization and writes tf.txt, log.csv,
/// resolved_config.json, final.png and snapshots/step_NNNN.png.
OptimizeArtifacts cmd_optimize(const RunConfig& config, std::ostream& log);

/// Renders one view of `tf_file` over a constant gray background.
/// Optionally also writes the float image before quantization.
RgbImage cmd_render(const VolumeSource& volume, const std::filesystem::path& tf_file,
                    const CameraPose& pose, int width, int height,
                    const std::filesystem::path& png_out,
                    const std::optional<std::filesystem::path>& raw_out = std::nullopt,
                    const RenderConfig& base = {});

/// Runs only the mean-transmittance initialization and writes the TF.
InitResult cmd_init_density(const VolumeSource& volume, std::size_t control_points,
                            double target, const std::filesystem::path& tf_out,
                            std::uint64_t seed = 0, const RenderConfig& render = {},
                            const InitOptions& options = {});

/// Indices of density peaks: maximal plateaus strictly above their neighbors.
std::vector<std::size_t> density_peaks(const TFRealized& tf);

/// Prints control points, density peaks and color stops.
void cmd_inspect_tf(const std::filesystem::path& tf_file, std::ostream& out);

/// Writes a synthetic volume (`two-shell` or `tree`) as name_NxNxN_float32.raw;
/// for two-shell also writes the ground-truth TF next to it.
std::filesystem::path cmd_synth(const std::string& kind, int size,
                                const std::filesystem::path& out_dir);

/// Answers score requests the way ReferenceRenderScorer does. Requests carry
/// only the image, so the view's pose and background are re-derived from the
/// engine's seeded sampler using the step/view context. `field` must outlive
/// the handler.
ScoreHandler reference_service_handler(const ScalarField& field, TFRealized reference,
                                       const EngineSettings& settings);

/// Creates a fresh run-YYYYmmdd-HHMMSS[-n] directory under `parent`.
std::filesystem::path make_timestamped_directory(const std::filesystem::path& parent);

}  // namespace tfopt
