// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfopt/optimizer.hpp"
#include "tfopt/volume.hpp"

namespace tfopt {

struct VolumeSource {
  std::filesystem::path path;
  std::optional<VolumeMeta> meta;  // resolved from config, sidecar or file name
  int downsample = 1;
  std::optional<std::pair<Dims, Dims>> crop;
};

/// Metadata for `path`: explicit > sidecar `<path>.json` > file-name convention.
VolumeMeta resolve_volume_meta(const VolumeSource& source);

/// Loads and preprocesses (crop, then downsample) the configured volume.
ScalarField load_volume(const VolumeSource& source);

struct ScorerSelection {
  std::optional<std::filesystem::path> reference_tf;     // rendered per view pose
  std::optional<std::filesystem::path> reference_image;  // fixed float32 image
  std::optional<std::string> endpoint;
};

struct RunConfig {
  VolumeSource volume;
  std::string positive_prompt;
  std::vector<std::string> user_negatives;
  std::optional<std::filesystem::path> prompt_pool;
  EngineSettings engine;
  ScorerSelection scorer;
  std::filesystem::path output_directory = "runs";
  bool timestamped_output = true;
  int snapshot_interval = 0;

  /// Field-level checks, including that referenced files exist.
  void validate() const;
};

/// Parses a config document. Relative paths are resolved against `base_dir`.
/// Unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
/// Reads a config file and applies `overrides` (see apply_overrides) first.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

/// Applies "dotted.key=value" overrides (value parsed as JSON, falling back
/// to a plain string) onto a config document.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

/// Every setting with defaults materialized; absolute paths.
nlohmann::json to_json(const RunConfig& config);

}  // namespace tfopt
