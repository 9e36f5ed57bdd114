// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfopt/augmentation.hpp"
#include "tfopt/common.hpp"
#include "tfopt/protocol.hpp"
#include "tfopt/renderer.hpp"
#include "tfopt/transfer_function.hpp"
#include "tfopt/volume.hpp"

namespace tfopt {

struct PromptSet {
  std::string positive;
  std::vector<std::string> user_negatives;
  std::vector<std::string> pool_negatives;

  /// Pool samples followed by the user's negatives.
  std::vector<std::string> negatives() const;
};

/// One prompt per line, UTF-8. Blank lines are skipped.
class PromptPool {
 public:
  explicit PromptPool(std::vector<std::string> prompts);
  static PromptPool load(const std::filesystem::path& path);

  std::size_t size() const { return prompts_.size(); }
  /// K prompts drawn uniformly with replacement.
  std::vector<std::string> sample(std::size_t count, Rng& rng) const;

 private:
  std::vector<std::string> prompts_;
};

std::vector<std::string> sample_negatives(const std::filesystem::path& pool_file,
                                          std::size_t count, Rng& rng);

struct ScoreResult {
  double loss = 0.0;
  RgbImage dloss_dimage;
  std::vector<double> logits;
};

/// Per-view information handed to a scorer alongside the image.
struct ScoreContext {
  int step = 0;
  int view = 0;
  CameraPose pose;
  const PromptSet* prompts = nullptr;
  const RgbImage* background = nullptr;
};

/// Raised for scorer failures the optimizer treats as skippable.
class ScorerError : public Error {
 public:
  using Error::Error;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScoreResult score(const RgbImage& image, const ScoreContext& context) = 0;
  virtual std::string description() const = 0;
};

/// Mean squared error over all H*W*3 values.
ScoreResult score_reference(const RgbImage& image, const RgbImage& reference);

/// Scores every view against one fixed image.
class ReferenceImageScorer : public Scorer {
 public:
  explicit ReferenceImageScorer(RgbImage reference) : reference_(std::move(reference)) {}
  ScoreResult score(const RgbImage& image, const ScoreContext& context) override;
  std::string description() const override { return "reference-image"; }

 private:
  RgbImage reference_;
};

/// Renders a reference transfer function at the view's pose over the view's
/// background and scores against it with score_reference.
class ReferenceRenderScorer : public Scorer {
 public:
  ReferenceRenderScorer(const ScalarField& field, TFRealized reference, RenderConfig config);
  ScoreResult score(const RgbImage& image, const ScoreContext& context) override;
  std::string description() const override { return "reference-tf"; }

  RgbImage render_reference(const CameraPose& pose, const RgbImage& background) const;

 private:
  const ScalarField& field_;
  TFRealized reference_;
  RenderConfig config_;
};

/// Client side of the scorer wire protocol. Connects lazily and reconnects
/// after a transport failure.
class RemoteScorer : public Scorer {
 public:
  explicit RemoteScorer(std::string endpoint);
  ScoreResult score(const RgbImage& image, const ScoreContext& context) override;
  std::string description() const override { return "remote:" + endpoint_; }

  /// Handshake header from the current connection (null before connecting).
  const nlohmann::json& handshake() const { return handshake_; }
  void connect();

 private:
  std::string endpoint_;
  std::unique_ptr<Stream> stream_;
  nlohmann::json handshake_;
  std::uint64_t next_id_ = 1;
};

/// Builds the request frame for one image.
Frame make_score_request(std::uint64_t id, const RgbImage& image, const ScoreContext& context);

/// Validates a response frame against its request and converts it.
/// Throws ScorerError for error frames, mismatches or non-finite values.
ScoreResult parse_score_response(const Frame& response, std::uint64_t id, int width, int height);

// Service side of the wire protocol.
Frame make_handshake(const nlohmann::json& info);
Frame make_score_response(std::uint64_t id, const ScoreResult& result);
Frame make_error_response(std::uint64_t id, const std::string& message);

struct ScoreRequest {
  std::uint64_t id = 0;
  RgbImage image;
  std::string positive;
  std::vector<std::string> negatives;
  nlohmann::json context;  // null when absent
};

ScoreRequest parse_score_request(const Frame& frame);

using ScoreHandler = std::function<ScoreResult(const ScoreRequest&)>;

/// Sends the handshake, then answers score requests until the peer closes.
/// Handler exceptions become error frames; the loop keeps running.
void serve_scorer(Stream& stream, const nlohmann::json& info, const ScoreHandler& handler);

}  // namespace tfopt
