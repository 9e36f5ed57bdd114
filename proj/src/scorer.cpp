// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/scorer.hpp"

#include <fstream>

namespace tfopt {

std::vector<std::string> PromptSet::negatives() const
{
  std::vector<std::string> all = pool_negatives;
  all.insert(all.end(), user_negatives.begin(), user_negatives.end());
  return all;
}

PromptPool::PromptPool(std::vector<std::string> prompts) : prompts_(std::move(prompts))
{
  if (prompts_.empty())
    throw DegenerateInputError("prompt pool is empty");
}

PromptPool PromptPool::load(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open prompt pool " + path.string());
  std::vector<std::string> prompts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos)
      prompts.push_back(line);
  }
  if (prompts.empty())
    throw DegenerateInputError("prompt pool " + path.string() + " has no prompts");
  return PromptPool(std::move(prompts));
}

std::vector<std::string> PromptPool::sample(std::size_t count, Rng& rng) const
{
  std::uniform_int_distribution<std::size_t> pick(0, prompts_.size() - 1);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(prompts_[pick(rng)]);
  return out;
}

std::vector<std::string> sample_negatives(const std::filesystem::path& pool_file,
                                          std::size_t count, Rng& rng)
{
  if (count < 1)
    throw ValidationError("negatives_per_step", "must be >= 1");
  return PromptPool::load(pool_file).sample(count, rng);
}

ScoreResult score_reference(const RgbImage& image, const RgbImage& reference)
{
  if (!image.same_shape(reference))
    throw ValidationError("reference", "image is " + std::to_string(image.width) + "x"
                                           + std::to_string(image.height) + ", reference is "
                                           + std::to_string(reference.width) + "x"
                                           + std::to_string(reference.height));
  ScoreResult out;
  out.dloss_dimage = RgbImage(image.width, image.height);
  const std::size_t n = image.pixels.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = image.pixels[i] - reference.pixels[i];
    sum += diff * diff;
    out.dloss_dimage.pixels[i] = 2.0 * diff * inv_n;
  }
  out.loss = sum * inv_n;
  return out;
}

ScoreResult ReferenceImageScorer::score(const RgbImage& image, const ScoreContext&)
{
  return score_reference(image, reference_);
}

ReferenceRenderScorer::ReferenceRenderScorer(const ScalarField& field, TFRealized reference,
                                             RenderConfig config)
    : field_(field), reference_(std::move(reference)), config_(config)
{
  reference_.validate();
}

RgbImage ReferenceRenderScorer::render_reference(const CameraPose& pose,
                                                 const RgbImage& background) const
{
  return render(field_, reference_, pose, config_, background).image;
}

ScoreResult ReferenceRenderScorer::score(const RgbImage& image, const ScoreContext& context)
{
  const RgbImage fallback(image.width, image.height, 0.0);
  const RgbImage& background = context.background != nullptr ? *context.background : fallback;
  return score_reference(image, render_reference(context.pose, background));
}

Frame make_score_request(std::uint64_t id, const RgbImage& image, const ScoreContext& context)
{
  Frame frame;
  nlohmann::json& h = frame.header;
  h["version"] = kProtocolVersion;
  h["type"] = "score";
  h["id"] = id;
  h["height"] = image.height;
  h["width"] = image.width;
  if (context.prompts != nullptr) {
    h["positive"] = context.prompts->positive;
    h["negatives"] = context.prompts->negatives();
  } else {
    h["positive"] = "";
    h["negatives"] = nlohmann::json::array();
  }
  h["context"] = {{"step", context.step},
                  {"view", context.view},
                  {"yaw", context.pose.yaw},
                  {"pitch", context.pose.pitch},
                  {"distance", context.pose.distance}};
  frame.payload = encode_floats(image.pixels);
  return frame;
}

ScoreResult parse_score_response(const Frame& response, std::uint64_t id, int width, int height)
{
  const nlohmann::json& h = response.header;
  auto fail = [&](const std::string& what) -> ScorerError {
    return ScorerError("scorer response for request " + std::to_string(id) + ": " + what);
  };
  try {
    if (h.value("version", -1) != kProtocolVersion)
      throw fail("protocol version mismatch (got " + h.value("version", nlohmann::json()).dump()
                 + ")");
    if (!h.contains("id") || h.at("id").get<std::uint64_t>() != id)
      throw fail("request id mismatch");
    const std::string type = h.value("type", "");
    if (type == "error")
      throw fail("service error: " + h.value("message", std::string("(no message)")));
    if (type != "result")
      throw fail("unexpected frame type '" + type + "'");
    if (h.at("height").get<int>() != height || h.at("width").get<int>() != width)
      throw fail("gradient shape does not match the image");
    if (!h.contains("loss") || !h.at("loss").is_number())
      throw fail("missing numeric loss");
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed header: ") + e.what());
  }

  ScoreResult out;
  out.loss = h.at("loss").get<double>();
  if (!std::isfinite(out.loss))
    throw fail("non-finite loss");
  const std::size_t expected = static_cast<std::size_t>(width) * height * 3;
  if (response.payload.size() != expected)
    throw fail("payload has " + std::to_string(response.payload.size()) + " values, expected "
               + std::to_string(expected));
  out.dloss_dimage = RgbImage(width, height);
  for (std::size_t i = 0; i < expected; ++i) {
    const double g = response.payload[i];
    if (!std::isfinite(g))
      throw fail("non-finite gradient");
    out.dloss_dimage.pixels[i] = g;
  }
  if (h.contains("logits") && h.at("logits").is_array())
    out.logits = h.at("logits").get<std::vector<double>>();
  return out;
}

RemoteScorer::RemoteScorer(std::string endpoint) : endpoint_(std::move(endpoint)) {}

void RemoteScorer::connect()
{
  stream_ = open_endpoint(endpoint_);
  Frame hello = read_frame(*stream_);
  if (hello.header.value("type", "") != "handshake")
    throw ProtocolError("scorer service did not open with a handshake frame");
  if (hello.header.value("version", -1) != kProtocolVersion)
    throw ProtocolError("scorer service speaks protocol version "
                        + hello.header.value("version", nlohmann::json()).dump()
                        + ", expected " + std::to_string(kProtocolVersion));
  handshake_ = hello.header;
}

ScoreResult RemoteScorer::score(const RgbImage& image, const ScoreContext& context)
{
  const std::uint64_t id = next_id_++;
  try {
    if (!stream_)
      connect();
    write_frame(*stream_, make_score_request(id, image, context));
    const Frame response = read_frame(*stream_);
    return parse_score_response(response, id, image.width, image.height);
  } catch (const ProtocolError& e) {
    stream_.reset();
    throw ScorerError("step " + std::to_string(context.step) + " view "
                      + std::to_string(context.view) + ": " + e.what());
  } catch (const ScorerError& e) {
    throw ScorerError("step " + std::to_string(context.step) + " view "
                      + std::to_string(context.view) + ": " + e.what());
  }
}

Frame make_handshake(const nlohmann::json& info)
{
  Frame frame;
  frame.header = info.is_object() ? info : nlohmann::json::object();
  frame.header["version"] = kProtocolVersion;
  frame.header["type"] = "handshake";
  return frame;
}

Frame make_score_response(std::uint64_t id, const ScoreResult& result)
{
  Frame frame;
  frame.header = {{"version", kProtocolVersion},
                  {"type", "result"},
                  {"id", id},
                  {"height", result.dloss_dimage.height},
                  {"width", result.dloss_dimage.width},
                  {"loss", result.loss}};
  if (!result.logits.empty())
    frame.header["logits"] = result.logits;
  frame.payload = encode_floats(result.dloss_dimage.pixels);
  return frame;
}

Frame make_error_response(std::uint64_t id, const std::string& message)
{
  Frame frame;
  frame.header = {{"version", kProtocolVersion}, {"type", "error"}, {"id", id}, {"message", message}};
  return frame;
}

ScoreRequest parse_score_request(const Frame& frame)
{
  const nlohmann::json& h = frame.header;
  ScoreRequest req;
  try {
    if (h.value("version", -1) != kProtocolVersion)
      throw ProtocolError("protocol version mismatch");
    if (h.value("type", "") != "score")
      throw ProtocolError("expected a score request");
    req.id = h.at("id").get<std::uint64_t>();
    const int height = h.at("height").get<int>();
    const int width = h.at("width").get<int>();
    if (width <= 0 || height <= 0)
      throw ProtocolError("image dimensions must be positive");
    if (frame.payload.size() != static_cast<std::size_t>(width) * height * 3)
      throw ProtocolError("payload size does not match the image dimensions");
    req.image = RgbImage(width, height);
    req.image.pixels = decode_floats(frame.payload);
    req.positive = h.value("positive", "");
    if (h.contains("negatives"))
      req.negatives = h.at("negatives").get<std::vector<std::string>>();
    if (h.contains("context"))
      req.context = h.at("context");
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed score request: ") + e.what());
  }
  return req;
}

void serve_scorer(Stream& stream, const nlohmann::json& info, const ScoreHandler& handler)
{
  write_frame(stream, make_handshake(info));
  while (!stream.at_end()) {
    const Frame frame = read_frame(stream);
    const std::uint64_t id = frame.header.is_object() && frame.header.contains("id")
                                     && frame.header.at("id").is_number_unsigned()
                                 ? frame.header.at("id").get<std::uint64_t>()
                                 : 0;
    Frame reply;
    try {
      reply = make_score_response(id, handler(parse_score_request(frame)));
    } catch (const std::exception& e) {
      reply = make_error_response(id, e.what());
    }
    write_frame(stream, reply);
  }
}

}  // namespace tfopt
