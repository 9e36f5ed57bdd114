// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/config.hpp"

#include <fstream>
#include <set>

namespace tfopt {

namespace {

using nlohmann::json;

// Reads one JSON object section, remembering which keys were consumed so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& doc, std::string prefix) : prefix_(std::move(prefix))
  {
    if (doc.is_null())
      return;
    if (!doc.is_object())
      throw ValidationError(prefix_, "expected an object");
    doc_ = doc;
  }

  std::string key(const std::string& name) const
  {
    return prefix_.empty() ? name : prefix_ + "." + name;
  }

  bool has(const std::string& name) const { return doc_.contains(name) && !doc_[name].is_null(); }

  template <typename T>
  T get(const std::string& name, T fallback)
  {
    seen_.insert(name);
    if (!has(name))
      return fallback;
    try {
      return doc_.at(name).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(key(name), "has the wrong type");
    }
  }

  json sub(const std::string& name)
  {
    seen_.insert(name);
    return has(name) ? doc_.at(name) : json();
  }

  void finish() const
  {
    for (const auto& item : doc_.items()) {
      if (!seen_.contains(item.key()))
        throw ValidationError(key(item.key()), "unknown key");
    }
  }

 private:
  json doc_ = json::object();
  std::string prefix_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
  std::filesystem::path path(p);
  if (path.is_relative())
    path = base / path;
  return path.lexically_normal();
}

Dims read_dims(const json& j, const std::string& key)
{
  try {
    auto v = j.get<std::vector<int>>();
    if (v.size() != 3)
      throw ValidationError(key, "expected 3 integers");
    return {v[0], v[1], v[2]};
  } catch (const json::exception&) {
    throw ValidationError(key, "expected 3 integers");
  }
}

Vec3 read_vec3(const json& j, const std::string& key)
{
  try {
    auto v = j.get<std::vector<double>>();
    if (v.size() != 3)
      throw ValidationError(key, "expected 3 numbers");
    return {v[0], v[1], v[2]};
  } catch (const json::exception&) {
    throw ValidationError(key, "expected 3 numbers");
  }
}

}  // namespace

VolumeMeta resolve_volume_meta(const VolumeSource& source)
{
  if (source.meta)
    return *source.meta;
  std::filesystem::path sidecar = source.path;
  sidecar += ".json";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError("malformed sidecar " + sidecar.string() + ": " + e.what());
    }
    Section s(doc, "sidecar");
    VolumeMeta meta;
    if (!s.has("dims") || !s.has("dtype"))
      throw FormatError("sidecar " + sidecar.string() + " needs dims and dtype");
    meta.dims = read_dims(s.sub("dims"), "sidecar.dims");
    meta.dtype = parse_dtype(s.get<std::string>("dtype", "uint8"));
    if (s.has("spacing"))
      meta.spacing = read_vec3(s.sub("spacing"), "sidecar.spacing");
    else
      s.sub("spacing");
    s.finish();
    return meta;
  }
  if (auto meta = parse_volume_filename(source.path.filename().string()))
    return *meta;
  throw ValidationError("volume", "no metadata for " + source.path.string()
                                      + " (give volume.dims/dtype, a .json sidecar, or a "
                                        "name_XxYxZ_dtype.raw file name)");
}

ScalarField load_volume(const VolumeSource& source)
{
  ScalarField field = load_raw(source.path, resolve_volume_meta(source));
  if (source.crop)
    field = crop(field, source.crop->first, source.crop->second);
  if (source.downsample > 1)
    field = downsample(field, source.downsample);
  require_range(field);
  return field;
}

void RunConfig::validate() const
{
  if (volume.path.empty())
    throw ValidationError("volume.path", "is required");
  if (!std::filesystem::exists(volume.path))
    throw ValidationError("volume.path", "file not found: " + volume.path.string());
  if (volume.downsample < 1)
    throw ValidationError("volume.downsample", "must be >= 1");

  const int scorers = (scorer.reference_tf ? 1 : 0) + (scorer.reference_image ? 1 : 0)
                      + (scorer.endpoint ? 1 : 0);
  if (scorers != 1)
    throw ValidationError("scorer", "configure exactly one of scorer.reference_tf, "
                                    "scorer.reference_image and scorer.endpoint");
  if (scorer.reference_tf && !std::filesystem::exists(*scorer.reference_tf))
    throw ValidationError("scorer.reference_tf", "file not found: " + scorer.reference_tf->string());
  if (scorer.reference_image && !std::filesystem::exists(*scorer.reference_image))
    throw ValidationError("scorer.reference_image",
                          "file not found: " + scorer.reference_image->string());
  if (scorer.endpoint) {
    if (positive_prompt.empty())
      throw ValidationError("prompt.positive", "is required with a remote scorer");
    if (!prompt_pool && user_negatives.empty())
      throw ValidationError("prompt", "a remote scorer needs negatives: set prompt.pool or "
                                      "prompt.user_negatives");
  }
  if (prompt_pool && !std::filesystem::exists(*prompt_pool))
    throw ValidationError("prompt.pool", "file not found: " + prompt_pool->string());
  if (snapshot_interval < 0)
    throw ValidationError("output.snapshot_interval", "must be >= 0");
  engine.validate();
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir)
{
  RunConfig cfg;
  Section root(doc, "");

  {
    Section s(root.sub("volume"), "volume");
    const auto path = s.get<std::string>("path", "");
    if (!path.empty())
      cfg.volume.path = resolve(base_dir, path);
    const bool has_dims = s.has("dims");
    const bool has_dtype = s.has("dtype");
    json dims = s.sub("dims");
    const auto dtype = s.get<std::string>("dtype", "");
    json spacing = s.sub("spacing");
    if (has_dims != has_dtype)
      throw ValidationError("volume", "dims and dtype must be given together");
    if (has_dims) {
      VolumeMeta meta;
      meta.dims = read_dims(dims, "volume.dims");
      meta.dtype = parse_dtype(dtype);
      if (!spacing.is_null())
        meta.spacing = read_vec3(spacing, "volume.spacing");
      cfg.volume.meta = meta;
    } else if (!spacing.is_null()) {
      throw ValidationError("volume.spacing", "requires volume.dims and volume.dtype");
    }
    cfg.volume.downsample = s.get<int>("downsample", 1);
    json crop = s.sub("crop");
    if (!crop.is_null()) {
      Section c(crop, "volume.crop");
      if (!c.has("lo") || !c.has("hi"))
        throw ValidationError("volume.crop", "needs lo and hi");
      cfg.volume.crop = std::make_pair(read_dims(c.sub("lo"), "volume.crop.lo"),
                                       read_dims(c.sub("hi"), "volume.crop.hi"));
      c.finish();
    }
    s.finish();
  }
  {
    Section s(root.sub("prompt"), "prompt");
    cfg.positive_prompt = s.get<std::string>("positive", "");
    cfg.user_negatives = s.get<std::vector<std::string>>("user_negatives", {});
    const auto pool = s.get<std::string>("pool", "");
    if (!pool.empty())
      cfg.prompt_pool = resolve(base_dir, pool);
    s.finish();
  }
  EngineSettings& e = cfg.engine;
  {
    Section s(root.sub("tf"), "tf");
    const auto m = s.get<long>("control_points", static_cast<long>(e.control_points));
    if (m < 2)
      throw ValidationError("tf.control_points", "at least 2 control points are required");
    e.control_points = static_cast<std::size_t>(m);
    e.target_transmittance = s.get<double>("target_transmittance", e.target_transmittance);
    e.init.tolerance = s.get<double>("init_tolerance", e.init.tolerance);
    e.init.max_iterations = s.get<int>("init_max_iterations", e.init.max_iterations);
    e.init.histogram_eps = s.get<double>("histogram_eps", e.init.histogram_eps);
    s.finish();
  }
  {
    Section s(root.sub("render"), "render");
    RenderConfig& r = e.render;
    r.width = s.get<int>("width", r.width);
    r.height = s.get<int>("height", r.height);
    r.step_size = s.get<double>("step_size", r.step_size);
    r.max_steps = s.get<int>("max_steps", r.max_steps);
    r.fov_y_degrees = s.get<double>("fov_y_degrees", r.fov_y_degrees);
    s.finish();
  }
  {
    Section s(root.sub("objective"), "objective");
    ObjectiveConfig& o = e.objective;
    o.beta_shape = s.get<double>("beta_shape", o.beta_shape);
    o.density_weight = s.get<double>("density_weight", o.density_weight);
    o.lambda_density = s.get<double>("lambda_density", o.lambda_density);
    o.lambda_color = s.get<double>("lambda_color", o.lambda_color);
    o.prior_start_step = s.get<int>("prior_start_step", o.prior_start_step);
    o.augment_start_step = s.get<int>("augment_start_step", o.augment_start_step);
    o.negatives_per_step = s.get<int>("negatives_per_step", o.negatives_per_step);
    o.transmittance_eps = s.get<double>("transmittance_eps", o.transmittance_eps);
    s.finish();
  }
  {
    Section s(root.sub("optimizer"), "optimizer");
    OptimizerConfig& o = e.optimizer;
    o.learning_rate = s.get<double>("learning_rate", o.learning_rate);
    o.momentum = s.get<double>("momentum", o.momentum);
    o.total_steps = s.get<int>("total_steps", o.total_steps);
    o.views_per_step = s.get<int>("views_per_step", o.views_per_step);
    o.resample_negatives_per_view =
        s.get<bool>("resample_negatives_per_view", o.resample_negatives_per_view);
    s.finish();
  }
  {
    Section s(root.sub("scorer"), "scorer");
    const auto ref = s.get<std::string>("reference_tf", "");
    if (!ref.empty())
      cfg.scorer.reference_tf = resolve(base_dir, ref);
    const auto image = s.get<std::string>("reference_image", "");
    if (!image.empty())
      cfg.scorer.reference_image = resolve(base_dir, image);
    const auto endpoint = s.get<std::string>("endpoint", "");
    if (!endpoint.empty())
      cfg.scorer.endpoint = endpoint;
    s.finish();
  }
  {
    Section s(root.sub("output"), "output");
    cfg.output_directory = resolve(base_dir, s.get<std::string>("directory", "runs"));
    cfg.timestamped_output = s.get<bool>("timestamped", cfg.timestamped_output);
    cfg.snapshot_interval = s.get<int>("snapshot_interval", cfg.snapshot_interval);
    s.finish();
  }
  e.seed = root.get<std::uint64_t>("seed", e.seed);
  root.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides)
{
  std::ifstream in(path);
  if (!in)
    throw ValidationError("config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  apply_overrides(doc, overrides);
  return parse_run_config(doc, std::filesystem::absolute(path).parent_path());
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides)
{
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("--set", "expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty())
        throw ValidationError("--set", "empty key component in '" + key + "'");
      if (!node->is_object()) {
        if (!node->is_null())
          throw ValidationError(key, "cannot override inside a non-object value");
        *node = json::object();
      }
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

json to_json(const RunConfig& c)
{
  const EngineSettings& e = c.engine;
  json volume = {{"path", c.volume.path.string()}, {"downsample", c.volume.downsample}};
  const VolumeMeta meta =
      c.volume.meta ? *c.volume.meta : resolve_volume_meta(c.volume);
  volume["dims"] = {meta.dims[0], meta.dims[1], meta.dims[2]};
  volume["dtype"] = to_string(meta.dtype);
  volume["spacing"] = {meta.spacing.x, meta.spacing.y, meta.spacing.z};
  if (c.volume.crop) {
    const auto& [lo, hi] = *c.volume.crop;
    volume["crop"] = {{"lo", {lo[0], lo[1], lo[2]}}, {"hi", {hi[0], hi[1], hi[2]}}};
  }

  json prompt = {{"positive", c.positive_prompt}, {"user_negatives", c.user_negatives}};
  if (c.prompt_pool)
    prompt["pool"] = c.prompt_pool->string();

  json scorer = json::object();
  if (c.scorer.reference_tf)
    scorer["reference_tf"] = c.scorer.reference_tf->string();
  if (c.scorer.reference_image)
    scorer["reference_image"] = c.scorer.reference_image->string();
  if (c.scorer.endpoint)
    scorer["endpoint"] = *c.scorer.endpoint;

  return {
      {"volume", volume},
      {"prompt", prompt},
      {"tf",
       {{"control_points", e.control_points},
        {"target_transmittance", e.target_transmittance},
        {"init_tolerance", e.init.tolerance},
        {"init_max_iterations", e.init.max_iterations},
        {"histogram_eps", e.init.histogram_eps}}},
      {"render",
       {{"width", e.render.width},
        {"height", e.render.height},
        {"step_size", e.render.step_size},
        {"max_steps", e.render.max_steps},
        {"fov_y_degrees", e.render.fov_y_degrees}}},
      {"objective",
       {{"beta_shape", e.objective.beta_shape},
        {"density_weight", e.objective.density_weight},
        {"lambda_density", e.objective.lambda_density},
        {"lambda_color", e.objective.lambda_color},
        {"prior_start_step", e.objective.prior_start_step},
        {"augment_start_step", e.objective.augment_start_step},
        {"negatives_per_step", e.objective.negatives_per_step},
        {"transmittance_eps", e.objective.transmittance_eps}}},
      {"optimizer",
       {{"learning_rate", e.optimizer.learning_rate},
        {"momentum", e.optimizer.momentum},
        {"total_steps", e.optimizer.total_steps},
        {"views_per_step", e.optimizer.views_per_step},
        {"resample_negatives_per_view", e.optimizer.resample_negatives_per_view}}},
      {"scorer", scorer},
      {"output",
       {{"directory", c.output_directory.string()},
        {"timestamped", c.timestamped_output},
        {"snapshot_interval", c.snapshot_interval}}},
      {"seed", e.seed},
  };
}

}  // namespace tfopt
