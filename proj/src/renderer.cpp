// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/renderer.hpp"

#include <algorithm>
#include <limits>

#include "parallel.hpp"

namespace tfopt {

namespace {

constexpr int kRowsPerChunk = 8;

// Steps whose length falls below this fraction of delta are dropped.
constexpr double kMinPartialStep = 1e-9;

struct StepPlan {
  std::size_t count = 0;
  double last = 0.0;
};

StepPlan plan_steps(const Ray& ray, double step, int max_steps)
{
  StepPlan plan;
  if (!ray.hit)
    return plan;
  const double len = ray.t_exit - ray.t_entry;
  const double full = std::floor(len / step);
  const double rest = len - full * step;
  auto count = static_cast<std::size_t>(full);
  double last = step;
  if (rest > kMinPartialStep * step) {
    ++count;
    last = rest;
  }
  if (count > static_cast<std::size_t>(max_steps)) {
    count = static_cast<std::size_t>(max_steps);
    last = step;
  }
  plan.count = count;
  plan.last = last;
  return plan;
}

std::size_t chunk_count(int height)
{
  return static_cast<std::size_t>((height + kRowsPerChunk - 1) / kRowsPerChunk);
}

}  // namespace

Vec3 camera_position(const ScalarField& field, const CameraPose& pose)
{
  const double cp = std::cos(pose.pitch);
  const Vec3 dir{cp * std::cos(pose.yaw), cp * std::sin(pose.yaw), std::sin(pose.pitch)};
  return field.center() + dir * pose.distance;
}

double RenderConfig::resolved_step(const ScalarField& field) const
{
  return step_size > 0.0 ? step_size : 0.5 * field.min_spacing();
}

void RenderConfig::validate() const
{
  if (width < 1 || height < 1)
    throw ValidationError("render.width/height", "image size must be positive");
  if (max_steps < 1)
    throw ValidationError("render.max_steps", "must be >= 1");
  if (!(fov_y_degrees > 0.0 && fov_y_degrees < 180.0))
    throw ValidationError("render.fov_y_degrees", "must be in (0, 180)");
  if (!std::isfinite(step_size))
    throw ValidationError("render.step_size", "must be finite");
}

std::vector<Ray> generate_rays(const ScalarField& field, const CameraPose& pose,
                               const RenderConfig& config)
{
  const Vec3 eye = camera_position(field, pose);
  const Vec3 forward = normalize(field.center() - eye);
  Vec3 up{0.0, 0.0, 1.0};
  Vec3 right = cross(forward, up);
  if (length(right) < 1e-12)  // looking straight along +-z
    right = Vec3{0.0, 1.0, 0.0};
  right = normalize(right);
  up = cross(right, forward);

  const double tan_half = std::tan(0.5 * config.fov_y_degrees * kPi / 180.0);
  const double aspect = static_cast<double>(config.width) / config.height;
  const Vec3 ext = field.extent();

  std::vector<Ray> rays(static_cast<std::size_t>(config.width) * config.height);
  for (int y = 0; y < config.height; ++y) {
    for (int x = 0; x < config.width; ++x) {
      const double u = (2.0 * (x + 0.5) / config.width - 1.0) * tan_half * aspect;
      const double v = (1.0 - 2.0 * (y + 0.5) / config.height) * tan_half;
      Ray& ray = rays[static_cast<std::size_t>(y) * config.width + x];
      ray.origin = eye;
      ray.direction = normalize(forward + right * u + up * v);

      double t_near = -std::numeric_limits<double>::infinity();
      double t_far = std::numeric_limits<double>::infinity();
      bool miss = false;
      for (int a = 0; a < 3 && !miss; ++a) {
        const double o = eye[a];
        const double d = ray.direction[a];
        if (std::abs(d) < 1e-15) {
          miss = o < 0.0 || o > ext[a];
          continue;
        }
        double t0 = (0.0 - o) / d;
        double t1 = (ext[a] - o) / d;
        if (t0 > t1)
          std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
      }
      t_near = std::max(t_near, 0.0);
      if (!miss && t_far > t_near) {
        ray.hit = true;
        ray.t_entry = t_near;
        ray.t_exit = t_far;
      }
    }
  }
  return rays;
}

double RenderOutput::mean_hit_transmittance() const
{
  if (hit_rays == 0)
    return 1.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < cache.hit.size(); ++r) {
    if (cache.hit[r])
      sum += transmittance.values[r];
  }
  return sum / static_cast<double>(hit_rays);
}

RenderOutput render(const ScalarField& field, const TFRealized& tf, const CameraPose& pose,
                    const RenderConfig& config, const RgbImage& background)
{
  config.validate();
  if (background.width != config.width || background.height != config.height)
    throw ValidationError("background", "background size does not match the render size");

  const std::vector<Ray> rays = generate_rays(field, pose, config);
  const double step = config.resolved_step(field);
  const int width = config.width;
  const int height = config.height;

  RenderOutput out;
  out.color = RgbImage(width, height);
  out.transmittance = ScalarImage(width, height, 1.0);
  out.image = RgbImage(width, height);

  MarchCache& cache = out.cache;
  cache.step = step;
  cache.width = width;
  cache.height = height;
  cache.offsets.assign(rays.size() + 1, 0);
  cache.last_step.assign(rays.size(), 0.0);
  cache.hit.assign(rays.size(), 0);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const StepPlan plan = plan_steps(rays[r], step, config.max_steps);
    cache.offsets[r + 1] = cache.offsets[r] + plan.count;
    cache.last_step[r] = plan.last;
    cache.hit[r] = rays[r].hit ? 1 : 0;
    out.hit_rays += rays[r].hit ? 1 : 0;
  }
  cache.scalars.assign(cache.offsets.back(), 0.0);

  detail::parallel_chunks(chunk_count(height), [&](std::size_t chunk) {
    const int y_begin = static_cast<int>(chunk) * kRowsPerChunk;
    const int y_end = std::min(height, y_begin + kRowsPerChunk);
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t r = static_cast<std::size_t>(y) * width + x;
        const Ray& ray = rays[r];
        const std::size_t begin = cache.offsets[r];
        const std::size_t count = cache.offsets[r + 1] - begin;

        double transmittance = 1.0;
        Rgb color{0.0, 0.0, 0.0};
        for (std::size_t n = 0; n < count; ++n) {
          const double len = n + 1 == count ? cache.last_step[r] : step;
          const double t = ray.t_entry + static_cast<double>(n) * step + 0.5 * len;
          const double s = field.sample(ray.origin + ray.direction * t);
          cache.scalars[begin + n] = s;

          const TFSample tfs = eval(tf, s);
          const double attenuation = std::exp(-tfs.density * len);
          const double weight = transmittance * (1.0 - attenuation);
          for (int c = 0; c < 3; ++c)
            color[c] += weight * tfs.color[c];
          transmittance *= attenuation;
        }

        out.transmittance.at(x, y) = transmittance;
        for (int c = 0; c < 3; ++c) {
          out.color.at(x, y, c) = color[c];
          out.image.at(x, y, c) = color[c] + transmittance * background.at(x, y, c);
        }
      }
    }
  });
  return out;
}

RenderOutput render(const ScalarField& field, const TFParams& params, const CameraPose& pose,
                    const RenderConfig& config, const RgbImage& background)
{
  return render(field, realize(params, field.value_min(), field.value_max()), pose, config,
                background);
}

RealizedGradient render_adjoint_realized(const TFRealized& tf, const RenderOutput& forward,
                                         const RgbImage& background,
                                         const RgbImage& dloss_dimage,
                                         const ScalarImage* dloss_dtransmittance)
{
  const MarchCache& cache = forward.cache;
  if (cache.empty())
    throw Error("render_adjoint: forward pass carries no march cache");
  const int width = cache.width;
  const int height = cache.height;
  if (dloss_dimage.width != width || dloss_dimage.height != height
      || background.width != width || background.height != height)
    throw ValidationError("adjoint", "image adjoint/background size does not match the render");
  if (dloss_dtransmittance != nullptr
      && (dloss_dtransmittance->width != width || dloss_dtransmittance->height != height))
    throw ValidationError("adjoint", "transmittance adjoint size does not match the render");

  const std::size_t m = tf.control_points();
  const std::size_t chunks = chunk_count(height);
  std::vector<RealizedGradient> partial(chunks, RealizedGradient(m));

  detail::parallel_chunks(chunks, [&](std::size_t chunk) {
    RealizedGradient& grad = partial[chunk];
    struct StepState {
      TFSegmentSample seg;
      double len;
      double attenuation;
      double transmittance_before;
    };
    std::vector<StepState> steps;

    const int y_begin = static_cast<int>(chunk) * kRowsPerChunk;
    const int y_end = std::min(height, y_begin + kRowsPerChunk);
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t r = static_cast<std::size_t>(y) * width + x;
        const std::size_t begin = cache.offsets[r];
        const std::size_t count = cache.offsets[r + 1] - begin;
        if (count == 0)
          continue;

        Rgb dloss_dcolor_total;
        double dloss_dtrans = 0.0;
        for (int c = 0; c < 3; ++c) {
          dloss_dcolor_total[c] = dloss_dimage.at(x, y, c);
          dloss_dtrans += dloss_dimage.at(x, y, c) * background.at(x, y, c);
        }
        if (dloss_dtransmittance != nullptr)
          dloss_dtrans += dloss_dtransmittance->at(x, y);
        if (dloss_dtrans == 0.0 && dloss_dcolor_total == Rgb{0.0, 0.0, 0.0})
          continue;

        // replay the forward recurrence for this ray
        steps.resize(count);
        double transmittance = 1.0;
        for (std::size_t n = 0; n < count; ++n) {
          StepState& st = steps[n];
          st.len = n + 1 == count ? cache.last_step[r] : cache.step;
          st.seg = eval_segment(tf, cache.scalars[begin + n]);
          st.attenuation = std::exp(-st.seg.value.density * st.len);
          st.transmittance_before = transmittance;
          transmittance *= st.attenuation;
        }

        // dloss_dtrans holds dL/dT_n while walking back from n = N
        for (std::size_t n = count; n-- > 0;) {
          const StepState& st = steps[n];
          const double emitted = 1.0 - st.attenuation;
          double dloss_dot_color = 0.0;
          Rgb dloss_dcolor;
          for (int c = 0; c < 3; ++c) {
            dloss_dot_color += dloss_dcolor_total[c] * st.seg.value.color[c];
            dloss_dcolor[c] = dloss_dcolor_total[c] * st.transmittance_before * emitted;
          }
          const double dloss_dattenuation =
              st.transmittance_before * (dloss_dtrans - dloss_dot_color);
          const double dloss_ddensity = dloss_dattenuation * (-st.len * st.attenuation);
          accumulate_sample_gradient(st.seg, tf, dloss_ddensity, dloss_dcolor, grad);
          dloss_dtrans = emitted * dloss_dot_color + st.attenuation * dloss_dtrans;
        }
      }
    }
  });

  RealizedGradient total(m);
  for (const RealizedGradient& g : partial)
    total += g;
  return total;
}

std::vector<double> render_adjoint(const ScalarField& field, const TFParams& params,
                                   const RenderOutput& forward, const RgbImage& background,
                                   const RgbImage& dloss_dimage,
                                   const ScalarImage* dloss_dtransmittance)
{
  const TFRealized tf = realize(params, field.value_min(), field.value_max());
  const RealizedGradient grad =
      render_adjoint_realized(tf, forward, background, dloss_dimage, dloss_dtransmittance);
  return backprop_to_params(params, field.value_min(), field.value_max(), grad);
}

}  // namespace tfopt
