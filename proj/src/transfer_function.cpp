// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/transfer_function.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace tfopt {

namespace {

double tanh_slope(double raw)
{
  const double t = std::tanh(raw);
  return 1.0 - t * t;
}

// Guards the inverse tanh maps against +-inf at the closed range ends.
constexpr double kSaturationGuard = 1e-12;

// Share of a uniform grid blended into the positions. Without it, extreme
// spacing logits underflow against the cumulative sum and neighboring
// positions collide in double precision.
constexpr double kUniformShare = 1e-13;

}  // namespace

TFParams TFParams::uniform(std::size_t control_points)
{
  TFParams p;
  p.raw_spacings.assign(control_points > 0 ? control_points - 1 : 0, 0.0);
  p.raw_density.assign(control_points, 0.0);
  p.raw_color.assign(control_points, Rgb{0.0, 0.0, 0.0});
  return p;
}

std::vector<double> TFParams::flatten() const
{
  std::vector<double> flat;
  flat.reserve(size());
  flat.insert(flat.end(), raw_spacings.begin(), raw_spacings.end());
  flat.insert(flat.end(), raw_density.begin(), raw_density.end());
  for (const Rgb& c : raw_color)
    flat.insert(flat.end(), c.begin(), c.end());
  return flat;
}

TFParams TFParams::unflatten(std::span<const double> flat, std::size_t control_points)
{
  const std::size_t m = control_points;
  if (m < 2 || flat.size() != 5 * m - 1)
    throw ValidationError("params", "flat parameter vector has the wrong length");
  TFParams p;
  p.raw_spacings.assign(flat.begin(), flat.begin() + static_cast<long>(m - 1));
  p.raw_density.assign(flat.begin() + static_cast<long>(m - 1),
                       flat.begin() + static_cast<long>(2 * m - 1));
  p.raw_color.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    for (int c = 0; c < 3; ++c)
      p.raw_color[k][c] = flat[2 * m - 1 + 3 * k + c];
  return p;
}

void TFParams::validate() const
{
  const std::size_t m = control_points();
  if (m < 2)
    throw ValidationError("control_points", "at least 2 control points are required");
  if (raw_spacings.size() != m - 1 || raw_color.size() != m)
    throw ValidationError("params", "parameter arrays disagree on the control-point count");
  auto finite = [](double v) { return std::isfinite(v); };
  bool ok = std::all_of(raw_spacings.begin(), raw_spacings.end(), finite)
            && std::all_of(raw_density.begin(), raw_density.end(), finite);
  for (const Rgb& c : raw_color)
    ok = ok && std::all_of(c.begin(), c.end(), finite);
  if (!ok)
    throw ValidationError("params", "non-finite raw parameter");
}

void TFRealized::validate() const
{
  const std::size_t m = positions.size();
  if (m < 2)
    throw FormatError("transfer function needs at least 2 control points");
  if (density.size() != m || color.size() != m)
    throw FormatError("transfer function arrays disagree on the control-point count");
  for (std::size_t k = 1; k < m; ++k) {
    if (!(positions[k] > positions[k - 1]))
      throw FormatError("control-point positions must be strictly increasing (index "
                        + std::to_string(k) + ")");
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (!(density[k] >= 0.0 && density[k] <= kMaxDensity))
      throw FormatError("density out of [0, 255] at control point " + std::to_string(k));
    for (double c : color[k]) {
      if (!(c >= 0.0 && c <= 1.0))
        throw FormatError("color out of [0, 1] at control point " + std::to_string(k));
    }
  }
}

RealizedGradient& RealizedGradient::operator+=(const RealizedGradient& o)
{
  for (std::size_t k = 0; k < positions.size(); ++k) {
    positions[k] += o.positions[k];
    density[k] += o.density[k];
    for (int c = 0; c < 3; ++c)
      color[k][c] += o.color[k][c];
  }
  return *this;
}

double softplus(double x)
{
  // log(1 + e^x) without overflow
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x)
{
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

struct Cumulative {
  std::vector<double> partial;  // q_k = sum_{j<k} softplus(u_j)
  double total = 0.0;           // q_{M-1}
  bool underflow = false;       // every softplus was 0; partial holds k instead
};

Cumulative cumulative_spacings(const TFParams& params)
{
  const std::size_t m = params.control_points();
  Cumulative q;
  q.partial.assign(m, 0.0);
  for (std::size_t j = 0; j + 1 < m; ++j)
    q.partial[j + 1] = q.partial[j] + softplus(params.raw_spacings[j]);
  q.total = q.partial[m - 1];
  if (!std::isfinite(q.total))
    throw ValidationError("raw_spacings", "spacing logits overflow");
  if (q.total == 0.0) {
    // The limit of equal vanishing spacings is the uniform grid.
    q.underflow = true;
    for (std::size_t k = 0; k < m; ++k)
      q.partial[k] = static_cast<double>(k);
    q.total = static_cast<double>(m - 1);
  }
  return q;
}

}  // namespace

TFRealized realize(const TFParams& params, double value_min, double value_max)
{
  params.validate();
  if (!(value_min < value_max))
    throw ValidationError("range", "value_min must be below value_max");

  const std::size_t m = params.control_points();
  const Cumulative q = cumulative_spacings(params);
  TFRealized tf;
  tf.positions.resize(m);
  tf.density.resize(m);
  tf.color.resize(m);

  const double range = value_max - value_min;
  const double last = static_cast<double>(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    tf.positions[k] = value_min + range * ((1.0 - kUniformShare) * (q.partial[k] / q.total)
                                           + kUniformShare * (static_cast<double>(k) / last));
  }
  tf.positions.front() = value_min;
  tf.positions.back() = value_max;

  for (std::size_t k = 0; k < m; ++k) {
    tf.density[k] = kMaxDensity * 0.5 * (std::tanh(params.raw_density[k]) + 1.0);
    for (int c = 0; c < 3; ++c)
      tf.color[k][c] = 0.5 * (std::tanh(params.raw_color[k][c]) + 1.0);
  }
  return tf;
}

TFSegmentSample eval_segment(const TFRealized& tf, double s)
{
  const auto& pos = tf.positions;
  const std::size_t m = pos.size();
  s = std::clamp(s, pos.front(), pos.back());

  auto it = std::upper_bound(pos.begin(), pos.end(), s);
  std::size_t left = static_cast<std::size_t>(std::distance(pos.begin(), it));
  left = left == 0 ? 0 : left - 1;
  left = std::min(left, m - 2);

  const double width = pos[left + 1] - pos[left];
  TFSegmentSample out;
  out.left = left;
  out.weight = (s - pos[left]) / width;
  out.dweight_dleft = (out.weight - 1.0) / width;
  out.dweight_dright = -out.weight / width;

  const double w = out.weight;
  out.value.density = (1.0 - w) * tf.density[left] + w * tf.density[left + 1];
  for (int c = 0; c < 3; ++c)
    out.value.color[c] = (1.0 - w) * tf.color[left][c] + w * tf.color[left + 1][c];
  return out;
}

TFSample eval(const TFRealized& tf, double s)
{
  return eval_segment(tf, s).value;
}

void accumulate_sample_gradient(const TFSegmentSample& seg, const TFRealized& tf,
                                double dloss_ddensity, const Rgb& dloss_dcolor,
                                RealizedGradient& grad)
{
  const std::size_t l = seg.left;
  const std::size_t r = l + 1;
  const double w = seg.weight;

  grad.density[l] += dloss_ddensity * (1.0 - w);
  grad.density[r] += dloss_ddensity * w;
  double dloss_dweight = dloss_ddensity * (tf.density[r] - tf.density[l]);
  for (int c = 0; c < 3; ++c) {
    grad.color[l][c] += dloss_dcolor[c] * (1.0 - w);
    grad.color[r][c] += dloss_dcolor[c] * w;
    dloss_dweight += dloss_dcolor[c] * (tf.color[r][c] - tf.color[l][c]);
  }
  grad.positions[l] += dloss_dweight * seg.dweight_dleft;
  grad.positions[r] += dloss_dweight * seg.dweight_dright;
}

std::vector<double> backprop_to_params(const TFParams& params, double value_min, double value_max,
                                       const RealizedGradient& grad)
{
  const std::size_t m = params.control_points();
  std::vector<double> out(params.size(), 0.0);

  // positions: p_k = lo + R ((1 - e) q_k / Q + e k / (M-1)) with
  // q_k = sum_{j<k} u_j, Q = q_{M-1}
  // dp_k/du_j = (1 - e) R ([j < k] / Q - q_k / Q^2)
  const Cumulative q = cumulative_spacings(params);
  const double range = (value_max - value_min) * (1.0 - kUniformShare);

  double weighted = 0.0;  // sum_k g_k q_k
  for (std::size_t k = 0; k < m; ++k)
    weighted += grad.positions[k] * q.partial[k];

  double suffix = 0.0;  // sum_{k > j} g_k
  for (std::size_t j = m - 1; j-- > 0;) {
    suffix += grad.positions[j + 1];
    const double dloss_du = range * (suffix / q.total - weighted / (q.total * q.total));
    out[j] = q.underflow ? 0.0 : dloss_du * sigmoid(params.raw_spacings[j]);
  }

  const std::size_t d0 = params.density_offset();
  const std::size_t c0 = params.color_offset();
  for (std::size_t k = 0; k < m; ++k) {
    out[d0 + k] = grad.density[k] * 0.5 * kMaxDensity * tanh_slope(params.raw_density[k]);
    for (int c = 0; c < 3; ++c)
      out[c0 + 3 * k + c] = grad.color[k][c] * 0.5 * tanh_slope(params.raw_color[k][c]);
  }
  return out;
}

TFJacobian eval_with_jacobian(const TFParams& params, double value_min, double value_max,
                              double s)
{
  const TFRealized tf = realize(params, value_min, value_max);
  const TFSegmentSample seg = eval_segment(tf, s);
  const std::size_t m = tf.control_points();

  TFJacobian jac;
  jac.value = seg.value;
  {
    RealizedGradient g(m);
    accumulate_sample_gradient(seg, tf, 1.0, Rgb{0.0, 0.0, 0.0}, g);
    jac.ddensity = backprop_to_params(params, value_min, value_max, g);
  }
  for (int c = 0; c < 3; ++c) {
    RealizedGradient g(m);
    Rgb unit{0.0, 0.0, 0.0};
    unit[c] = 1.0;
    accumulate_sample_gradient(seg, tf, 0.0, unit, g);
    jac.dcolor[c] = backprop_to_params(params, value_min, value_max, g);
  }
  return jac;
}

void write_tf(std::ostream& out, const TFRealized& tf)
{
  tf.validate();
  const auto precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << tf.control_points() << ' ' << tf.value_min() << ' ' << tf.value_max() << '\n';
  for (std::size_t k = 0; k < tf.control_points(); ++k) {
    out << tf.positions[k] << ' ' << tf.density[k] << ' ' << tf.color[k][0] << ' '
        << tf.color[k][1] << ' ' << tf.color[k][2] << '\n';
  }
  out.precision(precision);
}

TFRealized read_tf(std::istream& in)
{
  std::string line;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos && line[0] != '#')
        return;
    }
    throw FormatError(std::string("transfer function file truncated: missing ") + what);
  };

  next_line("header");
  std::istringstream header(line);
  long count = 0;
  double lo = 0.0;
  double hi = 0.0;
  if (!(header >> count >> lo >> hi))
    throw FormatError("malformed transfer function header: '" + line + "'");
  if (count < 2)
    throw FormatError("transfer function needs at least 2 control points");

  TFRealized tf;
  for (long k = 0; k < count; ++k) {
    next_line("control point");
    std::istringstream row(line);
    double p = 0.0;
    double d = 0.0;
    Rgb c{};
    if (!(row >> p >> d >> c[0] >> c[1] >> c[2]))
      throw FormatError("malformed control point on record " + std::to_string(k + 1) + ": '"
                        + line + "'");
    tf.positions.push_back(p);
    tf.density.push_back(d);
    tf.color.push_back(c);
  }
  tf.validate();
  const double tol = 1e-9 * std::max(1.0, std::abs(hi - lo));
  if (std::abs(tf.value_min() - lo) > tol || std::abs(tf.value_max() - hi) > tol)
    throw FormatError("first/last control points do not match the header range");
  return tf;
}

void export_tf(const TFRealized& tf, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  write_tf(out, tf);
}

TFRealized import_tf(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open transfer function file " + path.string());
  return read_tf(in);
}

double density_to_raw(double density)
{
  const double unit = std::clamp(density / kMaxDensity, kSaturationGuard, 1.0 - kSaturationGuard);
  return std::atanh(2.0 * unit - 1.0);
}

double color_to_raw(double color)
{
  const double unit = std::clamp(color, kSaturationGuard, 1.0 - kSaturationGuard);
  return std::atanh(2.0 * unit - 1.0);
}

}  // namespace tfopt
