#include "tumorsynth/shape/shape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tumorsynth/core/components.hpp"
#include "tumorsynth/core/filters.hpp"

namespace tumorsynth::shape {

RadiusRange radius_range(SizeClass cls) {
  switch (cls) {
    case SizeClass::Tiny: return {2.0, 4.0};
    case SizeClass::Small: return {4.0, 10.0};
    case SizeClass::Medium: return {10.0, 22.0};
    case SizeClass::Large: return {22.0, 44.0};
  }
  return {2.0, 44.0};
}

const char* to_string(SizeClass cls) {
  switch (cls) {
    case SizeClass::Tiny: return "tiny";
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "?";
}

std::optional<SizeClass> parse_size_class(std::string_view name) {
  for (auto cls : kAllSizeClasses) {
    if (name == to_string(cls)) return cls;
  }
  return std::nullopt;
}

void ElasticParams::validate() const {
  if (!(control_spacing_mm > 0.0) || !(smoothing_sigma_mm > 0.0) || !(displacement_sigma_mm >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "elastic parameters must be positive");
  }
  if (displacement_sigma_mm > control_spacing_mm / 2.0) {
    fail(ErrorCode::InvalidArgument, "displacement_sigma_mm exceeds control_spacing_mm / 2");
  }
}

void ShapeParams::validate() const {
  elastic.validate();
  if (!(axis_ratio_lo > 0.0) || !(axis_ratio_lo <= axis_ratio_hi)) {
    fail(ErrorCode::InvalidArgument, "invalid axis ratio range");
  }
  if (!(soften_min_sigma_mm >= 0.0) || !(soften_radius_fraction >= 0.0) ||
      !(displacement_radius_fraction > 0.0) || !(radius_tolerance >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "invalid shape parameters");
  }
  if (max_attempts < 1) fail(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
}

Index3 center_index(const Geometry& local) {
  const Vec3 c = local.world_to_voxel({0, 0, 0});
  return {std::llround(c[0]), std::llround(c[1]), std::llround(c[2])};
}

Mask3 make_ellipsoid(const Vec3& semi_axes_mm, const Mat3& rotation, const Vec3& spacing) {
  const double max_spacing = std::max({spacing[0], spacing[1], spacing[2]});
  for (double a : semi_axes_mm) {
    if (!(a > 0.0) || a < 0.5 * max_spacing) fail(ErrorCode::InvalidArgument, "degenerate axis");
  }
  Geometry g;
  g.spacing = spacing;
  Index3 half{};
  for (int i = 0; i < 3; ++i) {
    double ext2 = 0;
    for (int c = 0; c < 3; ++c) ext2 += std::pow(rotation[i][c] * semi_axes_mm[c], 2);
    half[i] = static_cast<std::int64_t>(std::ceil(std::sqrt(ext2) / spacing[i])) + 1;
    g.dims[i] = static_cast<std::size_t>(2 * half[i] + 1);
    g.origin[i] = -static_cast<double>(half[i]) * spacing[i];
  }
  g.validate();

  Mask3 out(g);
  for (std::size_t k = 0; k < g.dims[2]; ++k)
    for (std::size_t j = 0; j < g.dims[1]; ++j)
      for (std::size_t i = 0; i < g.dims[0]; ++i) {
        const Vec3 x{(double(i) - double(half[0])) * spacing[0], (double(j) - double(half[1])) * spacing[1],
                     (double(k) - double(half[2])) * spacing[2]};
        double q = 0;
        for (int c = 0; c < 3; ++c) {
          double y = 0;
          for (int r = 0; r < 3; ++r) y += rotation[r][c] * x[r];
          q += (y / semi_axes_mm[c]) * (y / semi_axes_mm[c]);
        }
        out(i, j, k) = q <= 1.0 + 1e-9 ? 1 : 0;
      }
  return out;
}

Mask3 elastic_deform(const Mask3& m, const ElasticParams& params, Seed seed) {
  params.validate();
  if (params.displacement_sigma_mm == 0.0 || m.empty()) return m;

  const Geometry& g = m.geometry();
  const Dims& d = g.dims;
  const double cs = params.control_spacing_mm;

  // Control nodes at (n - 1) * cs in local mm, one spare node on each side.
  std::array<std::size_t, 3> nc{};
  for (int a = 0; a < 3; ++a) {
    const double extent = static_cast<double>(d[a] - 1) * g.spacing[a];
    nc[a] = static_cast<std::size_t>(std::ceil(extent / cs)) + 3;
  }
  Rng rng(seed);
  std::vector<Vec3> nodes(nc[0] * nc[1] * nc[2]);
  for (auto& n : nodes) {
    for (auto& c : n) c = rng.normal(0.0, params.displacement_sigma_mm);
  }

  std::array<Field3, 3> field{Field3(g), Field3(g), Field3(g)};
  for (std::size_t k = 0; k < d[2]; ++k)
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t i = 0; i < d[0]; ++i) {
        const double t[3] = {double(i) * g.spacing[0] / cs + 1.0, double(j) * g.spacing[1] / cs + 1.0,
                             double(k) * g.spacing[2] / cs + 1.0};
        std::size_t n0[3];
        double f[3];
        for (int a = 0; a < 3; ++a) {
          n0[a] = std::min(static_cast<std::size_t>(t[a]), nc[a] - 2);
          f[a] = t[a] - double(n0[a]);
        }
        Vec3 u{0, 0, 0};
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const double w = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]);
              const auto& n = nodes[(n0[0] + dx) + nc[0] * ((n0[1] + dy) + nc[1] * (n0[2] + dz))];
              for (int a = 0; a < 3; ++a) u[a] += w * n[a];
            }
        const std::size_t idx = g.linear(i, j, k);
        for (int a = 0; a < 3; ++a) field[a][idx] = static_cast<float>(u[a]);
      }
  for (auto& f : field) gaussian_blur_in_place(g, f.values(), Vec3{params.smoothing_sigma_mm,
                                                                  params.smoothing_sigma_mm,
                                                                  params.smoothing_sigma_mm});

  Mask3 out(g);
  for (std::size_t k = 0; k < d[2]; ++k)
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t i = 0; i < d[0]; ++i) {
        const std::size_t idx = g.linear(i, j, k);
        const double v = trilinear(m, double(i) + field[0][idx] / g.spacing[0],
                                   double(j) + field[1][idx] / g.spacing[1],
                                   double(k) + field[2][idx] / g.spacing[2], 0.0);
        out[idx] = v >= 0.5 ? 1 : 0;
      }
  return out;
}

SoftMask3 soften_mask(const Mask3& m, double sigma_mm) {
  if (!(sigma_mm >= 0.0)) fail(ErrorCode::InvalidArgument, "negative sigma");
  SoftMask3 soft = grid_cast<SoftMask3>(m);
  if (sigma_mm == 0.0) return soft;
  gaussian_blur_in_place(soft.geometry(), soft.values(), Vec3{sigma_mm, sigma_mm, sigma_mm});
  for (auto& w : soft.values()) w = std::clamp(w, 0.0f, 1.0f);
  return soft;
}

Mat3 random_rotation(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double two_pi = 2.0 * std::numbers::pi;
  const double x = std::sqrt(1 - u1) * std::sin(two_pi * u2);
  const double y = std::sqrt(1 - u1) * std::cos(two_pi * u2);
  const double z = std::sqrt(u1) * std::sin(two_pi * u3);
  const double w = std::sqrt(u1) * std::cos(two_pi * u3);
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

namespace {

std::size_t margin_voxels(double reach_mm, const Vec3& spacing) {
  const double s = std::min({spacing[0], spacing[1], spacing[2]});
  return static_cast<std::size_t>(std::ceil(reach_mm / s)) + 1;
}

}  // namespace

TumorShape sample_shape(SizeClass cls, const Vec3& spacing, Seed seed, const ShapeParams& params) {
  params.validate();
  const RadiusRange range = radius_range(cls);
  const double max_spacing = std::max({spacing[0], spacing[1], spacing[2]});
  const double r_lo = range.lo * (1.0 - params.radius_tolerance);
  const double r_hi = range.hi * (1.0 + params.radius_tolerance);

  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    const Seed attempt_seed = derive_seed(seed, "shape-attempt", static_cast<std::uint64_t>(attempt));
    Rng rng(attempt_seed);
    const double radius = rng.uniform(range.lo, range.hi);
    Vec3 ratios;
    for (auto& r : ratios) r = rng.uniform(params.axis_ratio_lo, params.axis_ratio_hi);
    const double norm = std::cbrt(ratios[0] * ratios[1] * ratios[2]);
    Vec3 axes;
    for (int a = 0; a < 3; ++a) axes[a] = radius * ratios[a] / norm;
    const Mat3 rotation = random_rotation(rng);
    if (*std::min_element(axes.begin(), axes.end()) < 0.5 * max_spacing) continue;

    ElasticParams elastic = params.elastic;
    elastic.displacement_sigma_mm =
        std::min(elastic.displacement_sigma_mm, params.displacement_radius_fraction * radius);
    Mask3 body = pad(make_ellipsoid(axes, rotation, spacing),
                     margin_voxels(3.0 * elastic.displacement_sigma_mm, spacing));
    body = elastic_deform(body, elastic, derive_seed(attempt_seed, "elastic"));

    const double sigma = std::max(params.soften_min_sigma_mm, params.soften_radius_fraction * radius);
    body = pad(body, margin_voxels(3.0 * sigma, spacing));
    SoftMask3 soft = soften_mask(body, sigma);
    Mask3 hard(soft.geometry());
    for (std::size_t i = 0; i < soft.size(); ++i) hard[i] = soft[i] >= 0.5f ? 1 : 0;

    const auto comps = connected_components(hard);
    if (comps.size() != 1) continue;
    const double realized = comps.front().radius_mm;
    if (realized < r_lo || realized > r_hi) continue;

    const CropBox box = support_box(soft);
    TumorShape shape;
    shape.soft = crop(soft, box);
    shape.hard = crop(hard, box);
    shape.radius_mm = realized;
    shape.target_radius_mm = radius;
    shape.semi_axes_mm = axes;
    shape.attempts = attempt + 1;
    const Index3 c = center_index(shape.soft.geometry());
    shape.crop_box = CropBox{{-c[0], -c[1], -c[2]}, shape.soft.dims()};
    return shape;
  }
  fail(ErrorCode::Infeasible, "shape sampling failed");
}

}  // namespace tumorsynth::shape
