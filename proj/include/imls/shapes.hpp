#pragma once

#include <cstdint>
#include <functional>
#include <string_view>

#include "imls/point_cloud.hpp"

namespace imls {

enum class ShapeKind { sphere, torus, box, plane };

ShapeKind parse_shape(std::string_view name);
const char* shape_name(ShapeKind kind);

using SdfOracle = std::function<double(const Vec3&)>;

// Analytic signed distance for the synthetic shapes, all centered in the
// unit cube: sphere r=0.3, torus R=0.25/r=0.1 about z, box half-extent 0.2,
// plane z=0.5.
double shape_sdf(ShapeKind kind, const Vec3& q);
SdfOracle shape_oracle(ShapeKind kind);

// Uniform-area surface samples with analytic normals. Positions are jittered
// with N(0, noise_pos^2) per component; normals are rotated by exactly
// noise_normal_deg about a random axis. Kernel params are left at their
// defaults; assign_default_kernel_params sets them from point spacing.
PointCloud sample_shape(ShapeKind kind, int n, double noise_pos, double noise_normal_deg,
                        std::uint64_t seed);

// k = (4 h)^2 / m with h the mean nearest-neighbor spacing, giving each
// point a support radius of about four neighbor spacings.
void assign_default_kernel_params(PointCloud& cloud, double m = 2.0);

// mean nearest-neighbor distance over the cloud
double mean_neighbor_spacing(const PointCloud& cloud);

}  // namespace imls
