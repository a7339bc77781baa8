#pragma once

#include <optional>
#include <vector>

#include "imls/point_cloud.hpp"

namespace imls {

// Brute-force evaluation of the blended signed-distance and texture fields.
// O(N) per query by design: this is the trusted oracle the grid splatting
// path is checked against, so it carries no acceleration structure.

// signed projection distance of q onto the point's tangent plane
double point_function(const Vec3& query, const OrientedPoint& point);

// Weighted blend of per-point plane distances. Empty optional means no point
// covers the query (weight sum below kCoverageEps); callers decide what that
// means (the grid substitutes the background value).
std::optional<double> eval_sdf(const Vec3& query, const PointCloud& cloud,
                               KernelKind kind = KernelKind::compact);

// Same weights, blending per-point features instead of plane distances.
std::optional<std::vector<double>> eval_texture(const Vec3& query, const PointCloud& cloud,
                                                KernelKind kind = KernelKind::compact);

// Field value plus upstream-scaled partial derivatives with respect to every
// point attribute. The query must be covered.
std::pair<double, AttributeGradients> eval_sdf_with_grads(const Vec3& query,
                                                          const PointCloud& cloud,
                                                          double upstream,
                                                          KernelKind kind = KernelKind::compact);

}  // namespace imls
