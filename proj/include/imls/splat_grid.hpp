#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "imls/point_cloud.hpp"

namespace imls {

// Regular grid over [0,1]^3 with vertices at (i,j,l)/(R-1). Accumulators are
// filled by splat_forward; finalize turns them into a signed-distance field
// with a constant positive background over uncovered vertices.
struct SplatGrid {
    int resolution = 0;
    int feature_dim = 0;
    std::vector<double> weight_sum;        // R^3
    std::vector<double> weighted_proj;     // R^3
    std::vector<double> weighted_feature;  // R^3 x D
    std::vector<double> sdf;               // R^3, valid after finalize
    std::vector<std::uint8_t> covered;     // R^3
    bool finalized = false;
    double background_sdf = 0.0;

    std::size_t vertex_count() const {
        const auto r = static_cast<std::size_t>(resolution);
        return r * r * r;
    }
    // x fastest, z slowest
    std::size_t index_of(int i, int j, int l) const {
        return (static_cast<std::size_t>(l) * resolution + j) * resolution + i;
    }
    Vec3 vertex_position(std::size_t idx) const {
        const auto r = static_cast<std::size_t>(resolution);
        const double inv = 1.0 / (resolution - 1);
        return {static_cast<double>(idx % r) * inv, static_cast<double>((idx / r) % r) * inv,
                static_cast<double>(idx / (r * r)) * inv};
    }
};

// Sorted (vertex, point) pair list with contiguous per-vertex ranges.
// Every pair satisfies ||vertex_pos - point_pos||^2 <= m*k.
struct BinIndex {
    int resolution = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<std::uint32_t> offsets;  // R^3 + 1

    std::size_t size() const { return pairs.size(); }
};

SplatGrid make_grid(int resolution, int feature_dim);

// two voxel spacings: enough for a clean zero crossing at the coverage
// frontier without distorting near-surface interpolation
double default_background_sdf(int resolution);

// For each point, find exactly the grid vertices inside its support ball
// (bounding-box scan, exact sphere test), then sort pairs by vertex id.
BinIndex bin_points(const PointCloud& cloud, int resolution);

// Accumulate kernel weight, weighted plane distance, and weighted features
// onto the grid. Deterministic: per vertex, points accumulate in sorted order.
void splat_forward(const PointCloud& cloud, const BinIndex& index, KernelKind kind,
                   SplatGrid& grid);

// Covered vertices get sdf = weighted_proj / weight_sum, uncovered vertices
// the constant positive background.
void finalize(SplatGrid& grid, double background_sdf);

// Scatter grid-vertex gradients back to point attributes. vertex_grads must
// be zero at uncovered vertices (the background is a constant).
AttributeGradients splat_backward(const PointCloud& cloud, const BinIndex& index,
                                  KernelKind kind, const SplatGrid& grid,
                                  std::span<const double> vertex_grads);

// finalized per-vertex texture feature; zero vector at uncovered vertices
std::vector<double> vertex_feature(const SplatGrid& grid, std::size_t idx);

double trilinear_sdf(const SplatGrid& grid, const Vec3& pos);

// Adds g times the trilinear weights of pos into vertex_grads.
void trilinear_scatter(const SplatGrid& grid, const Vec3& pos, double g,
                       std::span<double> vertex_grads);

// True if at least one of the 8 cell corners around pos is covered.
bool cell_touches_coverage(const SplatGrid& grid, const Vec3& pos);

}  // namespace imls
