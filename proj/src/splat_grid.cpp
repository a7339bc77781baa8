#include "imls/splat_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imls {

SplatGrid make_grid(int resolution, int feature_dim) {
    if (resolution < 2) throw std::invalid_argument("grid resolution must be >= 2");
    if (feature_dim < 0) throw std::invalid_argument("feature dim must be >= 0");
    SplatGrid g;
    g.resolution = resolution;
    g.feature_dim = feature_dim;
    const std::size_t n = g.vertex_count();
    g.weight_sum.assign(n, 0.0);
    g.weighted_proj.assign(n, 0.0);
    g.weighted_feature.assign(n * static_cast<std::size_t>(feature_dim), 0.0);
    g.sdf.assign(n, 0.0);
    g.covered.assign(n, 0);
    return g;
}

double default_background_sdf(int resolution) { return 2.0 / (resolution - 1); }

BinIndex bin_points(const PointCloud& cloud, int resolution) {
    if (resolution < 2) throw std::invalid_argument("grid resolution must be >= 2");

    BinIndex index;
    index.resolution = resolution;
    const double scale = static_cast<double>(resolution - 1);
    const int hi = resolution - 1;

    for (std::uint32_t pi = 0; pi < cloud.size(); ++pi) {
        const auto& pt = cloud.points[pi];
        const double sup_sq = pt.kernel.m * pt.kernel.k;
        const double rad = std::sqrt(sup_sq);

        // vertex-index bounds of the support ball's bounding box
        const auto lo_idx = [&](double c) {
            return std::max(0, static_cast<int>(std::ceil((c - rad) * scale)));
        };
        const auto hi_idx = [&](double c) {
            return std::min(hi, static_cast<int>(std::floor((c + rad) * scale)));
        };
        const int i0 = lo_idx(pt.position.x), i1 = hi_idx(pt.position.x);
        const int j0 = lo_idx(pt.position.y), j1 = hi_idx(pt.position.y);
        const int l0 = lo_idx(pt.position.z), l1 = hi_idx(pt.position.z);

        for (int l = l0; l <= l1; ++l) {
            for (int j = j0; j <= j1; ++j) {
                for (int i = i0; i <= i1; ++i) {
                    const Vec3 v{i / scale, j / scale, l / scale};
                    const Vec3 d = v - pt.position;
                    if (dot(d, d) <= sup_sq) {
                        const auto vid = static_cast<std::uint32_t>(
                            (static_cast<std::size_t>(l) * resolution + j) * resolution + i);
                        index.pairs.emplace_back(vid, pi);
                    }
                }
            }
        }
    }

    std::sort(index.pairs.begin(), index.pairs.end());

    const std::size_t vcount = static_cast<std::size_t>(resolution) * resolution * resolution;
    index.offsets.assign(vcount + 1, 0);
    for (const auto& pr : index.pairs) index.offsets[pr.first + 1]++;
    for (std::size_t v = 0; v < vcount; ++v) index.offsets[v + 1] += index.offsets[v];
    return index;
}

void splat_forward(const PointCloud& cloud, const BinIndex& index, KernelKind kind,
                   SplatGrid& grid) {
    if (index.resolution != grid.resolution)
        throw std::invalid_argument("splat_forward: index/grid resolution mismatch");
    if (grid.feature_dim != cloud.feature_dim)
        throw std::invalid_argument("splat_forward: grid/cloud feature dim mismatch");

    const int dim = grid.feature_dim;
    for (const auto& [vid, pi] : index.pairs) {
        const auto& pt = cloud.points[pi];
        const Vec3 v = grid.vertex_position(vid);
        const Vec3 d = v - pt.position;
        const double s = dot(d, d);
        const double w = kernel_weight(kind, s, pt.kernel);
        grid.weight_sum[vid] += w;
        grid.weighted_proj[vid] += w * dot(d, pt.normal);
        for (int c = 0; c < dim; ++c)
            grid.weighted_feature[vid * static_cast<std::size_t>(dim) + c] +=
                w * pt.feature[static_cast<std::size_t>(c)];
    }
}

void finalize(SplatGrid& grid, double background_sdf) {
    const std::size_t n = grid.vertex_count();
    for (std::size_t v = 0; v < n; ++v) {
        if (grid.weight_sum[v] >= kCoverageEps) {
            grid.covered[v] = 1;
            grid.sdf[v] = grid.weighted_proj[v] / grid.weight_sum[v];
        } else {
            grid.covered[v] = 0;
            grid.sdf[v] = background_sdf;
        }
    }
    grid.background_sdf = background_sdf;
    grid.finalized = true;
}

AttributeGradients splat_backward(const PointCloud& cloud, const BinIndex& index,
                                  KernelKind kind, const SplatGrid& grid,
                                  std::span<const double> vertex_grads) {
    if (!grid.finalized) throw std::invalid_argument("splat_backward: grid not finalized");
    if (index.resolution != grid.resolution)
        throw std::invalid_argument("splat_backward: index/grid resolution mismatch");
    if (vertex_grads.size() != grid.vertex_count())
        throw std::invalid_argument("splat_backward: vertex_grads size mismatch");

    AttributeGradients grads;
    grads.resize(cloud.size(), cloud.feature_dim);

    const std::size_t vcount = grid.vertex_count();
    for (std::size_t vid = 0; vid < vcount; ++vid) {
        const double upstream = vertex_grads[vid];
        if (upstream == 0.0 || !grid.covered[vid]) continue;

        const Vec3 v = grid.vertex_position(vid);
        const double den = grid.weight_sum[vid];
        const double value = grid.sdf[vid];

        for (std::uint32_t r = index.offsets[vid]; r < index.offsets[vid + 1]; ++r) {
            const std::uint32_t pi = index.pairs[r].second;
            const auto& pt = cloud.points[pi];
            const Vec3 d = v - pt.position;
            const double s = dot(d, d);
            const double w = kernel_weight(kind, s, pt.kernel);
            const double omega = dot(d, pt.normal);
            const double wn = w / den;
            const double weight_coeff = (omega - value) / den;

            const double dw_ds = kernel_weight_grad_s(kind, s, pt.kernel);
            grads.d_position[pi] +=
                upstream * (pt.normal * (-wn) + d * (-2.0 * dw_ds * weight_coeff));
            grads.d_normal[pi] += upstream * wn * d;
            grads.d_k[pi] += upstream * weight_coeff * kernel_weight_grad_k(kind, s, pt.kernel);
            grads.d_m[pi] += upstream * weight_coeff * kernel_weight_grad_m(kind, s, pt.kernel);
        }
    }
    return grads;
}

std::vector<double> vertex_feature(const SplatGrid& grid, std::size_t idx) {
    std::vector<double> f(static_cast<std::size_t>(grid.feature_dim), 0.0);
    if (!grid.covered[idx]) return f;
    const double inv = 1.0 / grid.weight_sum[idx];
    for (int c = 0; c < grid.feature_dim; ++c)
        f[static_cast<std::size_t>(c)] =
            grid.weighted_feature[idx * static_cast<std::size_t>(grid.feature_dim) + c] * inv;
    return f;
}

namespace {

struct CellCoords {
    int i, j, l;        // base vertex
    double fx, fy, fz;  // fractional position in the cell
};

CellCoords locate_cell(const SplatGrid& grid, const Vec3& pos) {
    const int hi = grid.resolution - 2;
    const double scale = static_cast<double>(grid.resolution - 1);
    CellCoords c{};
    const double gx = std::clamp(pos.x, 0.0, 1.0) * scale;
    const double gy = std::clamp(pos.y, 0.0, 1.0) * scale;
    const double gz = std::clamp(pos.z, 0.0, 1.0) * scale;
    c.i = std::min(static_cast<int>(gx), hi);
    c.j = std::min(static_cast<int>(gy), hi);
    c.l = std::min(static_cast<int>(gz), hi);
    c.fx = gx - c.i;
    c.fy = gy - c.j;
    c.fz = gz - c.l;
    return c;
}

}  // namespace

double trilinear_sdf(const SplatGrid& grid, const Vec3& pos) {
    if (!grid.finalized) throw std::invalid_argument("trilinear_sdf: grid not finalized");
    const CellCoords c = locate_cell(grid, pos);
    double acc = 0.0;
    for (int dl = 0; dl < 2; ++dl) {
        const double wz = dl ? c.fz : 1.0 - c.fz;
        for (int dj = 0; dj < 2; ++dj) {
            const double wy = dj ? c.fy : 1.0 - c.fy;
            for (int di = 0; di < 2; ++di) {
                const double wx = di ? c.fx : 1.0 - c.fx;
                acc += wx * wy * wz * grid.sdf[grid.index_of(c.i + di, c.j + dj, c.l + dl)];
            }
        }
    }
    return acc;
}

void trilinear_scatter(const SplatGrid& grid, const Vec3& pos, double g,
                       std::span<double> vertex_grads) {
    const CellCoords c = locate_cell(grid, pos);
    for (int dl = 0; dl < 2; ++dl) {
        const double wz = dl ? c.fz : 1.0 - c.fz;
        for (int dj = 0; dj < 2; ++dj) {
            const double wy = dj ? c.fy : 1.0 - c.fy;
            for (int di = 0; di < 2; ++di) {
                const double wx = di ? c.fx : 1.0 - c.fx;
                vertex_grads[grid.index_of(c.i + di, c.j + dj, c.l + dl)] += g * wx * wy * wz;
            }
        }
    }
}

bool cell_touches_coverage(const SplatGrid& grid, const Vec3& pos) {
    const CellCoords c = locate_cell(grid, pos);
    for (int dl = 0; dl < 2; ++dl)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di)
                if (grid.covered[grid.index_of(c.i + di, c.j + dj, c.l + dl)]) return true;
    return false;
}

}  // namespace imls
