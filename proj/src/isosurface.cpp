#include "imls/isosurface.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

namespace imls {

namespace {

#include "mc_tables.inc"

constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// offsets of the 8 cube corners in (i,j,l)
constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

}  // namespace

Mesh marching_cubes(const SplatGrid& grid, double iso) {
    if (!grid.finalized) throw std::invalid_argument("marching_cubes: grid not finalized");
    const int res = grid.resolution;

    Mesh mesh;
    mesh.feature_dim = grid.feature_dim;

    // crossing vertex per undirected grid edge, keyed by its two vertex ids
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    const auto edge_key = [](std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
    };

    std::size_t corner_idx[8];
    double corner_val[8];
    std::uint32_t edge_mesh_vertex[12];

    for (int l = 0; l + 1 < res; ++l) {
        for (int j = 0; j + 1 < res; ++j) {
            for (int i = 0; i + 1 < res; ++i) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    corner_idx[c] = grid.index_of(i + kCornerOffset[c][0], j + kCornerOffset[c][1],
                                                  l + kCornerOffset[c][2]);
                    corner_val[c] = grid.sdf[corner_idx[c]];
                    if (corner_val[c] < iso) cube |= 1 << c;  // == iso counts as outside
                }
                const std::uint16_t mask = kEdgeMask[cube];
                if (mask == 0) continue;

                for (int e = 0; e < 12; ++e) {
                    if (!(mask & (1 << e))) continue;
                    const int ca = kEdgeCorners[e][0];
                    const int cb = kEdgeCorners[e][1];
                    const std::uint64_t key = edge_key(corner_idx[ca], corner_idx[cb]);
                    auto it = edge_vertex.find(key);
                    if (it == edge_vertex.end()) {
                        const double fa = corner_val[ca];
                        const double fb = corner_val[cb];
                        const double denom = fb - fa;
                        double t = std::abs(denom) < 1e-300 ? 0.5 : (iso - fa) / denom;
                        t = std::clamp(t, 0.0, 1.0);
                        const Vec3 pa = grid.vertex_position(corner_idx[ca]);
                        const Vec3 pb = grid.vertex_position(corner_idx[cb]);
                        const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
                        mesh.vertices.push_back(pa + (pb - pa) * t);
                        it = edge_vertex.emplace(key, id).first;
                    }
                    edge_mesh_vertex[e] = it->second;
                }

                // table winding faces the negative side; swap so normals
                // point toward positive values
                const auto* row = kTriTable[cube];
                for (int t = 0; row[t] != -1; t += 3) {
                    mesh.triangles.push_back({edge_mesh_vertex[row[t]],
                                              edge_mesh_vertex[row[t + 2]],
                                              edge_mesh_vertex[row[t + 1]]});
                }
            }
        }
    }

    mesh.vertex_flags.assign(mesh.vertices.size(), 0);
    return mesh;
}

void interpolate_vertex_attributes(Mesh& mesh, const SplatGrid& grid) {
    if (!grid.finalized)
        throw std::invalid_argument("interpolate_vertex_attributes: grid not finalized");
    const int dim = grid.feature_dim;
    mesh.feature_dim = dim;
    mesh.vertex_features.assign(mesh.vertices.size() * static_cast<std::size_t>(dim), 0.0);
    if (mesh.vertex_flags.size() != mesh.vertices.size())
        mesh.vertex_flags.assign(mesh.vertices.size(), 0);
    if (dim == 0) return;

    const double scale = static_cast<double>(grid.resolution - 1);
    const int hi = grid.resolution - 2;

    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const Vec3& pos = mesh.vertices[v];
        const int i = std::min(static_cast<int>(std::clamp(pos.x, 0.0, 1.0) * scale), hi);
        const int j = std::min(static_cast<int>(std::clamp(pos.y, 0.0, 1.0) * scale), hi);
        const int l = std::min(static_cast<int>(std::clamp(pos.z, 0.0, 1.0) * scale), hi);
        const double fx = pos.x * scale - i;
        const double fy = pos.y * scale - j;
        const double fz = pos.z * scale - l;

        double wsum = 0.0;
        double* out = &mesh.vertex_features[v * static_cast<std::size_t>(dim)];
        for (int dl = 0; dl < 2; ++dl) {
            const double wz = dl ? fz : 1.0 - fz;
            for (int dj = 0; dj < 2; ++dj) {
                const double wy = dj ? fy : 1.0 - fy;
                for (int di = 0; di < 2; ++di) {
                    const double wx = di ? fx : 1.0 - fx;
                    const std::size_t g = grid.index_of(i + di, j + dj, l + dl);
                    if (!grid.covered[g]) continue;
                    const double w = wx * wy * wz;
                    wsum += w;
                    const double inv = 1.0 / grid.weight_sum[g];
                    for (int c = 0; c < dim; ++c)
                        out[c] += w * grid.weighted_feature[g * static_cast<std::size_t>(dim) + c] * inv;
                }
            }
        }
        if (wsum > 0.0) {
            for (int c = 0; c < dim; ++c) out[c] /= wsum;
        } else {
            mesh.vertex_flags[v] |= kVertexFeatureMissing;
        }
    }
}

void compute_vertex_normals(Mesh& mesh) {
    mesh.vertex_normals.assign(mesh.vertices.size(), Vec3{});
    if (mesh.vertex_flags.size() != mesh.vertices.size())
        mesh.vertex_flags.assign(mesh.vertices.size(), 0);

    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        const Vec3 fn = cross(b - a, c - a);  // twice the area, outward
        mesh.vertex_normals[tri[0]] += fn;
        mesh.vertex_normals[tri[1]] += fn;
        mesh.vertex_normals[tri[2]] += fn;
    }
    for (std::size_t v = 0; v < mesh.vertex_normals.size(); ++v) {
        const double n = norm(mesh.vertex_normals[v]);
        if (n > 1e-300) {
            mesh.vertex_normals[v] = mesh.vertex_normals[v] / n;
        } else {
            mesh.vertex_normals[v] = Vec3{0.0, 0.0, 1.0};
            mesh.vertex_flags[v] |= kVertexDegenerateNormal;
        }
    }
}

bool watertight(const Mesh& mesh) {
    std::unordered_map<std::uint64_t, int> edge_count;
    edge_count.reserve(mesh.triangles.size() * 3);
    const auto key = [](std::uint32_t a, std::uint32_t b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | b;
    };
    for (const auto& tri : mesh.triangles) {
        edge_count[key(tri[0], tri[1])]++;
        edge_count[key(tri[1], tri[2])]++;
        edge_count[key(tri[2], tri[0])]++;
    }
    for (const auto& [k, n] : edge_count)
        if (n != 2) return false;
    return !mesh.triangles.empty();
}

}  // namespace imls
