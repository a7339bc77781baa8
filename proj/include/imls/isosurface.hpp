#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "imls/splat_grid.hpp"
#include "imls/vec3.hpp"

namespace imls {

enum VertexFlag : std::uint8_t {
    kVertexFeatureMissing = 1,    // all 8 surrounding grid vertices uncovered
    kVertexDegenerateNormal = 2,  // no incident triangle area
};

// Indexed triangle mesh. Triangles wind counter-clockwise seen from the
// positive-distance side, so face normals point outward.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::vector<Vec3> vertex_normals;
    std::vector<double> vertex_features;  // V x D, row-major; empty if D = 0
    int feature_dim = 0;
    std::vector<std::uint8_t> vertex_flags;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t triangle_count() const { return triangles.size(); }
};

// Standard 256-case marching cubes over a finalized grid with linear edge
// interpolation of the crossing. Values equal to iso count as outside, so
// the inside/outside split is consistent across neighboring cells. Crossing
// vertices are deduplicated through an edge-keyed map.
Mesh marching_cubes(const SplatGrid& grid, double iso = 0.0);

// Trilinear interpolation of the finalized texture field at each mesh
// vertex; uncovered grid vertices carry zero weight and the remaining
// weights are renormalized. Vertices with no covered neighbor at all get a
// zero feature and the kVertexFeatureMissing flag.
void interpolate_vertex_attributes(Mesh& mesh, const SplatGrid& grid);

// Area-weighted average of incident face normals (unnormalized cross
// products). Vertices without any incident area get (0,0,1) and a flag.
void compute_vertex_normals(Mesh& mesh);

// Every undirected edge referenced by exactly two triangles.
bool watertight(const Mesh& mesh);

}  // namespace imls
