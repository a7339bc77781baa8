#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "imls/isosurface.hpp"
#include "imls/point_cloud.hpp"
#include "imls/rng.hpp"
#include "imls/splat_grid.hpp"

namespace imls {

// Thrown with file/line context for malformed inputs.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MeshFormat { obj, ply };

// PLY (ascii or binary little-endian) with x,y,z,nx,ny,nz required and
// optional k, m, red/green/blue; or whitespace XYZ with 6 columns. Positions
// outside the unit cube are affinely normalized into [0.05,0.95]^3
// preserving aspect ratio; clouds already inside are left untouched so a
// write/read round trip is exact. Normals are renormalized only when off
// unit length; kernel params default from point spacing when absent.
PointCloud read_point_cloud(const std::filesystem::path& path);

// binary little-endian PLY with double-precision attributes; exact round trip
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);

// OBJ: v/vn/f records, 1-based, faces as v//vn. PLY: binary little-endian,
// float32 positions/normals plus uchar red/green/blue when features exist.
void write_mesh(const Mesh& mesh, const std::filesystem::path& path, MeshFormat format);

Mesh read_mesh(const std::filesystem::path& path);

// flat binary debug dump: magic "IMLSGRID", u32 resolution, u32 reserved,
// then R^3 little-endian float64 sdf values
void write_grid_dump(const SplatGrid& grid, const std::filesystem::path& path);
std::vector<double> read_grid_dump(const std::filesystem::path& path, int& resolution);

// step,loss,alpha per row
void write_loss_history_csv(std::span<const double> losses, std::span<const double> alphas,
                            const std::filesystem::path& path);

// uniform-area surface samples for mesh-to-mesh metrics
std::vector<Vec3> sample_mesh_surface(const Mesh& mesh, int n, std::uint64_t seed);

// All writers go through a temp file + rename so interrupted runs never
// leave truncated outputs.
void atomic_write(const std::filesystem::path& path, const std::string& payload);

}  // namespace imls
