#include "imls/shapes.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "imls/metrics.hpp"
#include "imls/rng.hpp"

namespace imls {

namespace {

constexpr Vec3 kCenter{0.5, 0.5, 0.5};
constexpr double kSphereRadius = 0.3;
constexpr double kTorusMajor = 0.25;
constexpr double kTorusMinor = 0.1;
constexpr double kBoxHalf = 0.2;
constexpr double kPlaneZ = 0.5;

double sdf_sphere(const Vec3& q) { return norm(q - kCenter) - kSphereRadius; }

double sdf_torus(const Vec3& q) {
    const Vec3 d = q - kCenter;
    const double ring = std::sqrt(d.x * d.x + d.y * d.y) - kTorusMajor;
    return std::sqrt(ring * ring + d.z * d.z) - kTorusMinor;
}

double sdf_box(const Vec3& q) {
    const Vec3 d = q - kCenter;
    const Vec3 a{std::abs(d.x) - kBoxHalf, std::abs(d.y) - kBoxHalf, std::abs(d.z) - kBoxHalf};
    const Vec3 outside{std::max(a.x, 0.0), std::max(a.y, 0.0), std::max(a.z, 0.0)};
    return norm(outside) + std::min(std::max({a.x, a.y, a.z}), 0.0);
}

double sdf_plane(const Vec3& q) { return q.z - kPlaneZ; }

struct SurfaceSample {
    Vec3 position;
    Vec3 normal;
};

SurfaceSample sample_sphere(Rng& rng) {
    const Vec3 dir = rng.unit_vector();
    return {kCenter + dir * kSphereRadius, dir};
}

SurfaceSample sample_torus(Rng& rng) {
    // area element is proportional to R + r cos(v); rejection-sample v
    double v;
    for (;;) {
        v = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double accept = (kTorusMajor + kTorusMinor * std::cos(v)) / (kTorusMajor + kTorusMinor);
        if (rng.uniform() <= accept) break;
    }
    const double u = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double cu = std::cos(u), su = std::sin(u);
    const double cv = std::cos(v), sv = std::sin(v);
    const Vec3 pos{kCenter.x + (kTorusMajor + kTorusMinor * cv) * cu,
                   kCenter.y + (kTorusMajor + kTorusMinor * cv) * su, kCenter.z + kTorusMinor * sv};
    return {pos, Vec3{cu * cv, su * cv, sv}};
}

SurfaceSample sample_box(Rng& rng) {
    // all six faces have equal area
    const int face = static_cast<int>(rng.uniform() * 6.0) % 6;
    const int axis = face / 2;
    const double sign = (face % 2 == 0) ? 1.0 : -1.0;
    const double a = rng.uniform(-kBoxHalf, kBoxHalf);
    const double b = rng.uniform(-kBoxHalf, kBoxHalf);
    Vec3 local{};
    local.set(axis, sign * kBoxHalf);
    local.set((axis + 1) % 3, a);
    local.set((axis + 2) % 3, b);
    Vec3 n{};
    n.set(axis, sign);
    return {kCenter + local, n};
}

SurfaceSample sample_plane(Rng& rng) {
    return {Vec3{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), kPlaneZ}, Vec3{0.0, 0.0, 1.0}};
}

}  // namespace

ShapeKind parse_shape(std::string_view name) {
    if (name == "sphere") return ShapeKind::sphere;
    if (name == "torus") return ShapeKind::torus;
    if (name == "box") return ShapeKind::box;
    if (name == "plane") return ShapeKind::plane;
    throw std::invalid_argument("unknown shape kind: " + std::string(name));
}

const char* shape_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::torus: return "torus";
        case ShapeKind::box: return "box";
        case ShapeKind::plane: return "plane";
    }
    return "?";
}

double shape_sdf(ShapeKind kind, const Vec3& q) {
    switch (kind) {
        case ShapeKind::sphere: return sdf_sphere(q);
        case ShapeKind::torus: return sdf_torus(q);
        case ShapeKind::box: return sdf_box(q);
        case ShapeKind::plane: return sdf_plane(q);
    }
    return 0.0;
}

SdfOracle shape_oracle(ShapeKind kind) {
    return [kind](const Vec3& q) { return shape_sdf(kind, q); };
}

PointCloud sample_shape(ShapeKind kind, int n, double noise_pos, double noise_normal_deg,
                        std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_shape: n must be >= 1");
    Rng rng(seed);
    PointCloud cloud;
    cloud.feature_dim = 0;
    cloud.points.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SurfaceSample s{};
        switch (kind) {
            case ShapeKind::sphere: s = sample_sphere(rng); break;
            case ShapeKind::torus: s = sample_torus(rng); break;
            case ShapeKind::box: s = sample_box(rng); break;
            case ShapeKind::plane: s = sample_plane(rng); break;
        }
        if (noise_pos > 0.0) s.position += rng.normal3(noise_pos);
        if (noise_normal_deg > 0.0) {
            const double angle = noise_normal_deg * std::numbers::pi / 180.0;
            s.normal = normalized(rotate_about_axis(s.normal, rng.unit_vector(), angle));
        }
        OrientedPoint pt;
        pt.position = clamp01(s.position);
        pt.normal = s.normal;
        cloud.points.push_back(std::move(pt));
    }
    assign_default_kernel_params(cloud);
    return cloud;
}

double mean_neighbor_spacing(const PointCloud& cloud) {
    if (cloud.size() < 2) return 0.05;  // lone point: fixed fallback spacing
    std::vector<Vec3> pos(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) pos[i] = cloud.points[i].position;
    return mean_nearest_neighbor_spacing(pos);
}

void assign_default_kernel_params(PointCloud& cloud, double m) {
    const double h = mean_neighbor_spacing(cloud);
    const double radius = 4.0 * h;
    const double k = std::max(kKernelKFloor, radius * radius / m);
    for (auto& pt : cloud.points) pt.kernel = KernelParams{k, m};
}

}  // namespace imls
