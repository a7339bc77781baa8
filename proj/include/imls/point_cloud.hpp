#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "imls/kernel.hpp"
#include "imls/vec3.hpp"

namespace imls {

// One splat: the full set of trainable per-point attributes.
struct OrientedPoint {
    Vec3 position;                // in [0,1]^3
    Vec3 normal;                  // unit
    KernelParams kernel;
    std::vector<double> feature;  // D reals, D uniform across the cloud
};

struct PointCloud {
    std::vector<OrientedPoint> points;
    int feature_dim = 0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    void validate() const {
        for (const auto& pt : points) {
            if (std::abs(norm_sq(pt.normal) - 1.0) > 2e-6)
                throw std::invalid_argument("point normal is not unit length");
            if (!pt.kernel.valid())
                throw std::invalid_argument("point kernel params invalid");
            if (pt.feature.size() != static_cast<std::size_t>(feature_dim))
                throw std::invalid_argument("point feature dimension mismatch");
        }
    }
};

// Per-point partial derivatives of a scalar objective with respect to every
// trainable attribute. Stored as parallel arrays over the cloud.
struct AttributeGradients {
    std::vector<Vec3> d_position;
    std::vector<Vec3> d_normal;
    std::vector<double> d_k;
    std::vector<double> d_m;
    std::vector<double> d_feature;  // N x D, row-major
    int feature_dim = 0;

    void resize(std::size_t n, int dim) {
        feature_dim = dim;
        d_position.assign(n, Vec3{});
        d_normal.assign(n, Vec3{});
        d_k.assign(n, 0.0);
        d_m.assign(n, 0.0);
        d_feature.assign(n * static_cast<std::size_t>(dim), 0.0);
    }

    std::size_t size() const { return d_k.size(); }
};

}  // namespace imls
