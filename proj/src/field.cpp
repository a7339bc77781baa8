#include "imls/field.hpp"

#include <stdexcept>

namespace imls {

double point_function(const Vec3& query, const OrientedPoint& point) {
    return dot(query - point.position, point.normal);
}

std::optional<double> eval_sdf(const Vec3& query, const PointCloud& cloud, KernelKind kind) {
    if (cloud.empty()) throw std::invalid_argument("eval_sdf: empty cloud");
    double num = 0.0;
    double den = 0.0;
    for (const auto& pt : cloud.points) {
        const Vec3 d = query - pt.position;
        const double s = dot(d, d);
        if (s > pt.kernel.m * pt.kernel.k) continue;
        const double w = kernel_weight(kind, s, pt.kernel);
        num += w * dot(d, pt.normal);
        den += w;
    }
    if (den < kCoverageEps) return std::nullopt;
    return num / den;
}

std::optional<std::vector<double>> eval_texture(const Vec3& query, const PointCloud& cloud,
                                                KernelKind kind) {
    if (cloud.empty()) throw std::invalid_argument("eval_texture: empty cloud");
    std::vector<double> num(static_cast<std::size_t>(cloud.feature_dim), 0.0);
    double den = 0.0;
    for (const auto& pt : cloud.points) {
        const Vec3 d = query - pt.position;
        const double s = dot(d, d);
        if (s > pt.kernel.m * pt.kernel.k) continue;
        const double w = kernel_weight(kind, s, pt.kernel);
        for (int c = 0; c < cloud.feature_dim; ++c) num[static_cast<std::size_t>(c)] += w * pt.feature[static_cast<std::size_t>(c)];
        den += w;
    }
    if (den < kCoverageEps) return std::nullopt;
    for (auto& v : num) v /= den;
    return num;
}

std::pair<double, AttributeGradients> eval_sdf_with_grads(const Vec3& query,
                                                          const PointCloud& cloud,
                                                          double upstream, KernelKind kind) {
    if (cloud.empty()) throw std::invalid_argument("eval_sdf_with_grads: empty cloud");

    // forward pass, same accumulation order as eval_sdf
    double num = 0.0;
    double den = 0.0;
    for (const auto& pt : cloud.points) {
        const Vec3 d = query - pt.position;
        const double s = dot(d, d);
        if (s > pt.kernel.m * pt.kernel.k) continue;
        const double w = kernel_weight(kind, s, pt.kernel);
        num += w * dot(d, pt.normal);
        den += w;
    }
    if (den < kCoverageEps)
        throw std::invalid_argument("eval_sdf_with_grads: query not covered");
    const double value = num / den;

    AttributeGradients grads;
    grads.resize(cloud.size(), cloud.feature_dim);
    if (upstream == 0.0) return {value, grads};

    // F = sum(w_i Omega_i) / sum(w_i). Each point gets two paths: through its
    // plane distance Omega_i (weight w_i/den) and through its kernel weight
    // (coefficient (Omega_i - F)/den).
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& pt = cloud.points[i];
        const Vec3 d = query - pt.position;
        const double s = dot(d, d);
        if (s > pt.kernel.m * pt.kernel.k) continue;
        const double w = kernel_weight(kind, s, pt.kernel);
        const double omega = dot(d, pt.normal);
        const double wn = w / den;
        const double weight_coeff = (omega - value) / den;

        const double dw_ds = kernel_weight_grad_s(kind, s, pt.kernel);
        // ds/dp = -2 d, dOmega/dp = -n
        grads.d_position[i] += upstream * (pt.normal * (-wn) + d * (-2.0 * dw_ds * weight_coeff));
        grads.d_normal[i] += upstream * wn * d;
        grads.d_k[i] += upstream * weight_coeff * kernel_weight_grad_k(kind, s, pt.kernel);
        grads.d_m[i] += upstream * weight_coeff * kernel_weight_grad_m(kind, s, pt.kernel);
        // d_feature stays zero on the SDF path
    }
    return {value, grads};
}

}  // namespace imls
