#pragma once

#include <cmath>
#include <stdexcept>

namespace imls {

// Shape parameters of the per-point weighting kernel. k sets the spatial
// extent (units of squared distance), m the sharpness of the decay; the
// squared support radius is m*k. The exponential baseline carries its
// influence radius through the same struct as r = sqrt(k) and is truncated
// at the shared support bound, so both kernels bin identically.
struct KernelParams {
    double k = 1.0;
    double m = 2.0;

    bool valid() const { return k > 0.0 && m >= 1.0; }
};

enum class KernelKind { compact, exponential };

// clamp ranges applied during optimization
inline constexpr double kKernelKFloor = 1e-6;
inline constexpr double kKernelMFloor = 1.0;
inline constexpr double kKernelMCeil = 32.0;

// covered/uncovered threshold on accumulated kernel weight
inline constexpr double kCoverageEps = 1e-12;

namespace detail {

inline void check_kernel_params(const KernelParams& p) {
    if (!p.valid())
        throw std::invalid_argument("kernel params invalid: require k > 0 and m >= 1");
}

// base^e via exp(e*log(base)) for non-integer exponents; underflow guard
inline constexpr double kPowBaseFloor = 1e-300;

inline double guarded_pow(double base, double e) {
    if (base < kPowBaseFloor) return 0.0;
    return std::exp(e * std::log(base));
}

}  // namespace detail

// squared-distance support bound; zero weight beyond it
inline double support_radius_sq(const KernelParams& p) {
    detail::check_kernel_params(p);
    return p.m * p.k;
}

// gamma(s) = (1 - s/(mk))^(2m) * (2s/k + 1) on [0, mk], 0 beyond.
// s is the squared Euclidean distance to the point.
inline double eval_compact(double s, const KernelParams& p) {
    detail::check_kernel_params(p);
    if (s < 0.0) throw std::invalid_argument("squared distance must be nonnegative");
    const double mk = p.m * p.k;
    if (s >= mk) return 0.0;
    const double base = 1.0 - s / mk;
    const double w = detail::guarded_pow(base, 2.0 * p.m);
    return w * (2.0 * s / p.k + 1.0);
}

// exp(-sq_dist / r^2); strictly positive, infinite support
inline double eval_exponential(double sq_dist, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("influence radius must be positive");
    if (sq_dist < 0.0) throw std::invalid_argument("squared distance must be nonnegative");
    return std::exp(-sq_dist / (r * r));
}

// d gamma / ds = (2/k) [ base^(2m) - base^(2m-1) (2s/k + 1) ]
inline double grad_s(double s, const KernelParams& p) {
    detail::check_kernel_params(p);
    const double mk = p.m * p.k;
    if (s < 0.0 || s >= mk) return 0.0;
    const double base = 1.0 - s / mk;
    const double pw1 = detail::guarded_pow(base, 2.0 * p.m - 1.0);
    const double pw = pw1 * base;
    return (2.0 / p.k) * (pw - pw1 * (2.0 * s / p.k + 1.0));
}

// d gamma / dk = (2s/k^2) [ base^(2m-1) (2s/k + 1) - base^(2m) ]
inline double grad_k(double s, const KernelParams& p) {
    detail::check_kernel_params(p);
    const double mk = p.m * p.k;
    if (s < 0.0 || s >= mk) return 0.0;
    const double base = 1.0 - s / mk;
    const double pw1 = detail::guarded_pow(base, 2.0 * p.m - 1.0);
    const double pw = pw1 * base;
    return (2.0 * s / (p.k * p.k)) * (pw1 * (2.0 * s / p.k + 1.0) - pw);
}

// d gamma / dm = gamma * 2 [ ln(base) + s / (km * base) ], expanded so the
// divide-by-base never happens: gamma/base = base^(2m-1) (2s/k + 1).
// The closed form is singular at s = mk; the support convention returns 0 there.
inline double grad_m(double s, const KernelParams& p) {
    detail::check_kernel_params(p);
    const double mk = p.m * p.k;
    if (s < 0.0 || s >= mk) return 0.0;
    const double base = 1.0 - s / mk;
    if (base < detail::kPowBaseFloor) return 0.0;
    const double lin = 2.0 * s / p.k + 1.0;
    const double pw1 = detail::guarded_pow(base, 2.0 * p.m - 1.0);
    const double pw = pw1 * base;
    return 2.0 * (pw * lin * std::log(base) + pw1 * lin * s / (p.k * p.m));
}

// --- kernel dispatch used by field evaluation and splatting ---------------
//
// Both kernels share the binning bound s <= m*k. The compact kernel vanishes
// there by construction; the exponential baseline is truncated, which is
// exactly the heuristic cut-off it is criticized for.

inline double kernel_weight(KernelKind kind, double s, const KernelParams& p) {
    if (kind == KernelKind::compact) return eval_compact(s, p);
    detail::check_kernel_params(p);
    if (s > p.m * p.k) return 0.0;
    return std::exp(-s / p.k);
}

inline double kernel_weight_grad_s(KernelKind kind, double s, const KernelParams& p) {
    if (kind == KernelKind::compact) return grad_s(s, p);
    detail::check_kernel_params(p);
    if (s > p.m * p.k) return 0.0;
    return -std::exp(-s / p.k) / p.k;
}

inline double kernel_weight_grad_k(KernelKind kind, double s, const KernelParams& p) {
    if (kind == KernelKind::compact) return grad_k(s, p);
    detail::check_kernel_params(p);
    if (s > p.m * p.k) return 0.0;
    return std::exp(-s / p.k) * s / (p.k * p.k);
}

inline double kernel_weight_grad_m(KernelKind kind, double s, const KernelParams& p) {
    if (kind == KernelKind::compact) return grad_m(s, p);
    detail::check_kernel_params(p);
    return 0.0;
}

}  // namespace imls
