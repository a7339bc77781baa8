#include "imls/filtering.hpp"

#include <cmath>
#include <stdexcept>

namespace imls {

void FilterConfig::validate() const {
    if (alpha < 0.0) throw std::invalid_argument("filter alpha must be >= 0");
    if (lambda_lap < 0.0) throw std::invalid_argument("filter lambda must be >= 0");
    if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
    if (!(anneal_fraction > 0.0) || anneal_fraction > 1.0)
        throw std::invalid_argument("anneal_fraction must be in (0,1]");
}

double reflect(double x) {
    double m = std::fmod(x, 2.0);
    if (m < 0.0) m += 2.0;
    return m <= 1.0 ? m : 2.0 - m;
}

Vec3 reflect(const Vec3& v) { return {reflect(v.x), reflect(v.y), reflect(v.z)}; }

double blur_estimate(const ScalarField& field, const Vec3& q, const FilterConfig& cfg, Rng& rng) {
    cfg.validate();
    if (cfg.alpha == 0.0) return field(q);
    const double stddev = std::sqrt(cfg.alpha);
    double acc = 0.0;
    for (int j = 0; j < cfg.mc_samples; ++j) acc += field(reflect(q + rng.normal3(stddev)));
    return acc / cfg.mc_samples;
}

double laplacian_estimate(const ScalarField& field, const Vec3& q, const FilterConfig& cfg,
                          Rng& rng) {
    cfg.validate();
    if (cfg.alpha == 0.0)
        throw std::invalid_argument("laplacian_estimate: undefined for alpha = 0");
    const double stddev = std::sqrt(cfg.alpha);
    const double inv_var = 1.0 / cfg.alpha;
    const double d = cfg.dim_corrected ? 3.0 : 1.0;
    double acc = 0.0;
    for (int j = 0; j < cfg.mc_samples; ++j) {
        const Vec3 delta = rng.normal3(stddev);
        const double f = field(reflect(q + delta));
        acc += (inv_var * norm_sq(delta) - d) * inv_var * f;
    }
    return acc / cfg.mc_samples;
}

double filtered_field(const ScalarField& field, const Vec3& q, const FilterConfig& cfg, Rng& rng) {
    cfg.validate();
    if (cfg.alpha == 0.0) return field(q);
    const double stddev = std::sqrt(cfg.alpha);
    const double inv_var = 1.0 / cfg.alpha;
    const double d = cfg.dim_corrected ? 3.0 : 1.0;
    double acc = 0.0;
    for (int j = 0; j < cfg.mc_samples; ++j) {
        const Vec3 delta = rng.normal3(stddev);
        const double f = field(reflect(q + delta));
        acc += (1.0 + cfg.lambda_lap * (inv_var * norm_sq(delta) - d) * inv_var) * f;
    }
    return acc / cfg.mc_samples;
}

double anneal_alpha(int step, int total_steps, double alpha0, const FilterConfig& cfg) {
    cfg.validate();
    if (step < 0 || step > total_steps)
        throw std::invalid_argument("anneal_alpha: step out of range");
    const double t_anneal = cfg.anneal_fraction * total_steps;
    if (static_cast<double>(step) >= t_anneal) return 0.0;
    return alpha0 * std::exp(-5.0 * step / t_anneal);
}

}  // namespace imls
