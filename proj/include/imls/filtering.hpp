#pragma once

#include <cstdint>
#include <functional>

#include "imls/rng.hpp"
#include "imls/vec3.hpp"

namespace imls {

using ScalarField = std::function<double(const Vec3&)>;

// Monte-Carlo field filtering: Gaussian blur by query perturbation, a
// curvature (Laplacian-of-Gaussian) correction term, and the annealing
// schedule for the noise scale. alpha is the noise covariance scale, i.e.
// perturbations are N(0, alpha I) with standard deviation sqrt(alpha).
struct FilterConfig {
    double alpha = 0.0025;
    double lambda_lap = 0.8;
    int mc_samples = 1;
    double anneal_fraction = 1.0 / 3.0;
    std::uint64_t seed = 0;
    bool dim_corrected = true;

    void validate() const;
};

// Period-2 reflection folding any real coordinate into [0,1]: mirrors at 0
// and 1 so perturbed queries stay inside the grid domain.
double reflect(double x);
Vec3 reflect(const Vec3& v);

// (1/M) sum f(reflect(q + delta_j)), delta_j ~ N(0, alpha I).
// alpha = 0 evaluates f(q) directly, no sampling.
double blur_estimate(const ScalarField& field, const Vec3& q, const FilterConfig& cfg, Rng& rng);

// Monte-Carlo Laplacian-of-Gaussian: with sigma^2 = alpha,
//   sigma^-4 mean(|delta|^2 f_j) - d sigma^-2 mean(f_j),
// d = 3 when dim_corrected (annihilates affine fields), d = 1 otherwise
// (the literal single-coefficient form, kept for comparison runs).
double laplacian_estimate(const ScalarField& field, const Vec3& q, const FilterConfig& cfg,
                          Rng& rng);

// blur + lambda_lap * laplacian with shared noise samples.
// alpha = 0 short-circuits to the raw field (the Laplacian term is 0).
double filtered_field(const ScalarField& field, const Vec3& q, const FilterConfig& cfg, Rng& rng);

// Exponential decay alpha0*exp(-5 t / T_a) over the first anneal_fraction of
// the run, then exactly 0 so the final iterations see the unperturbed field.
double anneal_alpha(int step, int total_steps, double alpha0, const FilterConfig& cfg);

}  // namespace imls
