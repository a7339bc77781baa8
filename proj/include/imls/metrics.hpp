#pragma once

#include <span>
#include <vector>

#include "imls/vec3.hpp"

namespace imls {

// Row-major image with values in [0,1]; 1 or 3 channels.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> pixels;

    double at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const { return pixels.size(); }
};

// Symmetric mean nearest-neighbor distance between two point sets,
// 0.5 * (mean_a min_b ||a-b|| + mean_b min_a ||a-b||). Exact: the spatial
// hash only accelerates the search, widening rings until no closer cell can
// exist.
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b);

// mean distance from each point to its nearest other point; needs >= 2 points
double mean_nearest_neighbor_spacing(std::span<const Vec3> pts);

double mse(const ImageBuffer& a, const ImageBuffer& b);

// -10 log10(MSE) for peak 1.0; +infinity for identical images
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// mean absolute pixel difference
double l1(const ImageBuffer& a, const ImageBuffer& b);

// Structural similarity with the standard settings: 11x11 Gaussian window
// (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2, map averaged over pixels whose
// window lies fully inside, then over channels.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

// (1 - lambda) L1 + lambda (1 - SSIM)/2
double composite_loss(const ImageBuffer& img, const ImageBuffer& ref, double lambda_mix = 0.2);

}  // namespace imls
