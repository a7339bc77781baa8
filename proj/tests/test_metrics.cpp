#include <cmath>
#include <limits>

#include "doctest.h"
#include "imls/metrics.hpp"
#include "imls/rng.hpp"

using namespace imls;

namespace {

double brute_force_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    const auto one_sided = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        double acc = 0.0;
        for (const Vec3& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : to) best = std::min(best, norm_sq(p - q));
            acc += std::sqrt(best);
        }
        return acc / static_cast<double>(from.size());
    };
    return 0.5 * (one_sided(a, b) + one_sided(b, a));
}

std::vector<Vec3> random_points(Rng& rng, int n, double lo = -1.0, double hi = 2.0) {
    std::vector<Vec3> pts(static_cast<std::size_t>(n));
    for (auto& p : pts) p = {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
    return pts;
}

// fixtures shared with the python reference generator: identical hash chain
ImageBuffer noise_image(std::uint64_t seed, int w, int h, int channels = 1) {
    ImageBuffer img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.pixels.resize(static_cast<std::size_t>(w) * h * channels);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<double>(mix_seed(seed, i)) * 0x1.0p-64;
    return img;
}

}  // namespace

TEST_CASE("chamfer basics") {
    const std::vector<Vec3> a = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    CHECK(chamfer_distance(a, a) == 0.0);

    const std::vector<Vec3> p = {{0, 0, 0}};
    const std::vector<Vec3> q = {{0, 0, 1}};
    CHECK(chamfer_distance(p, q) == 1.0);

    CHECK_THROWS_AS(chamfer_distance({}, a), std::invalid_argument);
}

TEST_CASE("chamfer equals brute force on random sets") {
    Rng rng(2718);
    for (int trial = 0; trial < 3; ++trial) {
        const auto a = random_points(rng, 500);
        const auto b = random_points(rng, 500);
        const double fast = chamfer_distance(a, b);
        const double slow = brute_force_chamfer(a, b);
        CHECK(std::abs(fast - slow) < 1e-12);
        CHECK(chamfer_distance(b, a) == fast);  // symmetric by construction
    }
}

TEST_CASE("chamfer under clustered and degenerate layouts") {
    Rng rng(999);
    // tight cluster plus one far outlier exercises the ring search
    std::vector<Vec3> a = random_points(rng, 100, 0.0, 0.01);
    a.push_back({50.0, 50.0, 50.0});
    std::vector<Vec3> b = random_points(rng, 80, 0.0, 0.01);
    CHECK(std::abs(chamfer_distance(a, b) - brute_force_chamfer(a, b)) < 1e-12);

    // all points identical
    const std::vector<Vec3> same(10, Vec3{0.25, 0.5, 0.75});
    CHECK(chamfer_distance(same, same) == 0.0);

    // translation of a single point moves the metric by the shift length
    const std::vector<Vec3> single = {{0.1, 0.2, 0.3}};
    std::vector<Vec3> shifted = {{0.1 + 0.05, 0.2, 0.3}};
    CHECK(chamfer_distance(single, shifted) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("translation bound") {
    Rng rng(5);
    const auto a = random_points(rng, 50, 0.0, 1.0);
    const Vec3 t{0.05, -0.03, 0.02};
    std::vector<Vec3> moved = a;
    for (auto& p : moved) p += t;
    CHECK(chamfer_distance(a, moved) <= norm(t) + 1e-12);
}

TEST_CASE("nearest neighbor spacing equals brute force") {
    Rng rng(13);
    const auto pts = random_points(rng, 200, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (i != j) best = std::min(best, norm_sq(pts[i] - pts[j]));
        acc += std::sqrt(best);
    }
    acc /= static_cast<double>(pts.size());
    CHECK(mean_nearest_neighbor_spacing(pts) == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("mse and psnr") {
    ImageBuffer a = noise_image(1, 16, 16);
    ImageBuffer b = a;

    CHECK(mse(a, b) == 0.0);
    CHECK(std::isinf(psnr(a, b)));

    for (auto& p : b.pixels) p = std::min(1.0, p * 0.0 + 0.1);  // constant 0.1
    for (auto& p : a.pixels) p = 0.0;
    CHECK(mse(a, b) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

    // checkerboard 0/1 against constant 0.5
    ImageBuffer c = a, d = a;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            c.at(x, y) = (x + y) % 2 ? 1.0 : 0.0;
            d.at(x, y) = 0.5;
        }
    CHECK(mse(c, d) == doctest::Approx(0.25).epsilon(1e-12));

    // identity between the two metrics whenever mse is positive
    Rng rng(3);
    ImageBuffer e = noise_image(7, 16, 16), f = noise_image(8, 16, 16);
    const double m = mse(e, f);
    REQUIRE(m > 0.0);
    CHECK(psnr(e, f) == doctest::Approx(-10.0 * std::log10(m)).epsilon(1e-9));

    ImageBuffer wrong;
    wrong.width = 8;
    wrong.height = 8;
    wrong.channels = 1;
    wrong.pixels.assign(64, 0.0);
    CHECK_THROWS_AS(mse(a, wrong), std::invalid_argument);
}

TEST_CASE("ssim identity and bounds") {
    const ImageBuffer a = noise_image(11, 32, 32);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const ImageBuffer x = noise_image(100 + trial, 24, 24);
        const ImageBuffer y = noise_image(200 + trial, 24, 24);
        const double s = ssim(x, y);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("ssim matches the scikit-image reference on frozen fixtures") {
    // values from tests/data/make_ssim_reference.py (same pixel hash chain)
    SUBCASE("uncorrelated noise") {
        const ImageBuffer a = noise_image(101, 32, 32);
        const ImageBuffer b = noise_image(202, 32, 32);
        CHECK(std::abs(ssim(a, b) - (-0.015014207593)) < 1e-4);
    }
    SUBCASE("ramp against noisy ramp") {
        ImageBuffer a;
        a.width = a.height = 32;
        a.channels = 1;
        a.pixels.resize(32 * 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) a.at(x, y) = (x + y) / 64.0;
        ImageBuffer b = a;
        const ImageBuffer n = noise_image(303, 32, 32);
        for (std::size_t i = 0; i < b.pixels.size(); ++i)
            b.pixels[i] = 0.75 * a.pixels[i] + 0.25 * n.pixels[i];
        CHECK(std::abs(ssim(a, b) - 0.324915719591) < 1e-4);
    }
    SUBCASE("rgb noise against its column-rolled copy") {
        ImageBuffer a;
        a.width = a.height = 32;
        a.channels = 3;
        a.pixels.resize(32 * 32 * 3);
        for (int c = 0; c < 3; ++c) {
            const ImageBuffer n = noise_image(401 + static_cast<std::uint64_t>(c), 32, 32);
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) a.at(x, y, c) = n.at(x, y);
        }
        ImageBuffer b = a;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) b.at((x + 1) % 32, y, c) = a.at(x, y, c);
        CHECK(std::abs(ssim(a, b) - 0.000288970610) < 1e-4);
    }
}

TEST_CASE("composite loss mixes l1 and structural dissimilarity") {
    const ImageBuffer a = noise_image(55, 32, 32);
    CHECK(composite_loss(a, a, 0.2) == 0.0);

    ImageBuffer zero = a, one = a;
    for (auto& p : zero.pixels) p = 0.0;
    for (auto& p : one.pixels) p = 1.0;
    CHECK(composite_loss(zero, one, 0.0) == doctest::Approx(1.0).epsilon(1e-12));

    const ImageBuffer b = noise_image(56, 32, 32);
    const double lam = 0.2;
    const double expect = (1.0 - lam) * l1(a, b) + lam * (1.0 - ssim(a, b)) / 2.0;
    CHECK(composite_loss(a, b, lam) == doctest::Approx(expect).epsilon(1e-15));

    const double pure_dssim = composite_loss(a, b, 1.0);
    CHECK(pure_dssim > 0.0);
    CHECK(pure_dssim < 1.0);

    CHECK_THROWS_AS(composite_loss(a, b, 1.5), std::invalid_argument);
}
