#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "imls/field.hpp"
#include "test_helpers.hpp"

using namespace imls;

namespace {

// configurations whose queries sit close to a support boundary make finite
// differences see the truncation step; skip those for the exponential kernel
bool query_clear_of_boundaries(const Vec3& q, const PointCloud& cloud, double margin) {
    return std::all_of(cloud.points.begin(), cloud.points.end(), [&](const OrientedPoint& pt) {
        const double s = norm_sq(q - pt.position);
        return std::abs(s - pt.kernel.m * pt.kernel.k) > margin;
    });
}

// coverage with enough slack that +-1e-6 perturbations cannot uncover q
bool strongly_covered(const Vec3& q, const PointCloud& cloud, KernelKind kind) {
    double den = 0.0;
    for (const auto& pt : cloud.points) {
        const double s = norm_sq(q - pt.position);
        if (s > pt.kernel.m * pt.kernel.k) continue;
        den += kernel_weight(kind, s, pt.kernel);
    }
    return den > 1e-6;
}

}  // namespace

TEST_CASE("point function is the signed plane distance") {
    OrientedPoint pt;
    pt.position = {0, 0, 0};
    pt.normal = {0, 0, 1};
    CHECK(point_function({0, 0, 1}, pt) == 1.0);
    CHECK(point_function({0, 0, 0}, pt) == 0.0);
    CHECK(point_function({1, 0, 0}, pt) == 0.0);
}

TEST_CASE("single point cloud reduces to the plane distance") {
    PointCloud cloud;
    cloud.feature_dim = 0;
    OrientedPoint pt;
    pt.position = {0.5, 0.5, 0.5};
    pt.normal = {0, 0, 1};
    pt.kernel = {1.0, 2.0};
    cloud.points.push_back(pt);

    const auto v = eval_sdf({0.5, 0.5, 0.7}, cloud);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(0.2).epsilon(1e-14));

    // quotient cancellation at random covered queries
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const Vec3 q{rng.uniform(), rng.uniform(), rng.uniform()};
        const auto s = eval_sdf(q, cloud);
        if (!s) continue;
        CHECK(*s == doctest::Approx(point_function(q, pt)).epsilon(1e-13));
    }
}

TEST_CASE("symmetric pair averages to the midplane value") {
    PointCloud cloud;
    cloud.feature_dim = 0;
    for (const double x : {0.4, 0.6}) {
        OrientedPoint pt;
        pt.position = {x, 0.5, 0.5};
        pt.normal = {0, 0, 1};
        pt.kernel = {0.5, 2.0};
        cloud.points.push_back(pt);
    }
    const auto v = eval_sdf({0.5, 0.5, 0.6}, cloud);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(0.1).epsilon(1e-13));
}

TEST_CASE("query outside every support is uncovered") {
    PointCloud cloud;
    cloud.feature_dim = 0;
    OrientedPoint pt;
    pt.position = {0.2, 0.2, 0.2};
    pt.normal = {0, 0, 1};
    pt.kernel = {0.001, 1.0};  // support radius ~0.032
    cloud.points.push_back(pt);
    CHECK(!eval_sdf({0.9, 0.9, 0.9}, cloud).has_value());
    CHECK(!eval_texture({0.9, 0.9, 0.9}, cloud).has_value());
    CHECK_THROWS_AS(eval_sdf_with_grads({0.9, 0.9, 0.9}, cloud, 1.0), std::invalid_argument);
}

TEST_CASE("texture field blends features with the same weights") {
    Rng rng(17);
    PointCloud cloud = test::random_cloud(rng, 6, 0.2, 0.5, 1.0, 4.0, 3);

    SUBCASE("identical features reproduce exactly") {
        for (auto& pt : cloud.points) pt.feature = {0.25, 0.5, 0.75};
        const auto t = eval_texture({0.5, 0.5, 0.5}, cloud);
        REQUIRE(t.has_value());
        CHECK((*t)[0] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK((*t)[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK((*t)[2] == doctest::Approx(0.75).epsilon(1e-12));
    }

    SUBCASE("all-ones features show the weights sum to one") {
        for (auto& pt : cloud.points) pt.feature = {1.0, 1.0, 1.0};
        const auto t = eval_texture({0.5, 0.5, 0.5}, cloud);
        REQUIRE(t.has_value());
        CHECK(std::abs((*t)[0] - 1.0) < 1e-10);
    }

    SUBCASE("single covering point returns its feature") {
        PointCloud one;
        one.feature_dim = 3;
        OrientedPoint pt = cloud.points[0];
        pt.feature = {0.1, 0.9, 0.3};
        pt.position = {0.5, 0.5, 0.5};
        pt.kernel = {1.0, 2.0};
        one.points.push_back(pt);
        const auto t = eval_texture({0.52, 0.5, 0.5}, one);
        REQUIRE(t.has_value());
        CHECK((*t)[1] == doctest::Approx(0.9).epsilon(1e-13));
    }

    SUBCASE("two equidistant points average features") {
        PointCloud two;
        two.feature_dim = 1;
        for (const double x : {0.4, 0.6}) {
            OrientedPoint pt;
            pt.position = {x, 0.5, 0.5};
            pt.normal = {0, 0, 1};
            pt.kernel = {0.5, 2.0};
            pt.feature = {x < 0.5 ? 0.2 : 0.8};
            two.points.push_back(pt);
        }
        const auto t = eval_texture({0.5, 0.5, 0.5}, two);
        REQUIRE(t.has_value());
        CHECK((*t)[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("field value stays inside the covering plane distances") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const PointCloud cloud = test::random_cloud(rng, 8, 0.1, 0.4, 1.0, 4.0);
        const Vec3 q{rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
        const auto v = eval_sdf(q, cloud);
        if (!v) continue;
        double lo = 1e300, hi = -1e300;
        for (const auto& pt : cloud.points) {
            if (norm_sq(q - pt.position) > pt.kernel.m * pt.kernel.k) continue;
            const double w = point_function(q, pt);
            lo = std::min(lo, w);
            hi = std::max(hi, w);
        }
        CHECK(*v >= lo - 1e-12);
        CHECK(*v <= hi + 1e-12);
    }
}

TEST_CASE("coplanar clouds reproduce the plane exactly") {
    for (const KernelKind kind : {KernelKind::compact, KernelKind::exponential}) {
        Rng rng(31);
        const double plane_z = 0.45;
        PointCloud cloud;
        cloud.feature_dim = 0;
        for (int i = 0; i < 20; ++i) {
            OrientedPoint pt;
            pt.position = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), plane_z};
            pt.normal = {0, 0, 1};
            pt.kernel = {rng.uniform(0.05, 0.3), rng.uniform(1.0, 4.0)};
            cloud.points.push_back(pt);
        }
        for (int i = 0; i < 100; ++i) {
            const Vec3 q{rng.uniform(), rng.uniform(), rng.uniform()};
            const auto v = eval_sdf(q, cloud, kind);
            if (!v) continue;
            CHECK(std::abs(*v - (q.z - plane_z)) < 1e-9);
        }
    }
}

TEST_CASE("single point gradients have the hand-derived form") {
    PointCloud cloud;
    cloud.feature_dim = 0;
    OrientedPoint pt;
    pt.position = {0.5, 0.5, 0.5};
    pt.normal = normalized(Vec3{0.3, -0.2, 0.93});
    pt.kernel = {0.5, 2.0};
    cloud.points.push_back(pt);

    const Vec3 q{0.6, 0.45, 0.55};
    const auto [value, grads] = eval_sdf_with_grads(q, cloud, 1.0);
    CHECK(value == doctest::Approx(point_function(q, pt)).epsilon(1e-13));
    const Vec3 expect_dn = q - pt.position;
    for (int c = 0; c < 3; ++c) {
        CHECK(grads.d_normal[0][c] == doctest::Approx(expect_dn[c]).epsilon(1e-10));
        CHECK(grads.d_position[0][c] == doctest::Approx(-pt.normal[c]).epsilon(1e-10));
    }
    CHECK(std::abs(grads.d_k[0]) < 1e-12);
    CHECK(std::abs(grads.d_m[0]) < 1e-12);
}

TEST_CASE("zero upstream zeroes every gradient") {
    Rng rng(41);
    const PointCloud cloud = test::random_cloud(rng, 5, 0.2, 0.5, 1.0, 4.0);
    const auto [value, grads] = eval_sdf_with_grads({0.5, 0.5, 0.5}, cloud, 0.0);
    (void)value;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(grads.d_position[i] == Vec3{});
        CHECK(grads.d_normal[i] == Vec3{});
        CHECK(grads.d_k[i] == 0.0);
        CHECK(grads.d_m[i] == 0.0);
    }
}

TEST_CASE("field gradients match finite differences of the field") {
    for (const KernelKind kind : {KernelKind::compact, KernelKind::exponential}) {
        Rng rng(kind == KernelKind::compact ? 1234 : 4321);
        int tested = 0;
        while (tested < 100) {
            PointCloud cloud = test::random_cloud(rng, 5, 0.2, 0.6, 1.2, 4.0);
            const Vec3 q{rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
            if (!strongly_covered(q, cloud, kind)) continue;
            if (!query_clear_of_boundaries(q, cloud, 1e-3)) continue;
            ++tested;

            const double upstream = 1.0;
            const auto [value, grads] = eval_sdf_with_grads(q, cloud, upstream, kind);
            (void)value;
            const double h = 1e-6;

            for (std::size_t i = 0; i < cloud.size(); ++i) {
                for (int c = 0; c < 3; ++c) {
                    const auto fd_pos = test::fd_central(
                        [&](double x) {
                            PointCloud tmp = cloud;
                            Vec3 p = tmp.points[i].position;
                            p.set(c, x);
                            tmp.points[i].position = p;
                            return eval_sdf(q, tmp, kind).value();
                        },
                        cloud.points[i].position[c], h);
                    CHECK(test::rel_err(grads.d_position[i][c], fd_pos) < 1e-4);

                    const auto fd_nrm = test::fd_central(
                        [&](double x) {
                            PointCloud tmp = cloud;
                            Vec3 n = tmp.points[i].normal;
                            n.set(c, x);
                            tmp.points[i].normal = n;
                            return eval_sdf(q, tmp, kind).value();
                        },
                        cloud.points[i].normal[c], h);
                    CHECK(test::rel_err(grads.d_normal[i][c], fd_nrm) < 1e-4);
                }
                const auto fd_k = test::fd_central(
                    [&](double x) {
                        PointCloud tmp = cloud;
                        tmp.points[i].kernel.k = x;
                        return eval_sdf(q, tmp, kind).value();
                    },
                    cloud.points[i].kernel.k, h);
                CHECK(test::rel_err(grads.d_k[i], fd_k) < 1e-4);

                const auto fd_m = test::fd_central(
                    [&](double x) {
                        PointCloud tmp = cloud;
                        tmp.points[i].kernel.m = x;
                        return eval_sdf(q, tmp, kind).value();
                    },
                    cloud.points[i].kernel.m, h);
                CHECK(test::rel_err(grads.d_m[i], fd_m) < 1e-4);
            }
        }
    }
}
