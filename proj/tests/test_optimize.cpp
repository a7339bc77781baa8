#include <cmath>
#include <cstring>

#include "doctest.h"
#include "imls/optimize.hpp"
#include "test_helpers.hpp"

using namespace imls;

namespace {

ReconstructionConfig small_config(int resolution, int steps) {
    ReconstructionConfig cfg;
    cfg.resolution = resolution;
    cfg.steps = steps;
    cfg.supervision_samples = 256;
    cfg.filter.alpha = 0.0;
    cfg.filter.seed = 9;
    return cfg;
}

bool clouds_bit_equal(const PointCloud& a, const PointCloud& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(&a.points[i].position, &b.points[i].position, sizeof(Vec3)) != 0)
            return false;
        if (std::memcmp(&a.points[i].normal, &b.points[i].normal, sizeof(Vec3)) != 0) return false;
        if (a.points[i].kernel.k != b.points[i].kernel.k) return false;
        if (a.points[i].kernel.m != b.points[i].kernel.m) return false;
        if (a.points[i].feature != b.points[i].feature) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("self-consistent targets give zero loss and zero gradients") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 300, 0.0, 0.0, 3);
    const ReconstructionConfig cfg = small_config(16, 1);
    const SplatGrid grid = splat_cloud(cloud, cfg);

    Rng rng(44);
    std::vector<SupervisionTarget> targets;
    for (int i = 0; i < 50; ++i) {
        const Vec3 q{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
        targets.push_back({q, trilinear_sdf(grid, q)});
    }
    const LossResult res = sdf_supervision_loss(grid, cfg.filter, LossKind::sdf_l1, targets, 0);
    CHECK(res.loss == 0.0);
    for (const double g : res.vertex_grads) CHECK(g == 0.0);
}

TEST_CASE("single vertex target produces the L1 sign at that vertex only") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 300, 0.0, 0.0, 3);
    const ReconstructionConfig cfg = small_config(16, 1);
    const SplatGrid grid = splat_cloud(cloud, cfg);

    // pick a covered vertex
    std::size_t vid = 0;
    for (std::size_t v = 0; v < grid.vertex_count(); ++v)
        if (grid.covered[v]) {
            vid = v;
            break;
        }
    REQUIRE(grid.covered[vid]);

    const std::vector<SupervisionTarget> targets = {{grid.vertex_position(vid),
                                                     grid.sdf[vid] - 0.25}};
    const LossResult res = sdf_supervision_loss(grid, cfg.filter, LossKind::sdf_l1, targets, 0);
    CHECK(res.loss == doctest::Approx(0.25).epsilon(1e-12));
    for (std::size_t v = 0; v < grid.vertex_count(); ++v) {
        if (v == vid)
            CHECK(res.vertex_grads[v] == 1.0);  // pred - gt > 0, one target
        else
            CHECK(res.vertex_grads[v] == 0.0);
    }
}

TEST_CASE("loss gradients match finite differences in the vertex values") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 400, 0.0, 0.0, 5);
    ReconstructionConfig cfg = small_config(16, 1);
    cfg.filter.alpha = 4e-4;
    cfg.filter.lambda_lap = 0.8;
    cfg.filter.mc_samples = 4;
    cfg.filter.seed = 123;
    SplatGrid grid = splat_cloud(cloud, cfg);

    Rng rng(71);
    std::vector<SupervisionTarget> targets;
    for (int i = 0; i < 10; ++i) {
        const Vec3 q{rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75)};
        targets.push_back({q, rng.uniform(-0.3, 0.3)});
    }

    for (const LossKind kind : {LossKind::sdf_l1, LossKind::sdf_l2}) {
        const LossResult res = sdf_supervision_loss(grid, cfg.filter, kind, targets, 7);
        int checked = 0;
        const double h = 1e-6;
        for (std::size_t v = 0; v < grid.vertex_count() && checked < 60; ++v) {
            if (res.vertex_grads[v] == 0.0 || !grid.covered[v]) continue;
            ++checked;
            const double saved = grid.sdf[v];
            grid.sdf[v] = saved + h;
            const double up = sdf_supervision_loss(grid, cfg.filter, kind, targets, 7).loss;
            grid.sdf[v] = saved - h;
            const double dn = sdf_supervision_loss(grid, cfg.filter, kind, targets, 7).loss;
            grid.sdf[v] = saved;
            CHECK(test::rel_err(res.vertex_grads[v], (up - dn) / (2.0 * h), 1e-3) < 1e-4);
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("degenerate supervision is reported") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 100, 0.0, 0.0, 3);
    const ReconstructionConfig cfg = small_config(32, 1);
    const SplatGrid grid = splat_cloud(cloud, cfg);
    // all targets far in the background region
    const std::vector<SupervisionTarget> targets = {{{0.01, 0.01, 0.01}, 0.0},
                                                    {{0.99, 0.01, 0.02}, 0.0}};
    CHECK_THROWS_AS(
        static_cast<void>(sdf_supervision_loss(grid, cfg.filter, LossKind::sdf_l1, targets, 0)),
        std::runtime_error);
}

TEST_CASE("zero learning rates leave the cloud bit-identical") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 120, 0.003, 3.0, 21);
    ReconstructionConfig cfg = small_config(16, 1);
    cfg.lr = {0.0, 0.0, 0.0, 0.0, 0.0};
    TrainState state = make_train_state(cloud, cfg);
    const auto targets = draw_supervision(shape_oracle(ShapeKind::sphere), cfg, 0);
    step(state, cfg, targets);
    CHECK(state.loss_history.size() == 1);
    CHECK(clouds_bit_equal(state.cloud, cloud));
}

TEST_CASE("a small step on plane supervision descends") {
    PointCloud cloud;
    cloud.feature_dim = 0;
    OrientedPoint pt;
    pt.position = {0.5, 0.5, 0.55};
    pt.normal = normalized(Vec3{0.2, 0.1, 0.97});
    pt.kernel = {0.08, 2.0};
    cloud.points.push_back(pt);

    const auto oracle = shape_oracle(ShapeKind::plane);
    bool descended = false;
    for (const double scale : {1.0, 0.1, 0.01}) {
        ReconstructionConfig cfg = small_config(16, 2);
        cfg.lr.position *= scale;
        cfg.lr.normal *= scale;
        cfg.lr.k *= scale;
        cfg.lr.m *= scale;
        TrainState state = make_train_state(cloud, cfg);
        const auto targets = draw_supervision(oracle, cfg, 0);
        step(state, cfg, targets);
        step(state, cfg, targets);  // same targets isolate the descent step
        if (state.loss_history[1] < state.loss_history[0]) {
            descended = true;
            break;
        }
    }
    CHECK(descended);
}

TEST_CASE("constraints are restored after aggressive steps") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 80, 0.01, 5.0, 33);
    ReconstructionConfig cfg = small_config(16, 1);
    cfg.lr = {0.5, 0.5, 0.5, 2.0, 0.1};
    TrainState state = make_train_state(cloud, cfg);
    const auto targets = draw_supervision(shape_oracle(ShapeKind::sphere), cfg, 0);
    step(state, cfg, targets);
    for (const auto& pt : state.cloud.points) {
        CHECK(std::abs(norm_sq(pt.normal) - 1.0) < 2e-6);
        CHECK(pt.kernel.k >= kKernelKFloor);
        CHECK(pt.kernel.m >= kKernelMFloor);
        CHECK(pt.kernel.m <= kKernelMCeil);
        for (int c = 0; c < 3; ++c) {
            CHECK(pt.position[c] >= 0.0);
            CHECK(pt.position[c] <= 1.0);
        }
    }
}

TEST_CASE("full-pipeline attribute gradients match finite differences") {
    Rng rng(1618);
    PointCloud cloud = test::random_cloud(rng, 12, 0.05, 0.15, 1.5, 3.0);
    ReconstructionConfig cfg = small_config(16, 1);

    const BinIndex index = bin_points(cloud, cfg.resolution);
    SplatGrid grid = make_grid(cfg.resolution, 0);
    splat_forward(cloud, index, cfg.kernel_kind, grid);
    finalize(grid, cfg.effective_background());

    std::vector<SupervisionTarget> targets;
    for (int i = 0; i < 12; ++i) {
        Vec3 q;
        do {
            q = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
        } while (!cell_touches_coverage(grid, q));
        targets.push_back({q, rng.uniform(-0.2, 0.2)});
    }

    const LossResult res = sdf_supervision_loss(grid, cfg.filter, cfg.loss_kind, targets, 0);
    const AttributeGradients grads =
        splat_backward(cloud, index, cfg.kernel_kind, grid, res.vertex_grads);

    const auto pipeline_loss = [&](const PointCloud& c) {
        const BinIndex idx = bin_points(c, cfg.resolution);
        SplatGrid g = make_grid(cfg.resolution, 0);
        splat_forward(c, idx, cfg.kernel_kind, g);
        finalize(g, cfg.effective_background());
        return sdf_supervision_loss(g, cfg.filter, cfg.loss_kind, targets, 0).loss;
    };

    const double h = 1e-6;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double fd = test::fd_central(
                [&](double x) {
                    PointCloud tmp = cloud;
                    Vec3 p = tmp.points[i].position;
                    p.set(c, x);
                    tmp.points[i].position = p;
                    return pipeline_loss(tmp);
                },
                cloud.points[i].position[c], h);
            CHECK(test::rel_err(grads.d_position[i][c], fd, 1e-3) < 1e-3);

            const double fd_n = test::fd_central(
                [&](double x) {
                    PointCloud tmp = cloud;
                    Vec3 n = tmp.points[i].normal;
                    n.set(c, x);
                    tmp.points[i].normal = n;
                    return pipeline_loss(tmp);
                },
                cloud.points[i].normal[c], h);
            CHECK(test::rel_err(grads.d_normal[i][c], fd_n, 1e-3) < 1e-3);
        }
        const double fd_k = test::fd_central(
            [&](double x) {
                PointCloud tmp = cloud;
                tmp.points[i].kernel.k = x;
                return pipeline_loss(tmp);
            },
            cloud.points[i].kernel.k, h);
        CHECK(test::rel_err(grads.d_k[i], fd_k, 1e-3) < 1e-3);

        const double fd_m = test::fd_central(
            [&](double x) {
                PointCloud tmp = cloud;
                tmp.points[i].kernel.m = x;
                return pipeline_loss(tmp);
            },
            cloud.points[i].kernel.m, h);
        CHECK(test::rel_err(grads.d_m[i], fd_m, 1e-3) < 1e-3);
    }
}

TEST_CASE("fit is reproducible and descends on the smoothed loss") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 400, 0.005, 5.0, 2024);
    ReconstructionConfig cfg = small_config(24, 40);
    cfg.filter.alpha = 0.0025;
    cfg.filter.lambda_lap = 0.8;
    cfg.supervision_samples = 512;

    const FitResult a = fit(cloud, shape_oracle(ShapeKind::sphere), cfg);
    const FitResult b = fit(cloud, shape_oracle(ShapeKind::sphere), cfg);
    CHECK(a.loss_history == b.loss_history);
    REQUIRE(a.loss_history.size() == 40);
    CHECK(clouds_bit_equal(a.cloud, b.cloud));

    // median of the last tenth below the median of the first tenth
    auto median_of = [](std::span<const double> v) {
        std::vector<double> tmp(v.begin(), v.end());
        std::sort(tmp.begin(), tmp.end());
        return tmp[tmp.size() / 2];
    };
    const std::span<const double> hist(a.loss_history);
    CHECK(median_of(hist.subspan(36)) < median_of(hist.first(4)));
    CHECK(!a.mesh.triangles.empty());
    CHECK(watertight(a.mesh));
}

TEST_CASE("zero steps pass the cloud through") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 500, 0.0, 0.0, 11);
    const ReconstructionConfig cfg = small_config(24, 0);
    const FitResult res = fit(cloud, shape_oracle(ShapeKind::sphere), cfg);
    CHECK(res.loss_history.empty());
    CHECK(clouds_bit_equal(res.cloud, cloud));
    CHECK(!res.mesh.triangles.empty());
}

TEST_CASE("exponential kernel runs the identical plumbing") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 300, 0.003, 3.0, 15);
    ReconstructionConfig cfg = small_config(16, 3);
    cfg.kernel_kind = KernelKind::exponential;
    const FitResult res = fit(cloud, shape_oracle(ShapeKind::sphere), cfg);
    CHECK(res.loss_history.size() == 3);
    for (const double loss : res.loss_history) CHECK(std::isfinite(loss));
    CHECK(!res.mesh.triangles.empty());
}

TEST_CASE("non-finite targets abort with the offending step") {
    const PointCloud cloud = sample_shape(ShapeKind::sphere, 100, 0.0, 0.0, 3);
    ReconstructionConfig cfg = small_config(16, 1);
    TrainState state = make_train_state(cloud, cfg);
    // a query on the sphere surface is always covered
    const std::vector<SupervisionTarget> targets = {
        {{0.8, 0.5, 0.5}, std::numeric_limits<double>::quiet_NaN()}};
    CHECK_THROWS_WITH_AS(step(state, cfg, targets), doctest::Contains("step 0"),
                         std::runtime_error);
}
