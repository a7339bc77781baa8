#include "imls/optimize.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace imls {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::size_t param_stride(const PointCloud& cloud) {
    return 8 + static_cast<std::size_t>(cloud.feature_dim);
}

double loss_term(LossKind kind, double err) {
    return kind == LossKind::sdf_l1 ? std::abs(err) : err * err;
}

double loss_term_grad(LossKind kind, double err) {
    if (kind == LossKind::sdf_l1) return err > 0.0 ? 1.0 : (err < 0.0 ? -1.0 : 0.0);
    return 2.0 * err;
}

}  // namespace

void ReconstructionConfig::validate() const {
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (resolution < 8) throw std::invalid_argument("resolution must be >= 8");
    if (supervision_samples < 1) throw std::invalid_argument("supervision_samples must be >= 1");
    if (lr.position < 0 || lr.normal < 0 || lr.k < 0 || lr.m < 0 || lr.feature < 0)
        throw std::invalid_argument("learning rates must be >= 0");
    filter.validate();
}

TrainState make_train_state(PointCloud cloud, const ReconstructionConfig& cfg) {
    cfg.validate();
    if (cloud.empty()) throw std::invalid_argument("make_train_state: empty cloud");
    cloud.validate();
    TrainState state;
    state.adam.first.assign(cloud.size() * param_stride(cloud), 0.0);
    state.adam.second.assign(cloud.size() * param_stride(cloud), 0.0);
    state.cloud = std::move(cloud);
    state.step = 0;
    state.alpha_current = cfg.steps > 0
                              ? anneal_alpha(0, cfg.steps, cfg.filter.alpha, cfg.filter)
                              : 0.0;
    return state;
}

LossResult sdf_supervision_loss(const SplatGrid& grid, const FilterConfig& filter,
                                LossKind loss_kind, std::span<const SupervisionTarget> targets,
                                std::uint64_t noise_stream) {
    if (!grid.finalized) throw std::invalid_argument("sdf_supervision_loss: grid not finalized");
    if (targets.empty()) throw std::invalid_argument("sdf_supervision_loss: no targets");

    bool any_covered = false;
    for (const auto& t : targets) {
        if (cell_touches_coverage(grid, t.query)) {
            any_covered = true;
            break;
        }
    }
    if (!any_covered)
        throw std::runtime_error("sdf_supervision_loss: degenerate supervision, "
                                 "no target touches covered vertices");

    LossResult result;
    result.vertex_grads.assign(grid.vertex_count(), 0.0);

    const double inv_n = 1.0 / static_cast<double>(targets.size());
    const double stddev = std::sqrt(filter.alpha);
    const double inv_var = filter.alpha > 0.0 ? 1.0 / filter.alpha : 0.0;
    const double d = filter.dim_corrected ? 3.0 : 1.0;

    // perturbed sample positions and filter coefficients, reused for the
    // gradient scatter so value and gradient share the same noise
    std::vector<std::pair<Vec3, double>> samples;
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const auto& target = targets[ti];
        double pred = 0.0;
        samples.clear();
        if (filter.alpha == 0.0) {
            pred = trilinear_sdf(grid, target.query);
            samples.emplace_back(target.query, 1.0);
        } else {
            Rng rng(filter.seed, mix_seed(noise_stream, ti));
            const double inv_m = 1.0 / filter.mc_samples;
            for (int j = 0; j < filter.mc_samples; ++j) {
                const Vec3 delta = rng.normal3(stddev);
                const Vec3 x = reflect(target.query + delta);
                const double coeff =
                    (1.0 + filter.lambda_lap * (inv_var * norm_sq(delta) - d) * inv_var) * inv_m;
                pred += coeff * trilinear_sdf(grid, x);
                samples.emplace_back(x, coeff);
            }
        }
        const double err = pred - target.gt_sdf;
        result.loss += loss_term(loss_kind, err) * inv_n;
        const double g = loss_term_grad(loss_kind, err) * inv_n;
        if (g != 0.0)
            for (const auto& [x, coeff] : samples)
                trilinear_scatter(grid, x, g * coeff, result.vertex_grads);
    }

    // the background is a constant: no gradient flows through uncovered vertices
    for (std::size_t v = 0; v < grid.vertex_count(); ++v)
        if (!grid.covered[v]) result.vertex_grads[v] = 0.0;
    return result;
}

namespace {

enum ParamGroup { kGroupPosition = 0, kGroupNormal, kGroupK, kGroupM, kGroupFeature };

double group_lr(const LearningRates& lr, int group) {
    switch (group) {
        case kGroupPosition: return lr.position;
        case kGroupNormal: return lr.normal;
        case kGroupK: return lr.k;
        case kGroupM: return lr.m;
        default: return lr.feature;
    }
}

// flatten gradients into the Adam slot layout
void adam_update(TrainState& state, const ReconstructionConfig& cfg,
                 const AttributeGradients& grads) {
    auto& cloud = state.cloud;
    const std::size_t stride = param_stride(cloud);
    state.adam.t += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, state.adam.t);
    const double bc2 = 1.0 - std::pow(kAdamBeta2, state.adam.t);

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto& pt = cloud.points[i];
        const std::size_t base = i * stride;

        const auto apply = [&](std::size_t slot, int group, double g, double& value) {
            double& m1 = state.adam.first[base + slot];
            double& m2 = state.adam.second[base + slot];
            m1 = kAdamBeta1 * m1 + (1.0 - kAdamBeta1) * g;
            m2 = kAdamBeta2 * m2 + (1.0 - kAdamBeta2) * g * g;
            const double lr = group_lr(cfg.lr, group);
            if (lr == 0.0) return;
            const double delta = lr * (m1 / bc1) / (std::sqrt(m2 / bc2) + kAdamEps);
            if (delta != 0.0) value -= delta;
        };

        for (int c = 0; c < 3; ++c) {
            double v = pt.position[c];
            apply(static_cast<std::size_t>(c), kGroupPosition, grads.d_position[i][c], v);
            pt.position.set(c, v);
        }
        for (int c = 0; c < 3; ++c) {
            double v = pt.normal[c];
            apply(static_cast<std::size_t>(3 + c), kGroupNormal, grads.d_normal[i][c], v);
            pt.normal.set(c, v);
        }
        apply(6, kGroupK, grads.d_k[i], pt.kernel.k);
        apply(7, kGroupM, grads.d_m[i], pt.kernel.m);
        for (int c = 0; c < cloud.feature_dim; ++c)
            apply(8 + static_cast<std::size_t>(c), kGroupFeature,
                  grads.d_feature[i * static_cast<std::size_t>(cloud.feature_dim) + c],
                  pt.feature[static_cast<std::size_t>(c)]);
    }
}

void restore_constraints(PointCloud& cloud) {
    for (auto& pt : cloud.points) {
        pt.position = clamp01(pt.position);
        // renormalize only when off unit length, so untouched points keep
        // their exact bits
        const double n2 = norm_sq(pt.normal);
        if (std::abs(n2 - 1.0) > 1e-12) {
            if (n2 < 1e-20)
                pt.normal = Vec3{0.0, 0.0, 1.0};
            else
                pt.normal = pt.normal / std::sqrt(n2);
        }
        pt.kernel.k = std::max(pt.kernel.k, kKernelKFloor);
        pt.kernel.m = std::clamp(pt.kernel.m, kKernelMFloor, kKernelMCeil);
    }
}

}  // namespace

void step(TrainState& state, const ReconstructionConfig& cfg,
          std::span<const SupervisionTarget> targets) {
    cfg.validate();

    const BinIndex index = bin_points(state.cloud, cfg.resolution);
    SplatGrid grid = make_grid(cfg.resolution, state.cloud.feature_dim);
    splat_forward(state.cloud, index, cfg.kernel_kind, grid);
    finalize(grid, cfg.effective_background());

    FilterConfig step_filter = cfg.filter;
    step_filter.alpha = anneal_alpha(state.step, cfg.steps, cfg.filter.alpha, cfg.filter);

    const LossResult loss = sdf_supervision_loss(grid, step_filter, cfg.loss_kind, targets,
                                                 static_cast<std::uint64_t>(state.step));
    if (!std::isfinite(loss.loss))
        throw std::runtime_error("non-finite loss at step " + std::to_string(state.step));

    const AttributeGradients grads =
        splat_backward(state.cloud, index, cfg.kernel_kind, grid, loss.vertex_grads);

    adam_update(state, cfg, grads);
    restore_constraints(state.cloud);

    state.loss_history.push_back(loss.loss);
    state.alpha_history.push_back(step_filter.alpha);
    state.step += 1;
    state.alpha_current = state.step <= cfg.steps
                              ? anneal_alpha(state.step, cfg.steps, cfg.filter.alpha, cfg.filter)
                              : 0.0;

#ifndef NDEBUG
    for (const auto& pt : state.cloud.points) {
        assert(std::abs(norm_sq(pt.normal) - 1.0) < 2e-6);
        assert(pt.kernel.k >= kKernelKFloor);
        assert(pt.kernel.m >= kKernelMFloor && pt.kernel.m <= kKernelMCeil);
    }
#endif
}

std::vector<SupervisionTarget> draw_supervision(const SdfOracle& oracle,
                                                const ReconstructionConfig& cfg, int step_index) {
    const double shell = 3.0 / (cfg.resolution - 1);
    Rng rng(cfg.filter.seed, mix_seed(0x73757065ull, static_cast<std::uint64_t>(step_index)));
    std::vector<SupervisionTarget> targets;
    targets.reserve(static_cast<std::size_t>(cfg.supervision_samples));
    for (int i = 0; i < cfg.supervision_samples; ++i) {
        Vec3 q;
        if (rng.uniform() < 0.1) {
            q = {rng.uniform(), rng.uniform(), rng.uniform()};
        } else {
            int tries = 0;
            do {
                q = {rng.uniform(), rng.uniform(), rng.uniform()};
            } while (std::abs(oracle(q)) > shell && ++tries < 10000);
        }
        targets.push_back({q, oracle(q)});
    }
    return targets;
}

SplatGrid splat_cloud(const PointCloud& cloud, const ReconstructionConfig& cfg) {
    const BinIndex index = bin_points(cloud, cfg.resolution);
    SplatGrid grid = make_grid(cfg.resolution, cloud.feature_dim);
    splat_forward(cloud, index, cfg.kernel_kind, grid);
    finalize(grid, cfg.effective_background());
    return grid;
}

Mesh extract_mesh(const SplatGrid& grid) {
    Mesh mesh = marching_cubes(grid);
    if (grid.feature_dim > 0) interpolate_vertex_attributes(mesh, grid);
    compute_vertex_normals(mesh);
    return mesh;
}

FitResult fit(const PointCloud& initial, const SdfOracle& oracle,
              const ReconstructionConfig& cfg) {
    cfg.validate();
    TrainState state = make_train_state(initial, cfg);
    for (int t = 0; t < cfg.steps; ++t) {
        const auto targets = draw_supervision(oracle, cfg, t);
        step(state, cfg, targets);
    }
    const SplatGrid grid = splat_cloud(state.cloud, cfg);
    FitResult result;
    result.mesh = extract_mesh(grid);
    result.cloud = std::move(state.cloud);
    result.loss_history = std::move(state.loss_history);
    result.alpha_history = std::move(state.alpha_history);
    return result;
}

}  // namespace imls
