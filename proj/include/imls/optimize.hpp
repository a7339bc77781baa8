#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imls/filtering.hpp"
#include "imls/isosurface.hpp"
#include "imls/shapes.hpp"
#include "imls/splat_grid.hpp"

namespace imls {

enum class LossKind { sdf_l1, sdf_l2 };

struct LearningRates {
    double position = 1e-3;
    double normal = 1e-3;
    double k = 1e-4;
    double m = 1e-3;
    double feature = 1e-2;
};

struct ReconstructionConfig {
    int resolution = 64;
    int steps = 300;
    LearningRates lr;
    FilterConfig filter;
    int supervision_samples = 4096;
    LossKind loss_kind = LossKind::sdf_l1;
    KernelKind kernel_kind = KernelKind::compact;
    double background_sdf = 0.0;  // <= 0 means the default of two voxel spacings

    double effective_background() const {
        return background_sdf > 0.0 ? background_sdf : 2.0 / (resolution - 1);
    }
    void validate() const;
};

struct SupervisionTarget {
    Vec3 query;
    double gt_sdf = 0.0;
};

// bias-corrected first/second moment accumulators, one slot per scalar
// parameter: per point 3 position + 3 normal + k + m + D feature
struct AdamState {
    std::vector<double> first;
    std::vector<double> second;
    int t = 0;
};

struct TrainState {
    PointCloud cloud;
    int step = 0;
    double alpha_current = 0.0;
    std::vector<double> loss_history;
    std::vector<double> alpha_history;
    AdamState adam;
};

TrainState make_train_state(PointCloud cloud, const ReconstructionConfig& cfg);

struct LossResult {
    double loss = 0.0;
    std::vector<double> vertex_grads;  // R^3, zero at uncovered vertices
};

// Mean L1/L2 error of the filtered field (trilinear fast path) against the
// targets, plus its gradient with respect to every grid vertex value. The
// filter's alpha is taken as-is (pass the annealed value); noise_stream
// decorrelates per-step sample draws. Throws if no target's cell touches
// covered vertices.
LossResult sdf_supervision_loss(const SplatGrid& grid, const FilterConfig& filter,
                                LossKind loss_kind, std::span<const SupervisionTarget> targets,
                                std::uint64_t noise_stream);

// One full iteration: bin, splat, finalize, loss, backward scatter,
// adaptive-moment update per attribute group, constraint restoration
// (renormalize normals, clamp k/m/positions), anneal advance.
void step(TrainState& state, const ReconstructionConfig& cfg,
          std::span<const SupervisionTarget> targets);

// fresh per-step supervision: 90% in the |sdf| <= 3 voxel shell, 10% uniform
std::vector<SupervisionTarget> draw_supervision(const SdfOracle& oracle,
                                                const ReconstructionConfig& cfg, int step_index);

struct FitResult {
    PointCloud cloud;
    Mesh mesh;
    std::vector<double> loss_history;
    std::vector<double> alpha_history;
};

// Full fitting loop; the final mesh is always extracted from the
// unperturbed field.
FitResult fit(const PointCloud& initial, const SdfOracle& oracle,
              const ReconstructionConfig& cfg);

// splat + finalize at the config's resolution, no optimization
SplatGrid splat_cloud(const PointCloud& cloud, const ReconstructionConfig& cfg);

// marching cubes + feature interpolation + vertex normals
Mesh extract_mesh(const SplatGrid& grid);

}  // namespace imls
