// Command-line front end: reconstruction, extraction, metrics, gradient
// checking, kernel benchmarking, and fixture generation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "imls/config.hpp"
#include "imls/field.hpp"
#include "imls/image_io.hpp"
#include "imls/mesh_io.hpp"
#include "imls/metrics.hpp"
#include "imls/optimize.hpp"

namespace fs = std::filesystem;
using namespace imls;

namespace {

MeshFormat format_from_extension(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".obj") return MeshFormat::obj;
    if (ext == ".ply") return MeshFormat::ply;
    throw std::invalid_argument("mesh output must end in .obj or .ply, got '" + ext + "'");
}

// registers the shared reconstruction/filter flags; values land in a string
// map so the file/flag precedence runs through one code path
struct ConfigFlags {
    std::map<std::string, std::string> values;

    void attach(CLI::App* cmd) {
        const auto bind = [this, cmd](const std::string& flag, const std::string& key,
                                      const std::string& desc) {
            cmd->add_option_function<std::string>(
                   flag, [this, key](const std::string& v) { values[key] = v; }, desc)
                ->expected(1);
        };
        bind("--resolution", "resolution", "grid resolution per axis");
        bind("--steps", "steps", "optimization steps");
        bind("--supervision-samples", "supervision_samples", "supervision samples per step");
        bind("--background-sdf", "background_sdf", "background distance for uncovered vertices");
        bind("--loss", "loss_kind", "loss kind: sdf_l1 | sdf_l2");
        bind("--kernel", "kernel_kind", "kernel kind: compact | exponential");
        bind("--lr-position", "lr_position", "learning rate for positions");
        bind("--lr-normal", "lr_normal", "learning rate for normals");
        bind("--lr-k", "lr_k", "learning rate for kernel extent k");
        bind("--lr-m", "lr_m", "learning rate for kernel sharpness m");
        bind("--lr-feature", "lr_feature", "learning rate for features");
        bind("--alpha0", "alpha0", "initial noise covariance scale");
        bind("--lambda-lap", "lambda_lap", "laplacian filter strength");
        bind("--mc-samples", "mc_samples", "monte-carlo samples per query");
        bind("--anneal-fraction", "anneal_fraction", "fraction of steps with active noise");
        bind("--seed", "seed", "random seed");
        bind("--dim-corrected", "dim_corrected", "dimension-corrected laplacian (true|false)");
    }
};

ReconstructionConfig build_config(const std::string& config_path, const ConfigFlags& flags) {
    ReconstructionConfig cfg;
    if (!config_path.empty()) apply_config(cfg, parse_config_file(config_path));
    apply_config(cfg, flags.values);
    cfg.validate();
    return cfg;
}

int run_reconstruct(const std::string& input, const std::string& output,
                    const std::string& config_path, const ConfigFlags& flags,
                    const std::string& shape, const std::string& loss_csv,
                    const std::string& grid_dump) {
    const ReconstructionConfig cfg = build_config(config_path, flags);
    const PointCloud cloud = read_point_cloud(input);
    const SdfOracle oracle = shape_oracle(parse_shape(shape));

    const FitResult result = fit(cloud, oracle, cfg);
    write_mesh(result.mesh, output, format_from_extension(output));
    if (!loss_csv.empty())
        write_loss_history_csv(result.loss_history, result.alpha_history, loss_csv);
    if (!grid_dump.empty()) write_grid_dump(splat_cloud(result.cloud, cfg), grid_dump);

    std::cerr << "reconstructed " << result.mesh.vertices.size() << " vertices, "
              << result.mesh.triangles.size() << " triangles";
    if (!result.loss_history.empty())
        std::cerr << ", final loss " << result.loss_history.back();
    std::cerr << "\n";
    return 0;
}

int run_extract(const std::string& input, const std::string& output,
                const std::string& config_path, const ConfigFlags& flags,
                const std::string& grid_dump) {
    ReconstructionConfig cfg = build_config(config_path, flags);
    cfg.steps = 0;
    const PointCloud cloud = read_point_cloud(input);
    const SplatGrid grid = splat_cloud(cloud, cfg);
    const Mesh mesh = extract_mesh(grid);
    write_mesh(mesh, output, format_from_extension(output));
    if (!grid_dump.empty()) write_grid_dump(grid, grid_dump);
    std::cerr << "extracted " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
              << " triangles\n";
    return 0;
}

int run_eval(const std::string& mesh_a, const std::string& mesh_b, const std::string& image_a,
             const std::string& image_b, int samples, std::uint64_t seed, double lambda_mix) {
    if (mesh_a.empty() != mesh_b.empty())
        throw std::invalid_argument("eval: --mesh-a and --mesh-b must be given together");
    if (image_a.empty() != image_b.empty())
        throw std::invalid_argument("eval: --image-a and --image-b must be given together");
    if (mesh_a.empty() && image_a.empty())
        throw std::invalid_argument("eval: nothing to compare; pass meshes and/or images");

    if (!mesh_a.empty()) {
        const Mesh a = read_mesh(mesh_a);
        const Mesh b = read_mesh(mesh_b);
        const auto sa = sample_mesh_surface(a, samples, seed);
        const auto sb = sample_mesh_surface(b, samples, seed + 1);
        std::printf("metric,value\n");
        std::printf("chamfer,%.10g\n", chamfer_distance(sa, sb));
        std::printf("vertices_a,%zu\nvertices_b,%zu\n", a.vertices.size(), b.vertices.size());
    }
    if (!image_a.empty()) {
        const ImageBuffer a = read_png(image_a);
        const ImageBuffer b = read_png(image_b);
        std::printf("metric,value\n");
        std::printf("l1,%.10g\n", l1(a, b));
        std::printf("mse,%.10g\n", mse(a, b));
        std::printf("psnr,%.10g\n", psnr(a, b));
        const double s = ssim(a, b);
        std::printf("ssim,%.10g\n", s);
        std::printf("dssim,%.10g\n", (1.0 - s) / 2.0);
        std::printf("composite,%.10g\n", composite_loss(a, b, lambda_mix));
    }
    return 0;
}

int run_sample(const std::string& kind, int n, const std::string& output, double noise_pos,
               double noise_normal_deg, std::uint64_t seed) {
    const PointCloud cloud = sample_shape(parse_shape(kind), n, noise_pos, noise_normal_deg, seed);
    write_point_cloud(cloud, output);
    std::cerr << "wrote " << cloud.size() << " points\n";
    return 0;
}

int run_kernel_profile(double k, double m, const std::string& output, int samples) {
    if (samples < 2) throw std::invalid_argument("kernel-profile: need at least 2 samples");
    const KernelParams params{k, m};
    const double mk = support_radius_sq(params);
    std::ostringstream out;
    out.precision(12);
    out << "s,compact,exponential\n";
    for (int i = 0; i < samples; ++i) {
        const double s = mk * i / (samples - 1);
        out << s << "," << eval_compact(s, params) << "," << eval_exponential(s, std::sqrt(k))
            << "\n";
    }
    for (int j = 1; j <= 8; ++j) {  // past the support bound the value is hard zero
        const double s = mk * (1.0 + j / 16.0);
        out << s << "," << eval_compact(s, params) << "," << eval_exponential(s, std::sqrt(k))
            << "\n";
    }
    atomic_write(output, out.str());
    return 0;
}

int run_bench(const std::string& kernel, const std::string& shape, int resolution, int steps,
              int points, std::uint64_t seed, const std::string& output) {
    if (kernel != "compact" && kernel != "exponential")
        throw std::invalid_argument("bench: --kernel must be compact or exponential");
    ReconstructionConfig cfg;
    cfg.resolution = resolution;
    cfg.steps = steps;
    cfg.filter.seed = seed;
    cfg.kernel_kind = kernel == "exponential" ? KernelKind::exponential : KernelKind::compact;

    const ShapeKind shape_kind = parse_shape(shape);
    const PointCloud cloud = sample_shape(shape_kind, points, 0.003, 3.0, seed);

    const auto t0 = std::chrono::steady_clock::now();
    const FitResult result = fit(cloud, shape_oracle(shape_kind), cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto mesh_samples = sample_mesh_surface(result.mesh, 100000, seed + 1);
    const PointCloud reference = sample_shape(shape_kind, 100000, 0.0, 0.0, seed + 2);
    std::vector<Vec3> ref_pts;
    ref_pts.reserve(reference.size());
    for (const auto& pt : reference.points) ref_pts.push_back(pt.position);
    const double chamfer = chamfer_distance(mesh_samples, ref_pts);

    std::ostringstream out;
    out.precision(10);
    out << "kernel,shape,resolution,steps,points,chamfer,seconds\n";
    out << kernel << "," << shape << "," << resolution << "," << steps << "," << points << ","
        << chamfer << "," << seconds << "\n";
    if (output.empty())
        std::cout << out.str();
    else
        atomic_write(output, out.str());
    std::cerr << "bench " << kernel << "/" << shape << ": chamfer " << chamfer << ", " << seconds
              << " s\n";
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck: self-contained finite-difference audits of every analytic
// derivative path
// ---------------------------------------------------------------------------

struct CheckStats {
    double worst = 0.0;
    int failures = 0;
    int samples = 0;

    void add(double analytic, double fd, double tol, double floor) {
        const double rel =
            std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), floor});
        worst = std::max(worst, rel);
        if (rel >= tol) ++failures;
        ++samples;
    }
};

double fd1(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

CheckStats gradcheck_kernel(std::uint64_t seed) {
    Rng rng(seed);
    CheckStats stats;
    for (int trial = 0; trial < 1000; ++trial) {
        const double k = rng.uniform(0.01, 1.0);
        const double m = rng.uniform(1.0, 8.0);
        const KernelParams p{k, m};
        const double s = rng.uniform(0.0, 0.95 * m * k);
        stats.add(grad_s(s, p), fd1([&](double x) { return eval_compact(x, p); }, s), 1e-4, 1e-4);
        stats.add(grad_k(s, p),
                  fd1([&](double x) { return eval_compact(s, KernelParams{x, m}); }, k), 1e-4,
                  1e-4);
        stats.add(grad_m(s, p),
                  fd1([&](double x) { return eval_compact(s, KernelParams{k, x}); }, m), 1e-4,
                  1e-4);
    }
    return stats;
}

PointCloud gradcheck_cloud(Rng& rng, std::size_t n, double k_lo, double k_hi) {
    PointCloud cloud;
    cloud.feature_dim = 0;
    for (std::size_t i = 0; i < n; ++i) {
        OrientedPoint pt;
        pt.position = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
        pt.normal = rng.unit_vector();
        pt.kernel.k = rng.uniform(k_lo, k_hi);
        pt.kernel.m = rng.uniform(1.2, 4.0);
        cloud.points.push_back(std::move(pt));
    }
    return cloud;
}

CheckStats gradcheck_field(std::uint64_t seed) {
    Rng rng(seed + 1);
    CheckStats stats;
    int tested = 0;
    while (tested < 20) {
        PointCloud cloud = gradcheck_cloud(rng, 5, 0.2, 0.6);
        const Vec3 q{rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
        if (!eval_sdf(q, cloud).has_value()) continue;
        ++tested;
        const auto [value, grads] = eval_sdf_with_grads(q, cloud, 1.0);
        (void)value;
        const auto field_at = [&](const PointCloud& c) { return eval_sdf(q, c).value(); };
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            for (int c = 0; c < 3; ++c) {
                stats.add(grads.d_position[i][c],
                          fd1(
                              [&](double x) {
                                  PointCloud tmp = cloud;
                                  Vec3 p = tmp.points[i].position;
                                  p.set(c, x);
                                  tmp.points[i].position = p;
                                  return field_at(tmp);
                              },
                              cloud.points[i].position[c]),
                          1e-4, 1e-4);
                stats.add(grads.d_normal[i][c],
                          fd1(
                              [&](double x) {
                                  PointCloud tmp = cloud;
                                  Vec3 nn = tmp.points[i].normal;
                                  nn.set(c, x);
                                  tmp.points[i].normal = nn;
                                  return field_at(tmp);
                              },
                              cloud.points[i].normal[c]),
                          1e-4, 1e-4);
            }
            stats.add(grads.d_k[i],
                      fd1(
                          [&](double x) {
                              PointCloud tmp = cloud;
                              tmp.points[i].kernel.k = x;
                              return field_at(tmp);
                          },
                          cloud.points[i].kernel.k),
                      1e-4, 1e-4);
            stats.add(grads.d_m[i],
                      fd1(
                          [&](double x) {
                              PointCloud tmp = cloud;
                              tmp.points[i].kernel.m = x;
                              return field_at(tmp);
                          },
                          cloud.points[i].kernel.m),
                      1e-4, 1e-4);
        }
    }
    return stats;
}

CheckStats gradcheck_pipeline(std::uint64_t seed) {
    Rng rng(seed + 2);
    CheckStats stats;
    const int res = 16;
    PointCloud cloud = gradcheck_cloud(rng, 10, 0.05, 0.15);

    ReconstructionConfig cfg;
    cfg.resolution = res;
    cfg.filter.alpha = 0.0;

    const BinIndex index = bin_points(cloud, res);
    SplatGrid grid = make_grid(res, 0);
    splat_forward(cloud, index, KernelKind::compact, grid);
    finalize(grid, cfg.effective_background());

    std::vector<SupervisionTarget> targets;
    for (int i = 0; i < 10; ++i) {
        Vec3 q;
        do {
            q = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)};
        } while (!cell_touches_coverage(grid, q));
        targets.push_back({q, rng.uniform(-0.2, 0.2)});
    }

    const LossResult res_loss =
        sdf_supervision_loss(grid, cfg.filter, LossKind::sdf_l1, targets, 0);
    const AttributeGradients grads =
        splat_backward(cloud, index, KernelKind::compact, grid, res_loss.vertex_grads);

    const auto pipeline = [&](const PointCloud& c) {
        const BinIndex idx = bin_points(c, res);
        SplatGrid g = make_grid(res, 0);
        splat_forward(c, idx, KernelKind::compact, g);
        finalize(g, cfg.effective_background());
        return sdf_supervision_loss(g, cfg.filter, LossKind::sdf_l1, targets, 0).loss;
    };

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            stats.add(grads.d_position[i][c],
                      fd1(
                          [&](double x) {
                              PointCloud tmp = cloud;
                              Vec3 p = tmp.points[i].position;
                              p.set(c, x);
                              tmp.points[i].position = p;
                              return pipeline(tmp);
                          },
                          cloud.points[i].position[c]),
                      1e-3, 1e-3);
            stats.add(grads.d_normal[i][c],
                      fd1(
                          [&](double x) {
                              PointCloud tmp = cloud;
                              Vec3 nn = tmp.points[i].normal;
                              nn.set(c, x);
                              tmp.points[i].normal = nn;
                              return pipeline(tmp);
                          },
                          cloud.points[i].normal[c]),
                      1e-3, 1e-3);
        }
        stats.add(grads.d_k[i],
                  fd1(
                      [&](double x) {
                          PointCloud tmp = cloud;
                          tmp.points[i].kernel.k = x;
                          return pipeline(tmp);
                      },
                      cloud.points[i].kernel.k),
                  1e-3, 1e-3);
        stats.add(grads.d_m[i],
                  fd1(
                      [&](double x) {
                          PointCloud tmp = cloud;
                          tmp.points[i].kernel.m = x;
                          return pipeline(tmp);
                      },
                      cloud.points[i].kernel.m),
                  1e-3, 1e-3);
    }
    return stats;
}

int run_gradcheck(std::uint64_t seed) {
    int exit_code = 0;
    const auto report = [&exit_code](const char* name, const CheckStats& stats) {
        std::printf("%-18s %6d samples, %3d failures, worst rel err %.3e  [%s]\n", name,
                    stats.samples, stats.failures, stats.worst,
                    stats.failures == 0 ? "PASS" : "FAIL");
        if (stats.failures != 0) exit_code = 1;
    };
    report("kernel-gradients", gradcheck_kernel(seed));
    report("field-gradients", gradcheck_field(seed));
    report("pipeline-gradients", gradcheck_pipeline(seed));
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compact-kernel IMLS surface reconstruction"};
    app.require_subcommand(1);

    auto* reconstruct = app.add_subcommand("reconstruct", "fit a cloud and extract the mesh");
    std::string rec_input, rec_output, rec_config, rec_shape = "sphere", rec_csv, rec_grid;
    ConfigFlags rec_flags;
    reconstruct->add_option("--input", rec_input, "input point cloud (.ply/.xyz)")->required();
    reconstruct->add_option("--out", rec_output, "output mesh (.obj/.ply)")->required();
    reconstruct->add_option("--config", rec_config, "key=value config file");
    reconstruct->add_option("--shape", rec_shape,
                            "analytic shape supervising the fit (sphere|torus|box|plane)");
    reconstruct->add_option("--loss-csv", rec_csv, "write per-step loss history CSV");
    reconstruct->add_option("--dump-grid", rec_grid, "write the final grid debug dump");
    rec_flags.attach(reconstruct);

    auto* extract = app.add_subcommand("extract", "splat a cloud and extract without fitting");
    std::string ext_input, ext_output, ext_config, ext_grid;
    ConfigFlags ext_flags;
    extract->add_option("--input", ext_input, "input point cloud (.ply/.xyz)")->required();
    extract->add_option("--out", ext_output, "output mesh (.obj/.ply)")->required();
    extract->add_option("--config", ext_config, "key=value config file");
    extract->add_option("--dump-grid", ext_grid, "write the grid debug dump");
    ext_flags.attach(extract);

    auto* eval = app.add_subcommand("eval", "compare meshes (chamfer) and/or images");
    std::string eval_mesh_a, eval_mesh_b, eval_img_a, eval_img_b;
    int eval_samples = 100000;
    std::uint64_t eval_seed = 0;
    double eval_lambda = 0.2;
    eval->add_option("--mesh-a", eval_mesh_a, "first mesh");
    eval->add_option("--mesh-b", eval_mesh_b, "second mesh");
    eval->add_option("--image-a", eval_img_a, "first image (png)");
    eval->add_option("--image-b", eval_img_b, "second image (png)");
    eval->add_option("--samples", eval_samples, "surface samples per mesh");
    eval->add_option("--seed", eval_seed, "sampling seed");
    eval->add_option("--lambda", eval_lambda, "composite loss mix weight");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference audit of all gradients");
    std::uint64_t gc_seed = 0;
    gradcheck->add_option("--seed", gc_seed, "random seed");

    auto* bench = app.add_subcommand("bench", "reconstruct a shape and report chamfer + time");
    std::string bench_kernel = "compact", bench_shape = "torus", bench_out;
    int bench_res = 48, bench_steps = 200, bench_points = 1500;
    std::uint64_t bench_seed = 7;
    bench->add_option("--kernel", bench_kernel, "compact | exponential");
    bench->add_option("--shape", bench_shape, "sphere|torus|box|plane");
    bench->add_option("--resolution", bench_res, "grid resolution");
    bench->add_option("--steps", bench_steps, "optimization steps");
    bench->add_option("--points", bench_points, "input cloud size");
    bench->add_option("--seed", bench_seed, "random seed");
    bench->add_option("--out", bench_out, "CSV output path (stdout when omitted)");

    auto* sample = app.add_subcommand("sample", "generate a synthetic shape cloud");
    std::string smp_kind = "sphere", smp_out;
    int smp_n = 1000;
    double smp_noise_pos = 0.0, smp_noise_deg = 0.0;
    std::uint64_t smp_seed = 0;
    sample->add_option("--kind", smp_kind, "sphere|torus|box|plane");
    sample->add_option("--n", smp_n, "number of points");
    sample->add_option("--out", smp_out, "output .ply")->required();
    sample->add_option("--noise-pos", smp_noise_pos, "position jitter stddev");
    sample->add_option("--noise-normal-deg", smp_noise_deg, "normal jitter angle (degrees)");
    sample->add_option("--seed", smp_seed, "random seed");

    auto* profile = app.add_subcommand("kernel-profile", "emit 1-D kernel profile samples");
    double kp_k = 1.0, kp_m = 1.0;
    std::string kp_out;
    int kp_samples = 201;
    profile->add_option("--k", kp_k, "kernel extent parameter");
    profile->add_option("--m", kp_m, "kernel sharpness parameter");
    profile->add_option("--out", kp_out, "output CSV")->required();
    profile->add_option("--samples", kp_samples, "rows over the support interval");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (*reconstruct)
            return run_reconstruct(rec_input, rec_output, rec_config, rec_flags, rec_shape,
                                   rec_csv, rec_grid);
        if (*extract) return run_extract(ext_input, ext_output, ext_config, ext_flags, ext_grid);
        if (*eval)
            return run_eval(eval_mesh_a, eval_mesh_b, eval_img_a, eval_img_b, eval_samples,
                            eval_seed, eval_lambda);
        if (*gradcheck) return run_gradcheck(gc_seed);
        if (*bench)
            return run_bench(bench_kernel, bench_shape, bench_res, bench_steps, bench_points,
                             bench_seed, bench_out);
        if (*sample)
            return run_sample(smp_kind, smp_n, smp_out, smp_noise_pos, smp_noise_deg, smp_seed);
        if (*profile) return run_kernel_profile(kp_k, kp_m, kp_out, kp_samples);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
