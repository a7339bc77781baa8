#include "imls/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace imls {

namespace {

void check_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("image dimension mismatch");
    if (a.pixels.size() != static_cast<std::size_t>(a.width) * a.height * a.channels ||
        b.pixels.size() != static_cast<std::size_t>(b.width) * b.height * b.channels)
        throw std::invalid_argument("image pixel buffer size mismatch");
}

// Uniform hash grid over the target set. Nearest-neighbor queries scan
// Chebyshev shells outward; a point in shell r is at least (r-1)*cell away,
// so once best_sq <= (ring*cell)^2 after scanning shell `ring`, no farther
// shell can improve on it. Exact, with guaranteed termination.
class PointHash {
public:
    explicit PointHash(std::span<const Vec3> pts) : pts_(pts) {
        Vec3 lo = pts[0], hi = pts[0];
        for (const Vec3& p : pts) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        lo_ = lo;
        const double extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
        const int divisions = std::max(1, static_cast<int>(std::cbrt(static_cast<double>(pts.size()))));
        cell_ = extent > 0.0 ? extent / divisions : 1.0;
        cmax_ = {0, 0, 0};
        for (std::uint32_t i = 0; i < pts.size(); ++i) {
            const auto [ci, cj, cl] = coords_of(pts[i]);
            cmax_ = {std::max(cmax_[0], ci), std::max(cmax_[1], cj), std::max(cmax_[2], cl)};
            cells_[pack(ci, cj, cl)].push_back(i);
        }
    }

    static constexpr std::uint32_t kNoExclude = 0xffffffffu;

    double nearest_distance(const Vec3& q, std::uint32_t exclude = kNoExclude) const {
        const auto [qi, qj, ql] = coords_of(q);
        // farthest populated cell in Chebyshev terms; all cells scanned by then
        const int last_ring = std::max({cheb_reach(qi, cmax_[0]), cheb_reach(qj, cmax_[1]),
                                        cheb_reach(ql, cmax_[2])});
        double best_sq = std::numeric_limits<double>::infinity();
        for (int ring = first_ring(qi, qj, ql);; ++ring) {
            scan_shell(q, qi, qj, ql, ring, exclude, best_sq);
            if (best_sq <= square(ring * cell_)) break;
            if (ring >= last_ring) break;
        }
        return std::sqrt(best_sq);
    }

private:
    static double square(double v) { return v * v; }
    static int cheb_reach(int q, int hi) { return std::max(std::abs(q), std::abs(hi - q)); }

    // shells closer than the populated box contain no cells
    int first_ring(int qi, int qj, int ql) const {
        const auto gap = [](int q, int hi) { return q < 0 ? -q : (q > hi ? q - hi : 0); };
        return std::max({gap(qi, cmax_[0]), gap(qj, cmax_[1]), gap(ql, cmax_[2])});
    }

    void scan_shell(const Vec3& q, int qi, int qj, int ql, int ring, std::uint32_t exclude,
                    double& best_sq) const {
        const int i0 = std::max(qi - ring, 0), i1 = std::min(qi + ring, cmax_[0]);
        const int j0 = std::max(qj - ring, 0), j1 = std::min(qj + ring, cmax_[1]);
        const int l0 = std::max(ql - ring, 0), l1 = std::min(ql + ring, cmax_[2]);
        for (int l = l0; l <= l1; ++l) {
            for (int j = j0; j <= j1; ++j) {
                for (int i = i0; i <= i1; ++i) {
                    if (std::max({std::abs(i - qi), std::abs(j - qj), std::abs(l - ql)}) != ring)
                        continue;
                    const auto it = cells_.find(pack(i, j, l));
                    if (it == cells_.end()) continue;
                    for (const std::uint32_t idx : it->second) {
                        if (idx == exclude) continue;
                        best_sq = std::min(best_sq, norm_sq(pts_[idx] - q));
                    }
                }
            }
        }
    }

    static std::uint64_t pack(int i, int j, int l) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 42) |
               (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j) & 0x1fffff) << 21) |
               (static_cast<std::uint32_t>(l) & 0x1fffff);
    }
    std::tuple<int, int, int> coords_of(const Vec3& p) const {
        return {static_cast<int>(std::floor((p.x - lo_.x) / cell_)),
                static_cast<int>(std::floor((p.y - lo_.y) / cell_)),
                static_cast<int>(std::floor((p.z - lo_.z) / cell_))};
    }

    std::span<const Vec3> pts_;
    Vec3 lo_;
    double cell_ = 1.0;
    std::array<int, 3> cmax_{};
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

double one_sided_mean(std::span<const Vec3> from, const PointHash& to) {
    double acc = 0.0;
    for (const Vec3& p : from) acc += to.nearest_distance(p);
    return acc / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer_distance: empty point set");
    const PointHash hash_a(a);
    const PointHash hash_b(b);
    return 0.5 * (one_sided_mean(a, hash_b) + one_sided_mean(b, hash_a));
}

double mean_nearest_neighbor_spacing(std::span<const Vec3> pts) {
    if (pts.size() < 2)
        throw std::invalid_argument("mean_nearest_neighbor_spacing: need at least 2 points");
    const PointHash hash(pts);
    double acc = 0.0;
    for (std::uint32_t i = 0; i < pts.size(); ++i) acc += hash.nearest_distance(pts[i], i);
    return acc / static_cast<double>(pts.size());
}

double mse(const ImageBuffer& a, const ImageBuffer& b) {
    check_same_shape(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.pixels.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

double l1(const ImageBuffer& a, const ImageBuffer& b) {
    check_same_shape(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += std::abs(a.pixels[i] - b.pixels[i]);
    return acc / static_cast<double>(a.pixels.size());
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    check_same_shape(a, b);
    constexpr int kRadius = 5;  // 11x11 window
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    if (a.width < 2 * kRadius + 1 || a.height < 2 * kRadius + 1)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    double window[2 * kRadius + 1][2 * kRadius + 1];
    double wsum = 0.0;
    for (int dy = -kRadius; dy <= kRadius; ++dy)
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
            const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            window[dy + kRadius][dx + kRadius] = w;
            wsum += w;
        }
    for (auto& row : window)
        for (double& w : row) w /= wsum;

    double channel_acc = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        double map_acc = 0.0;
        std::size_t map_count = 0;
        for (int y = kRadius; y < a.height - kRadius; ++y) {
            for (int x = kRadius; x < a.width - kRadius; ++x) {
                double mu1 = 0.0, mu2 = 0.0, m11 = 0.0, m22 = 0.0, m12 = 0.0;
                for (int dy = -kRadius; dy <= kRadius; ++dy) {
                    for (int dx = -kRadius; dx <= kRadius; ++dx) {
                        const double w = window[dy + kRadius][dx + kRadius];
                        const double v1 = a.at(x + dx, y + dy, c);
                        const double v2 = b.at(x + dx, y + dy, c);
                        mu1 += w * v1;
                        mu2 += w * v2;
                        m11 += w * v1 * v1;
                        m22 += w * v2 * v2;
                        m12 += w * v1 * v2;
                    }
                }
                const double var1 = m11 - mu1 * mu1;
                const double var2 = m22 - mu2 * mu2;
                const double cov = m12 - mu1 * mu2;
                map_acc += ((2.0 * mu1 * mu2 + kC1) * (2.0 * cov + kC2)) /
                           ((mu1 * mu1 + mu2 * mu2 + kC1) * (var1 + var2 + kC2));
                map_count++;
            }
        }
        channel_acc += map_acc / static_cast<double>(map_count);
    }
    return channel_acc / a.channels;
}

double composite_loss(const ImageBuffer& img, const ImageBuffer& ref, double lambda_mix) {
    if (lambda_mix < 0.0 || lambda_mix > 1.0)
        throw std::invalid_argument("composite_loss: lambda must be in [0,1]");
    return (1.0 - lambda_mix) * l1(img, ref) + lambda_mix * (1.0 - ssim(img, ref)) / 2.0;
}

}  // namespace imls
