#include "defgoal/metrics.hpp"

#include "defgoal/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace defgoal {

void Cylinder::frame(Eigen::Vector3d& u, Eigen::Vector3d& v) const {
    // Stable pick: cross with the world axis least aligned with `axis`.
    const Eigen::Vector3d ref =
        std::abs(axis.z()) < 0.9 ? Eigen::Vector3d(0, 0, 1) : Eigen::Vector3d(1, 0, 0);
    u = axis.cross(ref).normalized();
    v = axis.cross(u);
}

std::vector<int> fps_indices(const PointCloud& cloud, int k) {
    const int n = cloud.size();
    if (k < 1 || k > n)
        throw InvalidArgument("fps_downsample: k must be in [1, |cloud|], got k=" +
                              std::to_string(k) + " for n=" + std::to_string(n));

    const Eigen::Vector3d c = cloud.centroid();
    int seed = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
        const double d = (cloud[i] - c).squaredNorm();
        if (d > best) {
            best = d;
            seed = i;
        }
    }

    std::vector<int> selected;
    selected.reserve(static_cast<size_t>(k));
    selected.push_back(seed);

    std::vector<double> min_d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
    for (int round = 1; round < k; ++round) {
        const Eigen::Vector3d& last = cloud[selected.back()];
        int pick = -1;
        double pick_d2 = -1.0;
        for (int i = 0; i < n; ++i) {
            const double d2 = (cloud[i] - last).squaredNorm();
            if (d2 < min_d2[static_cast<size_t>(i)]) min_d2[static_cast<size_t>(i)] = d2;
            if (min_d2[static_cast<size_t>(i)] > pick_d2) {
                pick_d2 = min_d2[static_cast<size_t>(i)];
                pick = i;
            }
        }
        selected.push_back(pick);
    }
    return selected;
}

PointCloud fps_downsample(const PointCloud& cloud, int k) {
    PointCloud out;
    for (int i : fps_indices(cloud, k)) out.points.push_back(cloud[i]);
    return out;
}

std::vector<int> knn(const PointCloud& cloud, const Eigen::Vector3d& query, int k) {
    const int n = cloud.size();
    if (k < 1 || k > n)
        throw InvalidArgument("knn: k must be in [1, |cloud|], got k=" + std::to_string(k) +
                              " for n=" + std::to_string(n));

    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> d2(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) d2[static_cast<size_t>(i)] = (cloud[i] - query).squaredNorm();

    const auto cmp = [&](int a, int b) {
        const double da = d2[static_cast<size_t>(a)], db = d2[static_cast<size_t>(b)];
        if (da != db) return da < db;
        return a < b;
    };
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), cmp);
    idx.resize(static_cast<size_t>(k));
    return idx;
}

namespace {

double directed_mean_sq_nn(const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const auto& p : from.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to.points) best = std::min(best, (p - q).squaredNorm());
        sum += best;
    }
    return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw InvalidArgument("chamfer: clouds must be nonempty");
    return directed_mean_sq_nn(a, b) + directed_mean_sq_nn(b, a);
}

double success_percentage(const PointCloud& cloud, const Plane& plane) {
    if (cloud.empty()) throw InvalidArgument("success_percentage: empty cloud");
    int beyond = 0;
    for (const auto& p : cloud.points)
        if (plane.signed_distance(p) > 0.0) ++beyond;
    return 100.0 * static_cast<double>(beyond) / static_cast<double>(cloud.size());
}

double coverage_percentage(const PointCloud& cloud, const Cylinder& cyl, double proximity,
                           int angular_bins, int axial_bins) {
    if (cloud.empty()) throw InvalidArgument("coverage_percentage: empty cloud");
    if (cyl.radius <= 0.0 || cyl.height <= 0.0)
        throw InvalidArgument("coverage_percentage: degenerate cylinder");
    if (proximity <= 0.0) throw InvalidArgument("coverage_percentage: proximity must be > 0");

    Eigen::Vector3d u, v;
    cyl.frame(u, v);
    const double prox2 = proximity * proximity;

    int covered = 0;
    for (int ai = 0; ai < angular_bins; ++ai) {
        const double theta = (static_cast<double>(ai) + 0.5) * 2.0 * M_PI /
                             static_cast<double>(angular_bins);
        const Eigen::Vector3d radial = std::cos(theta) * u + std::sin(theta) * v;
        for (int zi = 0; zi < axial_bins; ++zi) {
            const double h = (static_cast<double>(zi) + 0.5) * cyl.height /
                             static_cast<double>(axial_bins);
            const Eigen::Vector3d center = cyl.base + h * cyl.axis + cyl.radius * radial;
            bool hit = false;
            for (const auto& p : cloud.points) {
                if ((p - center).squaredNorm() <= prox2) {
                    hit = true;
                    break;
                }
            }
            if (hit) ++covered;
        }
    }
    return 100.0 * static_cast<double>(covered) /
           static_cast<double>(angular_bins * axial_bins);
}

RigidTransform kabsch_fit(const PointCloud& src, const PointCloud& dst,
                          const std::vector<double>& weights) {
    const int n = src.size();
    if (n != dst.size())
        throw DegenerateFit("kabsch_fit: size mismatch " + std::to_string(n) + " vs " +
                            std::to_string(dst.size()));
    if (n < 3) throw DegenerateFit("kabsch_fit: need at least 3 points");
    if (static_cast<int>(weights.size()) != n)
        throw DegenerateFit("kabsch_fit: weight count mismatch");

    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw DegenerateFit("kabsch_fit: negative weight");
        wsum += w;
    }
    if (wsum <= 0.0) throw DegenerateFit("kabsch_fit: weights sum to zero");

    Eigen::Vector3d src_c = Eigen::Vector3d::Zero();
    Eigen::Vector3d dst_c = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) {
        src_c += weights[static_cast<size_t>(i)] * src[i];
        dst_c += weights[static_cast<size_t>(i)] * dst[i];
    }
    src_c /= wsum;
    dst_c /= wsum;

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    double spread = 0.0;
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d s = src[i] - src_c;
        const Eigen::Vector3d d = dst[i] - dst_c;
        h += weights[static_cast<size_t>(i)] * s * d.transpose();
        spread = std::max(spread, s.squaredNorm());
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    // Rank-2 covariance still pins the rotation; rank < 2 (collinear) does not.
    if (sv(1) <= 1e-12 * std::max(sv(0), spread * wsum) || sv(0) <= 0.0)
        throw DegenerateFit("kabsch_fit: rank-deficient configuration");

    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;

    RigidTransform out;
    out.rotation = svd.matrixV() * d * svd.matrixU().transpose();
    out.translation = dst_c - out.rotation * src_c;
    return out;
}

}  // namespace defgoal
