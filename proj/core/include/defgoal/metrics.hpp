#pragma once

#include "defgoal/cloud.hpp"

#include <vector>

namespace defgoal {

/// Lateral surface of a finite cylinder. `base` is the center of the bottom
/// disk, `axis` the unit direction toward the top disk.
struct Cylinder {
    Eigen::Vector3d base{0, 0, 0};
    Eigen::Vector3d axis{0, 0, 1};
    double radius = 0.0;
    double height = 0.0;

    /// Deterministic orthonormal frame (u, v) spanning the plane normal to `axis`.
    void frame(Eigen::Vector3d& u, Eigen::Vector3d& v) const;
};

/// Farthest point sampling. Seed is the point farthest from the cloud
/// centroid; each following pick maximizes its minimum distance to the
/// already-selected set. Ties break toward the lowest index.
PointCloud fps_downsample(const PointCloud& cloud, int k);

/// Indices selected by fps_downsample, in selection order.
std::vector<int> fps_indices(const PointCloud& cloud, int k);

/// Indices of the k nearest points to `query`, ascending distance,
/// ties toward the lowest index.
std::vector<int> knn(const PointCloud& cloud, const Eigen::Vector3d& query, int k);

/// Two-sided Chamfer distance in m^2: each directed sum of squared
/// nearest-neighbor distances is normalized by its own cloud size.
double chamfer(const PointCloud& a, const PointCloud& b);

/// Percentage of points strictly beyond the plane.
double success_percentage(const PointCloud& cloud, const Plane& plane);

/// Percentage of lateral-surface bins (angular x axial grid) whose center
/// lies within `proximity` of some cloud point.
double coverage_percentage(const PointCloud& cloud, const Cylinder& cylinder, double proximity,
                           int angular_bins = 36, int axial_bins = 10);

/// Default proximity for coverage: 0.2 x cylinder radius.
inline double default_coverage_proximity(const Cylinder& c) { return 0.2 * c.radius; }

/// Weighted least-squares rigid fit src -> dst (Kabsch). Rotation is always
/// proper; reflections are corrected. Throws DegenerateFit on size mismatch,
/// fewer than 3 points, or a rank-deficient (collinear) configuration.
RigidTransform kabsch_fit(const PointCloud& src, const PointCloud& dst,
                          const std::vector<double>& weights);

}  // namespace defgoal
