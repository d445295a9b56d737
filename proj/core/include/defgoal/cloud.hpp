#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <string>
#include <vector>

namespace defgoal {

/// Finite set of 3D points in meters. Order matters only for indexing;
/// metric values never depend on it.
struct PointCloud {
    std::vector<Eigen::Vector3d> points;

    PointCloud() = default;
    explicit PointCloud(std::vector<Eigen::Vector3d> pts) : points(std::move(pts)) {}

    int size() const { return static_cast<int>(points.size()); }
    bool empty() const { return points.empty(); }
    Eigen::Vector3d& operator[](int i) { return points[static_cast<size_t>(i)]; }
    const Eigen::Vector3d& operator[](int i) const { return points[static_cast<size_t>(i)]; }

    Eigen::Vector3d centroid() const;
    /// Diagonal length of the axis-aligned bounding box.
    double bbox_diagonal() const;
    /// True if every coordinate is finite and the cloud is nonempty.
    bool valid() const;
    /// Casts every coordinate through 32-bit float, the precision point
    /// clouds have after a PLY round trip.
    PointCloud quantized_f32() const;

    PointCloud translated(const Eigen::Vector3d& v) const;
};

/// Oriented plane: points p with (p - origin) . normal > 0 are "beyond" it.
struct Plane {
    Eigen::Vector3d origin{0, 0, 0};
    Eigen::Vector3d normal{0, 0, 1};

    Plane() = default;
    Plane(const Eigen::Vector3d& o, const Eigen::Vector3d& n);

    double signed_distance(const Eigen::Vector3d& p) const { return (p - origin).dot(normal); }
};

/// Proper rigid transform: x -> rotation * x + translation.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation{0, 0, 0};

    static RigidTransform identity() { return {}; }
    static RigidTransform from_axis_angle(const Eigen::Vector3d& axis_angle,
                                          const Eigen::Vector3d& translation);

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
    PointCloud apply(const PointCloud& cloud) const;
    RigidTransform compose(const RigidTransform& rhs) const;  // this after rhs
    RigidTransform inverse() const;
    /// Rotation as a rotation vector (axis * angle, radians).
    Eigen::Vector3d axis_angle() const;

    bool is_valid(double tol = 1e-9) const;
};

enum class PlanKind { ExactMatching, Entropic };

/// Coupling between two clouds. Exact-matching plans are permutation
/// matrices over equal-size clouds; entropic plans carry uniform marginals
/// (rows sum to 1/n_a, columns to 1/n_b).
struct TransportPlan {
    int n_a = 0;
    int n_b = 0;
    Eigen::MatrixXd weights;  // n_a x n_b, nonnegative
    PlanKind kind = PlanKind::ExactMatching;

    /// For exact plans: column index matched to each row.
    std::vector<int> matching() const;
    double max_marginal_violation() const;
};

}  // namespace defgoal
