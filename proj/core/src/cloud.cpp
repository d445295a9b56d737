#include "defgoal/cloud.hpp"

#include "defgoal/errors.hpp"

#include <cmath>
#include <limits>

namespace defgoal {

Eigen::Vector3d PointCloud::centroid() const {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& p : points) sum += p;
    return sum / static_cast<double>(points.size());
}

double PointCloud::bbox_diagonal() const {
    Eigen::Vector3d lo = points.front();
    Eigen::Vector3d hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

bool PointCloud::valid() const {
    if (points.empty()) return false;
    for (const auto& p : points)
        if (!p.allFinite()) return false;
    return true;
}

PointCloud PointCloud::quantized_f32() const {
    PointCloud out;
    out.points.reserve(points.size());
    for (const auto& p : points)
        out.points.emplace_back(static_cast<double>(static_cast<float>(p.x())),
                                static_cast<double>(static_cast<float>(p.y())),
                                static_cast<double>(static_cast<float>(p.z())));
    return out;
}

PointCloud PointCloud::translated(const Eigen::Vector3d& v) const {
    PointCloud out;
    out.points.reserve(points.size());
    for (const auto& p : points) out.points.emplace_back(p + v);
    return out;
}

Plane::Plane(const Eigen::Vector3d& o, const Eigen::Vector3d& n) : origin(o), normal(n) {
    if (std::abs(normal.norm() - 1.0) > 1e-9)
        throw InvalidArgument("Plane: normal must be unit length");
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis_angle,
                                               const Eigen::Vector3d& translation) {
    RigidTransform t;
    const double angle = axis_angle.norm();
    if (angle > 0.0)
        t.rotation = Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
    t.translation = translation;
    return t;
}

PointCloud RigidTransform::apply(const PointCloud& cloud) const {
    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points) out.points.emplace_back(apply(p));
    return out;
}

RigidTransform RigidTransform::compose(const RigidTransform& rhs) const {
    RigidTransform out;
    out.rotation = rotation * rhs.rotation;
    out.translation = rotation * rhs.translation + translation;
    return out;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
}

Eigen::Vector3d RigidTransform::axis_angle() const {
    Eigen::AngleAxisd aa(rotation);
    return aa.axis() * aa.angle();
}

bool RigidTransform::is_valid(double tol) const {
    if (std::abs(rotation.determinant() - 1.0) > tol) return false;
    return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <=
           tol;
}

std::vector<int> TransportPlan::matching() const {
    std::vector<int> out(static_cast<size_t>(n_a), -1);
    for (int i = 0; i < n_a; ++i) {
        for (int j = 0; j < n_b; ++j) {
            if (weights(i, j) > 0.5) {
                out[static_cast<size_t>(i)] = j;
                break;
            }
        }
    }
    return out;
}

double TransportPlan::max_marginal_violation() const {
    const double row_target = 1.0 / static_cast<double>(n_a);
    const double col_target = 1.0 / static_cast<double>(n_b);
    double worst = 0.0;
    for (int i = 0; i < n_a; ++i)
        worst = std::max(worst, std::abs(weights.row(i).sum() - row_target));
    for (int j = 0; j < n_b; ++j)
        worst = std::max(worst, std::abs(weights.col(j).sum() - col_target));
    return worst;
}

}  // namespace defgoal
