#include "defgoal/transport.hpp"

#include "defgoal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace defgoal {

Eigen::MatrixXd distance_matrix(const PointCloud& a, const PointCloud& b) {
    Eigen::MatrixXd c(a.size(), b.size());
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j) c(i, j) = (a[i] - b[j]).norm();
    return c;
}

double mean_pairwise_distance(const PointCloud& a, const PointCloud& b) {
    return distance_matrix(a, b).mean();
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double& total) {
    // Kuhn-Munkres with potentials, O(n^3). 1-based internal arrays.
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw SizeMismatch("solve_assignment: cost matrix must be square");

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur =
                    cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<size_t>(j)] != 0) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)]) - 1] = j - 1;

    total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, row_to_col[static_cast<size_t>(i)]);
    return row_to_col;
}

TransportResult emd_exact(const PointCloud& a, const PointCloud& b) {
    if (a.size() != b.size())
        throw SizeMismatch("emd_exact: clouds must have equal size, got " +
                           std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    if (a.empty()) throw InvalidArgument("emd_exact: empty clouds");
    if (a.size() > 256)
        throw InvalidArgument("emd_exact: restricted to n <= 256, got n=" +
                              std::to_string(a.size()));

    const int n = a.size();
    const Eigen::MatrixXd cost = distance_matrix(a, b);
    double total = 0.0;
    const std::vector<int> match = solve_assignment(cost, total);

    TransportResult out;
    out.cost = total / static_cast<double>(n);
    out.plan.n_a = n;
    out.plan.n_b = n;
    out.plan.kind = PlanKind::ExactMatching;
    out.plan.weights = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) out.plan.weights(i, match[static_cast<size_t>(i)]) = 1.0;
    return out;
}

namespace {

struct SinkhornState {
    Eigen::MatrixXd kernel;  // exp(-C / eps)
    Eigen::VectorXd u, v;
    int n_a = 0, n_b = 0;

    Eigen::MatrixXd plan() const {
        return u.asDiagonal() * kernel * v.asDiagonal();
    }
};

SinkhornState sinkhorn_init(const Eigen::MatrixXd& cost, double epsilon) {
    SinkhornState s;
    s.n_a = static_cast<int>(cost.rows());
    s.n_b = static_cast<int>(cost.cols());
    s.kernel = (-cost / epsilon).array().exp();
    s.u = Eigen::VectorXd::Constant(s.n_a, 1.0 / static_cast<double>(s.n_a));
    s.v = Eigen::VectorXd::Ones(s.n_b);
    return s;
}

void sinkhorn_round(SinkhornState& s) {
    // Tiny floor keeps the scalings finite when the kernel underflows.
    const double floor = 1e-300;
    const double a_mass = 1.0 / static_cast<double>(s.n_a);
    const double b_mass = 1.0 / static_cast<double>(s.n_b);
    Eigen::VectorXd kv = s.kernel * s.v;
    for (int i = 0; i < s.n_a; ++i) s.u(i) = a_mass / std::max(kv(i), floor);
    Eigen::VectorXd ktu = s.kernel.transpose() * s.u;
    for (int j = 0; j < s.n_b; ++j) s.v(j) = b_mass / std::max(ktu(j), floor);
}

double marginal_violation(const Eigen::MatrixXd& plan, int n_a, int n_b) {
    const double ra = 1.0 / static_cast<double>(n_a);
    const double rb = 1.0 / static_cast<double>(n_b);
    const double row = (plan.rowwise().sum().array() - ra).abs().maxCoeff();
    const double col = (plan.colwise().sum().array() - rb).abs().maxCoeff();
    return std::max(row, col);
}

}  // namespace

TransportResult sinkhorn_ot(const PointCloud& a, const PointCloud& b, double epsilon,
                            int max_iters) {
    if (epsilon <= 0.0) throw InvalidArgument("sinkhorn_ot: epsilon must be positive");
    if (a.empty() || b.empty()) throw InvalidArgument("sinkhorn_ot: empty cloud");
    if (max_iters < 1) throw InvalidArgument("sinkhorn_ot: max_iters must be >= 1");

    const Eigen::MatrixXd cost = distance_matrix(a, b);
    SinkhornState s = sinkhorn_init(cost, epsilon);

    Eigen::MatrixXd plan;
    for (int it = 0; it < max_iters; ++it) {
        sinkhorn_round(s);
        plan = s.plan();
        if (marginal_violation(plan, s.n_a, s.n_b) < 1e-6) break;
    }

    TransportResult out;
    out.cost = (plan.array() * cost.array()).sum();
    out.plan.n_a = a.size();
    out.plan.n_b = b.size();
    out.plan.kind = PlanKind::Entropic;
    out.plan.weights = std::move(plan);
    return out;
}

std::vector<double> sinkhorn_cost_trace(const PointCloud& a, const PointCloud& b, double epsilon,
                                        int max_iters) {
    if (epsilon <= 0.0) throw InvalidArgument("sinkhorn_ot: epsilon must be positive");
    const Eigen::MatrixXd cost = distance_matrix(a, b);
    SinkhornState s = sinkhorn_init(cost, epsilon);
    std::vector<double> trace;
    trace.reserve(static_cast<size_t>(max_iters));
    for (int it = 0; it < max_iters; ++it) {
        sinkhorn_round(s);
        trace.push_back((s.plan().array() * cost.array()).sum());
    }
    return trace;
}

PointCloud barycentric_map(const TransportPlan& plan, const PointCloud& target) {
    if (plan.n_b != target.size())
        throw SizeMismatch("barycentric_map: plan/target size mismatch");
    PointCloud out;
    out.points.resize(static_cast<size_t>(plan.n_a), Eigen::Vector3d::Zero());
    for (int i = 0; i < plan.n_a; ++i) {
        double mass = 0.0;
        Eigen::Vector3d acc = Eigen::Vector3d::Zero();
        for (int j = 0; j < plan.n_b; ++j) {
            const double w = plan.weights(i, j);
            mass += w;
            acc += w * target[j];
        }
        out.points[static_cast<size_t>(i)] = mass > 0.0 ? Eigen::Vector3d(acc / mass) : acc;
    }
    return out;
}

}  // namespace defgoal
