#pragma once

#include "defgoal/cloud.hpp"

namespace defgoal {

/// Pairwise Euclidean distance matrix, |a| x |b|.
Eigen::MatrixXd distance_matrix(const PointCloud& a, const PointCloud& b);

/// Mean entry of the distance matrix; the scale used for epsilon defaults.
double mean_pairwise_distance(const PointCloud& a, const PointCloud& b);

struct TransportResult {
    double cost = 0.0;  // mean matching cost (m)
    TransportPlan plan;
};

/// Exact earth mover's distance between equal-size clouds: the minimum over
/// bijections of the mean Euclidean matching cost, solved as a linear
/// assignment problem (O(n^3)). Restricted to n <= 256.
TransportResult emd_exact(const PointCloud& a, const PointCloud& b);

/// Entropic optimal transport with uniform marginals. Iterates Sinkhorn
/// scalings until the worst marginal violation drops below 1e-6 or
/// `max_iters` is reached. Cost is <plan, distance matrix>.
TransportResult sinkhorn_ot(const PointCloud& a, const PointCloud& b, double epsilon,
                            int max_iters);

/// Per-iteration <plan, cost> trace of the same iteration, for diagnostics.
std::vector<double> sinkhorn_cost_trace(const PointCloud& a, const PointCloud& b, double epsilon,
                                        int max_iters);

/// Solve the square linear assignment problem for an arbitrary cost matrix.
/// Returns the column assigned to each row; `total` gets the optimal sum.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost, double& total);

/// Barycentric image of each source point under the plan: row-normalized
/// plan weights applied to the target cloud.
PointCloud barycentric_map(const TransportPlan& plan, const PointCloud& target);

}  // namespace defgoal
