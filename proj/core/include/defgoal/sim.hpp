#pragma once

#include "defgoal/cloud.hpp"
#include "defgoal/metrics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace defgoal {

enum class Task { Retraction, Wrapping };

std::string task_name(Task t);
Task task_from_name(const std::string& name);

/// Rigid obstacle under the tissue. Ellipsoids use half_axes (local x,y,z);
/// cylinders run along local +x, centered on the local origin.
struct Obstacle {
    enum class Kind { None, Ellipsoid, Cylinder };
    Kind kind = Kind::None;
    Eigen::Vector3d half_axes{0, 0, 0};
    double radius = 0.0;
    double height = 0.0;
    RigidTransform pose;

    /// Cylinder obstacle expressed as a metrics::Cylinder (base + axis).
    Cylinder as_cylinder() const;
};

/// Mass-spring lattice parameters. nz = 1 gives a thin sheet; structural,
/// shear and bending springs are generated from the lattice.
struct TissueSpec {
    int nx = 12;
    int ny = 12;
    int nz = 1;
    double cell = 0.008;         // m
    double vertex_mass = 0.002;  // kg
    double k_structural = 60.0;  // N/m
    double k_shear = 30.0;
    double k_bend = 15.0;
    double damping = 0.35;  // N*s/m, applied along springs and as drag
    RigidTransform pose;    // lattice frame -> world

    int vertex_count() const { return nx * ny * nz; }
    int vertex_index(int i, int j, int k) const { return (k * ny + j) * nx + i; }
};

struct CameraView {
    Eigen::Vector3d position{0.15, 0.1, 0.2};
    Eigen::Vector3d direction{-0.6, -0.4, -0.8};  // unit after normalize()
    int grid_w = 128;
    int grid_h = 128;
    double fov_deg = 70.0;
};

struct Scene {
    Task task = Task::Retraction;
    Obstacle obstacle;
    TissueSpec tissue;
    double gravity = 9.81;  // m/s^2, along -z
    CameraView camera;
    std::optional<Plane> target_plane;  // retraction only
    double dt = 2e-3;                   // default step size, s
    std::uint64_t rng_seed = 0;
};

struct Spring {
    int a = 0;
    int b = 0;
    double rest = 0.0;
    double stiffness = 0.0;
};

/// Kinematic attachment: grasped vertices ride the grasp frame rigidly.
struct Grasp {
    std::vector<int> vertices;
    RigidTransform frame;
    std::vector<Eigen::Vector3d> local_offsets;
};

struct DeformableState {
    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::Vector3d> velocities;
    std::vector<Grasp> grasps;  // at most 2
    long step_count = 0;

    PointCloud vertex_cloud() const { return PointCloud{positions}; }
    double max_speed() const;
};

/// All springs of the lattice (structural + shear + bend).
std::vector<Spring> build_springs(const TissueSpec& spec);

/// Hooke + along-spring damping force on endpoint `a`; endpoint b gets the
/// exact negation.
Eigen::Vector3d spring_force_on_a(const Spring& s, double damping,
                                  const std::vector<Eigen::Vector3d>& positions,
                                  const std::vector<Eigen::Vector3d>& velocities);

/// Deterministic scene sampler for a task. Obstacle geometry, poses, tissue
/// dimensions, and (for retraction) the target plane all derive from the seed.
Scene build_scene(Task task, std::uint64_t seed);

/// Drop the tissue above the obstacle and settle it (max vertex speed below
/// 1e-3 m/s). Throws SettleTimeout after 5000 steps.
DeformableState init_state(const Scene& scene);

/// One semi-implicit Euler step. `grasp_deltas` holds one frame delta per
/// grasp (empty = hold all). Throws NumericBlowup if the state goes
/// non-finite, InvalidArgument for dt outside (0, 5e-3].
DeformableState step(const DeformableState& state, const Scene& scene,
                     const std::vector<RigidTransform>& grasp_deltas, double dt);

/// Attach the 9 lattice vertices nearest each pick point as a kinematic
/// grasp (frame centered on the pick point, identity rotation).
void establish_grasps(DeformableState& state, const std::vector<Eigen::Vector3d>& pick_points,
                      int vertices_per_grasp = 9);

void release_grasps(DeformableState& state);

/// Z-buffer hidden-point removal: keeps, per camera grid cell, the candidate
/// nearest the camera. Output is a subset of the input, in input order.
/// Throws EmptyView when nothing projects into the grid.
PointCloud render_partial_view(const PointCloud& points, const CameraView& camera);

struct Observation {
    PointCloud object;   // P_c, exactly n_points
    PointCloud context;  // P_T, exactly n_points
    int raw_object_count = 0;
    int raw_context_count = 0;
};

/// Render tissue vertices and obstacle surface samples through one shared
/// z-buffer; split visible points by ground-truth provenance, then FPS (or
/// duplicate-pad) each cloud to n_points.
Observation observe(const Scene& scene, const DeformableState& state, const CameraView& camera,
                    int n_points);

/// Deterministic surface sample grid of the obstacle (world frame).
PointCloud obstacle_surface_samples(const Obstacle& obstacle);

/// Scene JSON round trip (exact; doubles use shortest round-trip form).
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& json_text);
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

}  // namespace defgoal
