#include "defgoal/sim.hpp"

#include "defgoal/errors.hpp"
#include "defgoal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace defgoal {

std::string task_name(Task t) { return t == Task::Retraction ? "retraction" : "wrapping"; }

Task task_from_name(const std::string& name) {
    if (name == "retraction") return Task::Retraction;
    if (name == "wrapping") return Task::Wrapping;
    throw InvalidArgument("unknown task: " + name);
}

Cylinder Obstacle::as_cylinder() const {
    if (kind != Kind::Cylinder) throw InvalidArgument("obstacle is not a cylinder");
    Cylinder c;
    const Eigen::Vector3d axis = pose.rotation.col(0);
    c.base = pose.translation - 0.5 * height * axis;
    c.axis = axis;
    c.radius = radius;
    c.height = height;
    return c;
}

double DeformableState::max_speed() const {
    double worst = 0.0;
    for (const auto& v : velocities) worst = std::max(worst, v.norm());
    return worst;
}

std::vector<Spring> build_springs(const TissueSpec& spec) {
    std::vector<Spring> springs;
    const double c = spec.cell;
    const auto add = [&](int a, int b, double rest, double k) {
        springs.push_back({a, b, rest, k});
    };
    for (int k = 0; k < spec.nz; ++k) {
        for (int j = 0; j < spec.ny; ++j) {
            for (int i = 0; i < spec.nx; ++i) {
                const int v = spec.vertex_index(i, j, k);
                // structural
                if (i + 1 < spec.nx) add(v, spec.vertex_index(i + 1, j, k), c, spec.k_structural);
                if (j + 1 < spec.ny) add(v, spec.vertex_index(i, j + 1, k), c, spec.k_structural);
                if (k + 1 < spec.nz) add(v, spec.vertex_index(i, j, k + 1), c, spec.k_structural);
                // shear (in-plane diagonals, all three plane orientations)
                if (i + 1 < spec.nx && j + 1 < spec.ny) {
                    add(v, spec.vertex_index(i + 1, j + 1, k), c * M_SQRT2, spec.k_shear);
                    add(spec.vertex_index(i + 1, j, k), spec.vertex_index(i, j + 1, k),
                        c * M_SQRT2, spec.k_shear);
                }
                if (i + 1 < spec.nx && k + 1 < spec.nz) {
                    add(v, spec.vertex_index(i + 1, j, k + 1), c * M_SQRT2, spec.k_shear);
                    add(spec.vertex_index(i + 1, j, k), spec.vertex_index(i, j, k + 1),
                        c * M_SQRT2, spec.k_shear);
                }
                if (j + 1 < spec.ny && k + 1 < spec.nz) {
                    add(v, spec.vertex_index(i, j + 1, k + 1), c * M_SQRT2, spec.k_shear);
                    add(spec.vertex_index(i, j + 1, k), spec.vertex_index(i, j, k + 1),
                        c * M_SQRT2, spec.k_shear);
                }
                // bend
                if (i + 2 < spec.nx) add(v, spec.vertex_index(i + 2, j, k), 2 * c, spec.k_bend);
                if (j + 2 < spec.ny) add(v, spec.vertex_index(i, j + 2, k), 2 * c, spec.k_bend);
                if (k + 2 < spec.nz) add(v, spec.vertex_index(i, j, k + 2), 2 * c, spec.k_bend);
            }
        }
    }
    return springs;
}

Eigen::Vector3d spring_force_on_a(const Spring& s, double damping,
                                  const std::vector<Eigen::Vector3d>& positions,
                                  const std::vector<Eigen::Vector3d>& velocities) {
    const Eigen::Vector3d d = positions[static_cast<size_t>(s.b)] - positions[static_cast<size_t>(s.a)];
    const double len = d.norm();
    if (len <= 1e-12) return Eigen::Vector3d::Zero();
    const Eigen::Vector3d dir = d / len;
    const double rel_v =
        (velocities[static_cast<size_t>(s.b)] - velocities[static_cast<size_t>(s.a)]).dot(dir);
    return (s.stiffness * (len - s.rest) + damping * rel_v) * dir;
}

namespace {

// Project a point out of the obstacle along the local outward normal; returns
// the world normal when a correction happened.
bool resolve_obstacle_contact(const Obstacle& obs, Eigen::Vector3d& p_world,
                              Eigen::Vector3d& normal_world) {
    if (obs.kind == Obstacle::Kind::None) return false;
    const RigidTransform inv = obs.pose.inverse();
    Eigen::Vector3d q = inv.apply(p_world);

    if (obs.kind == Obstacle::Kind::Ellipsoid) {
        const Eigen::Vector3d& h = obs.half_axes;
        const Eigen::Vector3d scaled(q.x() / h.x(), q.y() / h.y(), q.z() / h.z());
        const double phi = scaled.squaredNorm() - 1.0;
        if (phi >= 0.0) return false;
        Eigen::Vector3d n(q.x() / (h.x() * h.x()), q.y() / (h.y() * h.y()),
                          q.z() / (h.z() * h.z()));
        if (n.norm() < 1e-12) n = Eigen::Vector3d(0, 0, 1);
        n.normalize();
        // phi(q + t n) = 0 is quadratic in t; phi < 0 guarantees a positive root.
        const double A = (n.x() * n.x()) / (h.x() * h.x()) + (n.y() * n.y()) / (h.y() * h.y()) +
                         (n.z() * n.z()) / (h.z() * h.z());
        const double B = 2.0 * (q.x() * n.x() / (h.x() * h.x()) + q.y() * n.y() / (h.y() * h.y()) +
                                q.z() * n.z() / (h.z() * h.z()));
        const double disc = B * B - 4.0 * A * phi;
        const double t = (-B + std::sqrt(std::max(disc, 0.0))) / (2.0 * A);
        q += t * n;
        p_world = obs.pose.apply(q);
        normal_world = (obs.pose.rotation * n).normalized();
        return true;
    }

    // Cylinder along local x. Only the lateral surface collides; the tissue
    // flows over the end rims.
    if (std::abs(q.x()) > 0.5 * obs.height) return false;
    const double rho2 = q.y() * q.y() + q.z() * q.z();
    if (rho2 >= obs.radius * obs.radius) return false;
    const double rho = std::sqrt(rho2);
    Eigen::Vector3d n_local =
        rho < 1e-12 ? Eigen::Vector3d(0, 0, 1) : Eigen::Vector3d(0, q.y() / rho, q.z() / rho);
    q.y() = n_local.y() * obs.radius;
    q.z() = n_local.z() * obs.radius;
    p_world = obs.pose.apply(q);
    normal_world = (obs.pose.rotation * n_local).normalized();
    return true;
}

}  // namespace

DeformableState step(const DeformableState& state, const Scene& scene,
                     const std::vector<RigidTransform>& grasp_deltas, double dt) {
    if (!(dt > 0.0 && dt <= 5e-3))
        throw InvalidArgument("step: dt must be in (0, 5e-3], got " + std::to_string(dt));
    if (!grasp_deltas.empty() && grasp_deltas.size() != state.grasps.size())
        throw InvalidArgument("step: grasp delta count does not match grasp count");

    const int n = static_cast<int>(state.positions.size());
    DeformableState next = state;

    std::vector<char> grasped(static_cast<size_t>(n), 0);
    for (const auto& g : state.grasps)
        for (int v : g.vertices) grasped[static_cast<size_t>(v)] = 1;

    // Forces: gravity, weak drag, spring + along-spring damping.
    const double drag = 0.1 * scene.tissue.damping;
    std::vector<Eigen::Vector3d> force(static_cast<size_t>(n),
                                       Eigen::Vector3d(0, 0, -scene.gravity * scene.tissue.vertex_mass));
    for (int i = 0; i < n; ++i) force[static_cast<size_t>(i)] -= drag * state.velocities[static_cast<size_t>(i)];

    const std::vector<Spring> springs = build_springs(scene.tissue);
    for (const auto& s : springs) {
        const Eigen::Vector3d f =
            spring_force_on_a(s, scene.tissue.damping, state.positions, state.velocities);
        force[static_cast<size_t>(s.a)] += f;
        force[static_cast<size_t>(s.b)] -= f;
    }

    const double inv_m = 1.0 / scene.tissue.vertex_mass;
    for (int i = 0; i < n; ++i) {
        if (grasped[static_cast<size_t>(i)]) continue;
        next.velocities[static_cast<size_t>(i)] += dt * inv_m * force[static_cast<size_t>(i)];
        next.positions[static_cast<size_t>(i)] += dt * next.velocities[static_cast<size_t>(i)];
    }

    // Grasped vertices ride their frames.
    for (size_t gi = 0; gi < next.grasps.size(); ++gi) {
        Grasp& g = next.grasps[gi];
        if (!grasp_deltas.empty()) g.frame = grasp_deltas[gi].compose(g.frame);
        for (size_t k = 0; k < g.vertices.size(); ++k) {
            const int v = g.vertices[k];
            const Eigen::Vector3d target = g.frame.apply(g.local_offsets[k]);
            next.velocities[static_cast<size_t>(v)] =
                (target - state.positions[static_cast<size_t>(v)]) / dt;
            next.positions[static_cast<size_t>(v)] = target;
        }
    }

    // Contact: ground plane and obstacle, free vertices only.
    for (int i = 0; i < n; ++i) {
        if (grasped[static_cast<size_t>(i)]) continue;
        Eigen::Vector3d& p = next.positions[static_cast<size_t>(i)];
        Eigen::Vector3d& v = next.velocities[static_cast<size_t>(i)];
        if (p.z() < 0.0) {
            p.z() = 0.0;
            if (v.z() < 0.0) v.z() = 0.0;
        }
        Eigen::Vector3d normal;
        if (resolve_obstacle_contact(scene.obstacle, p, normal)) {
            const double vn = v.dot(normal);
            if (vn < 0.0) v -= vn * normal;
        }
    }

    for (int i = 0; i < n; ++i) {
        if (!next.positions[static_cast<size_t>(i)].allFinite() ||
            !next.velocities[static_cast<size_t>(i)].allFinite())
            throw NumericBlowup("step: vertex " + std::to_string(i) +
                                " non-finite at step_count=" + std::to_string(state.step_count));
    }

    next.step_count = state.step_count + 1;
    return next;
}

Scene build_scene(Task task, std::uint64_t seed) {
    Rng rng(seed);
    Scene scene;
    scene.task = task;
    scene.rng_seed = seed;
    scene.gravity = 9.81;
    scene.dt = 2e-3;

    if (task == Task::Retraction) {
        // Ellipsoid stand-in for the organ; local x is the longest axis.
        const double a = rng.uniform(0.04, 0.07);
        const double b = rng.uniform(0.02, 0.035);
        const double c = rng.uniform(0.02, 0.035);
        const double yaw = rng.uniform(0.0, 2.0 * M_PI);

        scene.obstacle.kind = Obstacle::Kind::Ellipsoid;
        scene.obstacle.half_axes = Eigen::Vector3d(a, b, c);
        scene.obstacle.pose.rotation =
            Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        scene.obstacle.pose.translation = Eigen::Vector3d(0, 0, c);

        scene.tissue.nx = rng.uniform_int(10, 16);
        scene.tissue.ny = rng.uniform_int(10, 16);
        scene.tissue.nz = 1;
        scene.tissue.cell = rng.uniform(0.006, 0.010);
        const double jitter = rng.uniform(-0.3, 0.3);
        const double dx = rng.uniform(-0.008, 0.008);
        const double dy = rng.uniform(-0.008, 0.008);
        scene.tissue.pose.rotation =
            Eigen::AngleAxisd(yaw + jitter, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        scene.tissue.pose.translation = Eigen::Vector3d(dx, dy, 2.0 * c + 0.004);

        const Eigen::Vector3d long_axis = scene.obstacle.pose.rotation.col(0);
        const Eigen::Vector3d normal = Eigen::Vector3d::UnitZ().cross(long_axis).normalized();
        scene.target_plane = Plane(scene.obstacle.pose.translation, normal);

        scene.camera.position = Eigen::Vector3d(0.16, 0.12, 0.20);
        scene.camera.direction =
            (Eigen::Vector3d(0, 0, 0.03) - scene.camera.position).normalized();
    } else {
        const double radius = rng.uniform(0.010, 0.014);
        const double height = rng.uniform(0.040, 0.060);
        const double yaw = rng.uniform(0.0, 2.0 * M_PI);
        const double elevation = rng.uniform(0.050, 0.060);

        scene.obstacle.kind = Obstacle::Kind::Cylinder;
        scene.obstacle.radius = radius;
        scene.obstacle.height = height;
        scene.obstacle.pose.rotation =
            Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        scene.obstacle.pose.translation = Eigen::Vector3d(0, 0, elevation);

        scene.tissue.nx = rng.uniform_int(10, 16);
        scene.tissue.ny = rng.uniform_int(10, 16);
        scene.tissue.nz = 1;
        scene.tissue.cell = rng.uniform(0.006, 0.010);
        // Sheet x runs along the tube axis; kept centered across it so the
        // frictionless drape stays balanced while settling.
        const double axial_offset = rng.uniform(-0.005, 0.005);
        scene.tissue.pose.rotation = scene.obstacle.pose.rotation;
        scene.tissue.pose.translation = scene.obstacle.pose.translation +
                                        scene.obstacle.pose.rotation.col(0) * axial_offset +
                                        Eigen::Vector3d(0, 0, radius + 0.004);
        scene.target_plane.reset();

        scene.camera.position = Eigen::Vector3d(0.12, -0.14, 0.20);
        scene.camera.direction =
            (Eigen::Vector3d(0, 0, 0.05) - scene.camera.position).normalized();
    }
    return scene;
}

DeformableState init_state(const Scene& scene) {
    const TissueSpec& t = scene.tissue;
    DeformableState state;
    state.positions.reserve(static_cast<size_t>(t.vertex_count()));
    const double cx = 0.5 * static_cast<double>(t.nx - 1);
    const double cy = 0.5 * static_cast<double>(t.ny - 1);
    for (int k = 0; k < t.nz; ++k)
        for (int j = 0; j < t.ny; ++j)
            for (int i = 0; i < t.nx; ++i)
                state.positions.push_back(t.pose.apply(Eigen::Vector3d(
                    (static_cast<double>(i) - cx) * t.cell, (static_cast<double>(j) - cy) * t.cell,
                    static_cast<double>(k) * t.cell)));
    state.velocities.assign(static_cast<size_t>(t.vertex_count()), Eigen::Vector3d::Zero());

    for (int n = 0; n < 5000; ++n) {
        state = step(state, scene, {}, scene.dt);
        if (state.max_speed() < 1e-3) {
            state.velocities.assign(state.velocities.size(), Eigen::Vector3d::Zero());
            return state;
        }
    }
    throw SettleTimeout("init_state: tissue did not settle within 5000 steps (seed " +
                        std::to_string(scene.rng_seed) + ")");
}

void establish_grasps(DeformableState& state, const std::vector<Eigen::Vector3d>& pick_points,
                      int vertices_per_grasp) {
    if (pick_points.empty() || pick_points.size() > 2)
        throw InvalidArgument("establish_grasps: need 1 or 2 pick points");
    state.grasps.clear();
    std::vector<char> taken(state.positions.size(), 0);
    const PointCloud verts{state.positions};
    for (const auto& pick : pick_points) {
        Grasp g;
        g.frame.translation = pick;
        const int want = std::min(vertices_per_grasp, verts.size());
        for (int idx : knn(verts, pick, want)) {
            if (taken[static_cast<size_t>(idx)]) continue;  // grasp sets stay disjoint
            taken[static_cast<size_t>(idx)] = 1;
            g.vertices.push_back(idx);
            g.local_offsets.push_back(g.frame.inverse().apply(state.positions[static_cast<size_t>(idx)]));
        }
        if (g.vertices.empty()) throw InvalidArgument("establish_grasps: no free vertices near pick");
        state.grasps.push_back(std::move(g));
    }
}

void release_grasps(DeformableState& state) { state.grasps.clear(); }

namespace {

struct CameraBasis {
    Eigen::Vector3d forward, right, up;
};

CameraBasis camera_basis(const CameraView& cam) {
    CameraBasis b;
    b.forward = cam.direction.normalized();
    const Eigen::Vector3d ref = std::abs(b.forward.z()) > 0.99 ? Eigen::Vector3d::UnitY()
                                                               : Eigen::Vector3d::UnitZ();
    b.right = b.forward.cross(ref).normalized();
    b.up = b.right.cross(b.forward);
    return b;
}

// Winner-per-cell z-buffer over an arbitrary candidate list. Returns, for
// each candidate, whether it survives hidden-point removal.
std::vector<char> zbuffer_visible(const std::vector<Eigen::Vector3d>& pts,
                                  const CameraView& cam) {
    const CameraBasis basis = camera_basis(cam);
    const double half = std::tan(0.5 * cam.fov_deg * M_PI / 180.0);
    const int w = cam.grid_w, h = cam.grid_h;

    std::vector<int> winner(static_cast<size_t>(w) * static_cast<size_t>(h), -1);
    std::vector<double> depth(static_cast<size_t>(w) * static_cast<size_t>(h),
                              std::numeric_limits<double>::infinity());

    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
        const Eigen::Vector3d rel = pts[static_cast<size_t>(i)] - cam.position;
        const double z = rel.dot(basis.forward);
        if (z <= 1e-9) continue;
        const double sx = rel.dot(basis.right) / z;
        const double sy = rel.dot(basis.up) / z;
        if (std::abs(sx) >= half || std::abs(sy) >= half) continue;
        const int u = std::min(w - 1, static_cast<int>((sx / half + 1.0) * 0.5 * w));
        const int v = std::min(h - 1, static_cast<int>((sy / half + 1.0) * 0.5 * h));
        const size_t cell = static_cast<size_t>(v) * static_cast<size_t>(w) + static_cast<size_t>(u);
        if (z < depth[cell]) {
            depth[cell] = z;
            winner[cell] = i;
        }
    }

    std::vector<char> visible(pts.size(), 0);
    for (int idx : winner)
        if (idx >= 0) visible[static_cast<size_t>(idx)] = 1;
    return visible;
}

PointCloud resize_to_n(const PointCloud& raw, int n) {
    if (raw.size() >= n) return fps_downsample(raw, n);
    PointCloud out = raw;
    out.points.reserve(static_cast<size_t>(n));
    int i = 0;
    while (out.size() < n) {
        out.points.push_back(raw[i % raw.size()]);
        ++i;
    }
    return out;
}

// Dense surface samples of the sheet: lattice vertices plus bilinear
// interior points of every top-layer quad.
std::vector<Eigen::Vector3d> tissue_surface_points(const TissueSpec& t,
                                                   const std::vector<Eigen::Vector3d>& pos) {
    std::vector<Eigen::Vector3d> out = pos;
    const int k = t.nz - 1;
    for (int j = 0; j + 1 < t.ny; ++j) {
        for (int i = 0; i + 1 < t.nx; ++i) {
            const Eigen::Vector3d& p00 = pos[static_cast<size_t>(t.vertex_index(i, j, k))];
            const Eigen::Vector3d& p10 = pos[static_cast<size_t>(t.vertex_index(i + 1, j, k))];
            const Eigen::Vector3d& p01 = pos[static_cast<size_t>(t.vertex_index(i, j + 1, k))];
            const Eigen::Vector3d& p11 = pos[static_cast<size_t>(t.vertex_index(i + 1, j + 1, k))];
            for (double u : {0.25, 0.75}) {
                for (double v : {0.25, 0.75}) {
                    out.push_back((1 - u) * (1 - v) * p00 + u * (1 - v) * p10 +
                                  (1 - u) * v * p01 + u * v * p11);
                }
            }
        }
    }
    return out;
}

}  // namespace

PointCloud render_partial_view(const PointCloud& points, const CameraView& camera) {
    if (points.empty()) throw InvalidArgument("render_partial_view: empty input");
    const std::vector<char> visible = zbuffer_visible(points.points, camera);
    PointCloud out;
    for (int i = 0; i < points.size(); ++i)
        if (visible[static_cast<size_t>(i)]) out.points.push_back(points[i]);
    if (out.empty()) throw EmptyView("render_partial_view: no point projects into the view");
    return out;
}

PointCloud obstacle_surface_samples(const Obstacle& obs) {
    PointCloud out;
    if (obs.kind == Obstacle::Kind::Ellipsoid) {
        const int n_theta = 48, n_phi = 24;
        for (int j = 0; j < n_phi; ++j) {
            const double phi = -0.5 * M_PI + (static_cast<double>(j) + 0.5) * M_PI / n_phi;
            for (int i = 0; i < n_theta; ++i) {
                const double theta = (static_cast<double>(i) + 0.5) * 2.0 * M_PI / n_theta;
                out.points.push_back(obs.pose.apply(
                    Eigen::Vector3d(obs.half_axes.x() * std::cos(phi) * std::cos(theta),
                                    obs.half_axes.y() * std::cos(phi) * std::sin(theta),
                                    obs.half_axes.z() * std::sin(phi))));
            }
        }
    } else if (obs.kind == Obstacle::Kind::Cylinder) {
        const int n_theta = 48, n_axial = 12;
        for (int j = 0; j < n_axial; ++j) {
            const double x = (-0.5 + (static_cast<double>(j) + 0.5) / n_axial) * obs.height;
            for (int i = 0; i < n_theta; ++i) {
                const double theta = (static_cast<double>(i) + 0.5) * 2.0 * M_PI / n_theta;
                out.points.push_back(obs.pose.apply(Eigen::Vector3d(
                    x, obs.radius * std::cos(theta), obs.radius * std::sin(theta))));
            }
        }
        // end disks
        for (double side : {-0.5, 0.5}) {
            for (double frac : {0.25, 0.5, 0.75, 1.0}) {
                for (int i = 0; i < 24; ++i) {
                    const double theta = (static_cast<double>(i) + 0.5) * 2.0 * M_PI / 24;
                    out.points.push_back(obs.pose.apply(
                        Eigen::Vector3d(side * obs.height, frac * obs.radius * std::cos(theta),
                                        frac * obs.radius * std::sin(theta))));
                }
            }
        }
    }
    return out;
}

Observation observe(const Scene& scene, const DeformableState& state, const CameraView& camera,
                    int n_points) {
    if (n_points < 1) throw InvalidArgument("observe: n_points must be >= 1");

    const std::vector<Eigen::Vector3d> tissue_pts =
        tissue_surface_points(scene.tissue, state.positions);
    const PointCloud obstacle_pts = obstacle_surface_samples(scene.obstacle);

    std::vector<Eigen::Vector3d> all = tissue_pts;
    all.insert(all.end(), obstacle_pts.points.begin(), obstacle_pts.points.end());
    const std::vector<char> visible = zbuffer_visible(all, camera);

    PointCloud raw_object, raw_context;
    for (size_t i = 0; i < tissue_pts.size(); ++i)
        if (visible[i]) raw_object.points.push_back(all[i]);
    for (size_t i = tissue_pts.size(); i < all.size(); ++i)
        if (visible[i]) raw_context.points.push_back(all[i]);

    if (raw_object.empty()) throw EmptyView("observe: object cloud empty");
    if (raw_context.empty()) throw EmptyView("observe: context cloud empty");

    Observation obs;
    obs.raw_object_count = raw_object.size();
    obs.raw_context_count = raw_context.size();
    obs.object = resize_to_n(raw_object, n_points);
    obs.context = resize_to_n(raw_context, n_points);
    return obs;
}

}  // namespace defgoal
