#include "defgoal/errors.hpp"
#include "defgoal/sim.hpp"

#include <json.hpp>

#include <fstream>

namespace defgoal {

namespace {

using nlohmann::json;

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const json& j) {
    return Eigen::Vector3d(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

json pose_to_json(const RigidTransform& t) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(t.rotation(r, c));
    return json{{"rotation", rot}, {"translation", vec3_to_json(t.translation)}};
}

RigidTransform pose_from_json(const json& j) {
    RigidTransform t;
    const json& rot = j.at("rotation");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot.at(static_cast<size_t>(r * 3 + c)).get<double>();
    t.translation = vec3_from_json(j.at("translation"));
    return t;
}

}  // namespace

std::string scene_to_json(const Scene& s) {
    json j;
    j["task"] = task_name(s.task);
    j["rng_seed"] = s.rng_seed;
    j["gravity"] = s.gravity;
    j["dt"] = s.dt;

    json obs;
    switch (s.obstacle.kind) {
        case Obstacle::Kind::None: obs["kind"] = "none"; break;
        case Obstacle::Kind::Ellipsoid: obs["kind"] = "ellipsoid"; break;
        case Obstacle::Kind::Cylinder: obs["kind"] = "cylinder"; break;
    }
    obs["half_axes"] = vec3_to_json(s.obstacle.half_axes);
    obs["radius"] = s.obstacle.radius;
    obs["height"] = s.obstacle.height;
    obs["pose"] = pose_to_json(s.obstacle.pose);
    j["obstacle"] = obs;

    const TissueSpec& t = s.tissue;
    j["tissue"] = json{{"nx", t.nx},
                       {"ny", t.ny},
                       {"nz", t.nz},
                       {"cell", t.cell},
                       {"vertex_mass", t.vertex_mass},
                       {"k_structural", t.k_structural},
                       {"k_shear", t.k_shear},
                       {"k_bend", t.k_bend},
                       {"damping", t.damping},
                       {"pose", pose_to_json(t.pose)}};

    j["camera"] = json{{"position", vec3_to_json(s.camera.position)},
                       {"direction", vec3_to_json(s.camera.direction)},
                       {"grid_w", s.camera.grid_w},
                       {"grid_h", s.camera.grid_h},
                       {"fov_deg", s.camera.fov_deg}};

    if (s.target_plane) {
        j["target_plane"] = json{{"origin", vec3_to_json(s.target_plane->origin)},
                                 {"normal", vec3_to_json(s.target_plane->normal)}};
    }
    return j.dump(2);
}

Scene scene_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("scene_from_json: ") + e.what());
    }
    try {
        Scene s;
        s.task = task_from_name(j.at("task").get<std::string>());
        s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        s.gravity = j.at("gravity").get<double>();
        s.dt = j.at("dt").get<double>();

        const json& obs = j.at("obstacle");
        const std::string kind = obs.at("kind").get<std::string>();
        s.obstacle.kind = kind == "none"        ? Obstacle::Kind::None
                          : kind == "ellipsoid" ? Obstacle::Kind::Ellipsoid
                                                : Obstacle::Kind::Cylinder;
        s.obstacle.half_axes = vec3_from_json(obs.at("half_axes"));
        s.obstacle.radius = obs.at("radius").get<double>();
        s.obstacle.height = obs.at("height").get<double>();
        s.obstacle.pose = pose_from_json(obs.at("pose"));

        const json& t = j.at("tissue");
        s.tissue.nx = t.at("nx").get<int>();
        s.tissue.ny = t.at("ny").get<int>();
        s.tissue.nz = t.at("nz").get<int>();
        s.tissue.cell = t.at("cell").get<double>();
        s.tissue.vertex_mass = t.at("vertex_mass").get<double>();
        s.tissue.k_structural = t.at("k_structural").get<double>();
        s.tissue.k_shear = t.at("k_shear").get<double>();
        s.tissue.k_bend = t.at("k_bend").get<double>();
        s.tissue.damping = t.at("damping").get<double>();
        s.tissue.pose = pose_from_json(t.at("pose"));

        const json& cam = j.at("camera");
        s.camera.position = vec3_from_json(cam.at("position"));
        s.camera.direction = vec3_from_json(cam.at("direction"));
        s.camera.grid_w = cam.at("grid_w").get<int>();
        s.camera.grid_h = cam.at("grid_h").get<int>();
        s.camera.fov_deg = cam.at("fov_deg").get<double>();

        if (j.contains("target_plane")) {
            s.target_plane = Plane(vec3_from_json(j.at("target_plane").at("origin")),
                                   vec3_from_json(j.at("target_plane").at("normal")));
        }
        return s;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("scene_from_json: missing or bad field: ") + e.what());
    }
}

void save_scene(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("save_scene: cannot open " + path);
    out << scene_to_json(scene) << "\n";
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("load_scene: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scene_from_json(text);
}

}  // namespace defgoal
