#include "defgoal/ply.hpp"

#include "defgoal/errors.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace defgoal {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw InvalidArgument("ply: " + path + ": " + why);
}

}  // namespace

void write_ply(const std::string& path, const PointCloud& cloud, bool binary) {
    if (!cloud.valid()) throw InvalidArgument("write_ply: invalid cloud for " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");

    out << "ply\n"
        << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
        << "element vertex " << cloud.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "end_header\n";

    if (binary) {
        for (const auto& p : cloud.points) {
            const float xyz[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                                  static_cast<float>(p.z())};
            out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        }
    } else {
        char line[128];
        for (const auto& p : cloud.points) {
            // %.9g round-trips float32 exactly.
            std::snprintf(line, sizeof(line), "%.9g %.9g %.9g\n", static_cast<float>(p.x()),
                          static_cast<float>(p.y()), static_cast<float>(p.z()));
            out << line;
        }
    }
    if (!out) fail(path, "write failed");
}

PointCloud read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");

    std::string line;
    if (!std::getline(in, line) || line != "ply") fail(path, "missing ply magic");

    bool binary = false;
    bool saw_format = false;
    long vertex_count = -1;
    int xyz_props = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                fail(path, "unsupported format " + fmt);
            }
            saw_format = true;
        } else if (tok == "element") {
            std::string name;
            ls >> name >> vertex_count;
            if (name != "vertex") fail(path, "unsupported element " + name);
        } else if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            if (type != "float" && type != "float32")
                fail(path, "unsupported property type " + type);
            if (name == "x" || name == "y" || name == "z") ++xyz_props;
        } else if (tok == "comment" || tok.empty()) {
            // ignore
        } else {
            fail(path, "unexpected header line: " + line);
        }
        if (!in) fail(path, "truncated header");
    }
    if (!saw_format || vertex_count < 0) fail(path, "incomplete header");
    if (xyz_props != 3) fail(path, "expected exactly x y z float properties");
    if (vertex_count == 0) fail(path, "empty vertex element");

    PointCloud cloud;
    cloud.points.reserve(static_cast<size_t>(vertex_count));
    if (binary) {
        for (long i = 0; i < vertex_count; ++i) {
            float xyz[3];
            in.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
            if (!in) fail(path, "truncated vertex data");
            cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
        }
    } else {
        for (long i = 0; i < vertex_count; ++i) {
            float x, y, z;
            if (!(in >> x >> y >> z)) fail(path, "truncated vertex data");
            cloud.points.emplace_back(x, y, z);
        }
    }
    if (!cloud.valid()) fail(path, "non-finite coordinates");
    return cloud;
}

}  // namespace defgoal
