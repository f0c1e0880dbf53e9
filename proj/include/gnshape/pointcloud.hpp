#pragma once

#include <fstream>
#include <optional>
#include <sstream>

#include "gnshape/geometry.hpp"

namespace gnshape {

struct OrientedPointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::string source;
    BoxBounds bounding_box;
    // x_normalized = (x_raw - normalize_offset) * normalize_scale
    double normalize_scale = 1.0;
    Vec3 normalize_offset = Vec3::Zero();
};

namespace detail {

inline ParseError parse_error(const std::string& path, int line, const std::string& what) {
    return ParseError(path + ":" + std::to_string(line) + ": " + what);
}

inline OrientedPointCloud load_ply(const std::string& path, std::istream& in) {
    OrientedPointCloud cloud;
    std::string line;
    int line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line() || line != "ply") throw parse_error(path, line_no, "missing ply magic");

    long vertex_count = -1;
    std::vector<std::string> vertex_props;
    bool in_vertex_element = false;
    bool saw_format = false;
    while (next_line()) {
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") throw parse_error(path, line_no, "only ascii PLY supported");
            saw_format = true;
        } else if (tok == "comment" || tok == "obj_info") {
            continue;
        } else if (tok == "element") {
            std::string name;
            long count = 0;
            ls >> name >> count;
            if (name == "vertex") {
                if (vertex_count >= 0)
                    throw parse_error(path, line_no, "duplicate vertex element");
                vertex_count = count;
                in_vertex_element = true;
            } else {
                if (vertex_count < 0)
                    throw parse_error(path, line_no,
                                      "vertex element must precede other elements");
                in_vertex_element = false;
            }
        } else if (tok == "property") {
            if (!in_vertex_element) continue;
            std::string type, name;
            ls >> type >> name;
            if (type == "list") throw parse_error(path, line_no, "list property on vertex");
            vertex_props.push_back(name);
        } else if (!tok.empty()) {
            throw parse_error(path, line_no, "unrecognized header token '" + tok + "'");
        }
    }
    if (!saw_format) throw parse_error(path, line_no, "missing format line");
    if (vertex_count < 0) throw parse_error(path, line_no, "missing vertex element");

    auto prop_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < vertex_props.size(); ++i)
            if (vertex_props[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
    const int inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
    if (ix < 0 || iy < 0 || iz < 0)
        throw parse_error(path, line_no, "vertex element lacks x/y/z properties");
    if (inx < 0 || iny < 0 || inz < 0)
        throw parse_error(path, line_no, "vertex element lacks nx/ny/nz normals");

    cloud.points.reserve(static_cast<std::size_t>(vertex_count));
    cloud.normals.reserve(static_cast<std::size_t>(vertex_count));
    std::vector<double> row(vertex_props.size());
    for (long v = 0; v < vertex_count; ++v) {
        if (!next_line()) throw parse_error(path, line_no, "unexpected end of vertex data");
        std::istringstream ls(line);
        for (std::size_t i = 0; i < row.size(); ++i)
            if (!(ls >> row[i]))
                throw parse_error(path, line_no, "malformed vertex line");
        cloud.points.emplace_back(row[ix], row[iy], row[iz]);
        cloud.normals.emplace_back(row[inx], row[iny], row[inz]);
    }
    return cloud;
}

inline OrientedPointCloud load_obj(const std::string& path, std::istream& in) {
    OrientedPointCloud cloud;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw parse_error(path, line_no, "malformed v line");
            cloud.points.emplace_back(x, y, z);
        } else if (tok == "vn") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw parse_error(path, line_no, "malformed vn line");
            cloud.normals.emplace_back(x, y, z);
        }
    }
    if (cloud.points.size() != cloud.normals.size())
        throw ParseError(path + ": v count (" + std::to_string(cloud.points.size()) +
                         ") != vn count (" + std::to_string(cloud.normals.size()) + ")");
    return cloud;
}

}  // namespace detail

/// Loads an oriented point cloud from ASCII PLY (x,y,z,nx,ny,nz properties)
/// or OBJ (paired v / vn lines). Normals are renormalized. With normalize set,
/// the cloud is scaled and centered into the unit box [-0.5, 0.5]^3 with a 5%
/// margin per side and the transform is recorded on the cloud.
inline OrientedPointCloud load_point_cloud(const std::string& path, bool normalize = true) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open point cloud file " + path);

    const bool is_obj = path.size() >= 4 && path.substr(path.size() - 4) == ".obj";
    OrientedPointCloud cloud =
        is_obj ? detail::load_obj(path, in) : detail::load_ply(path, in);
    cloud.source = path;
    if (cloud.points.empty()) throw ParseError(path + ": no vertices");

    for (auto& n : cloud.normals) {
        const double len = n.norm();
        if (!(len > 0.0) || !std::isfinite(len))
            throw ParseError(path + ": zero or non-finite normal");
        n /= len;
    }

    if (normalize) {
        Vec3 lo = cloud.points.front(), hi = cloud.points.front();
        for (const auto& p : cloud.points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const Vec3 center = 0.5 * (lo + hi);
        const double max_extent = (hi - lo).maxCoeff();
        const double scale = max_extent > 1e-300 ? 0.9 / max_extent : 1.0;
        for (auto& p : cloud.points) p = (p - center) * scale;
        cloud.normalize_scale = scale;
        cloud.normalize_offset = center;
    }

    Vec3 lo = cloud.points.front(), hi = cloud.points.front();
    for (const auto& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    cloud.bounding_box.lo = lo;
    cloud.bounding_box.hi = hi;
    return cloud;
}

/// Writes an ASCII PLY with x y z, optional nx ny nz, and an optional scalar
/// channel emitted as a per-vertex `quality` property.
inline void write_point_cloud(const std::string& path, const std::vector<Vec3>& points,
                              const std::vector<Vec3>* normals = nullptr,
                              const std::vector<double>* scalars = nullptr) {
    if (normals && normals->size() != points.size())
        throw Error("write_point_cloud: normal count mismatch");
    if (scalars && scalars->size() != points.size())
        throw Error("write_point_cloud: scalar channel length mismatch");
    for (const auto& p : points)
        if (!p.allFinite()) throw Error("write_point_cloud: non-finite point");

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
    if (scalars) out << "property float quality\n";
    out << "end_header\n";
    char buf[256];
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3& p = points[i];
        int len = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g", p[0], p[1], p[2]);
        out.write(buf, len);
        if (normals) {
            const Vec3& n = (*normals)[i];
            len = std::snprintf(buf, sizeof buf, " %.9g %.9g %.9g", n[0], n[1], n[2]);
            out.write(buf, len);
        }
        if (scalars) {
            len = std::snprintf(buf, sizeof buf, " %.9g", (*scalars)[i]);
            out.write(buf, len);
        }
        out.put('\n');
    }
    if (!out) throw IoError("write failure on " + path);
}

}  // namespace gnshape
