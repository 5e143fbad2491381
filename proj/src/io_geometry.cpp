#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "scanvol/error.hpp"
#include "scanvol/io.hpp"

namespace scanvol {

namespace {

std::string format_g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

PlyType ply_type(const std::string& name) {
    if (name == "char" || name == "int8") return PlyType::I8;
    if (name == "uchar" || name == "uint8") return PlyType::U8;
    if (name == "short" || name == "int16") return PlyType::I16;
    if (name == "ushort" || name == "uint16") return PlyType::U16;
    if (name == "int" || name == "int32") return PlyType::I32;
    if (name == "uint" || name == "uint32") return PlyType::U32;
    if (name == "float" || name == "float32") return PlyType::F32;
    if (name == "double" || name == "float64") return PlyType::F64;
    throw Error(errc::parse, "ply: unknown type: " + name);
}

size_t ply_type_size(PlyType t) {
    switch (t) {
        case PlyType::I8:
        case PlyType::U8:
            return 1;
        case PlyType::I16:
        case PlyType::U16:
            return 2;
        case PlyType::I32:
        case PlyType::U32:
        case PlyType::F32:
            return 4;
        case PlyType::F64:
            return 8;
    }
    return 0;
}

double read_binary_value(std::istream& in, PlyType t) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(ply_type_size(t)));
    switch (t) {
        case PlyType::I8:
            return static_cast<int8_t>(buf[0]);
        case PlyType::U8:
            return buf[0];
        case PlyType::I16: {
            int16_t v;
            std::memcpy(&v, buf, 2);
            return v;
        }
        case PlyType::U16: {
            uint16_t v;
            std::memcpy(&v, buf, 2);
            return v;
        }
        case PlyType::I32: {
            int32_t v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PlyType::U32: {
            uint32_t v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PlyType::F32: {
            float v;
            std::memcpy(&v, buf, 4);
            return v;
        }
        case PlyType::F64: {
            double v;
            std::memcpy(&v, buf, 8);
            return v;
        }
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    bool is_list = false;
    PlyType type = PlyType::F64;
    PlyType count_type = PlyType::U8;
};

struct PlyElement {
    std::string name;
    size_t count = 0;
    std::vector<PlyProperty> properties;
    // Scalar columns by property name; list rows for list properties.
    std::map<std::string, std::vector<double>> columns;
    std::map<std::string, std::vector<std::vector<double>>> lists;
};

struct PlyFile {
    bool binary = false;
    std::vector<PlyElement> elements;

    const PlyElement* find(const std::string& name) const {
        for (const auto& e : elements)
            if (e.name == name) return &e;
        return nullptr;
    }
};

PlyFile read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
        throw Error(errc::parse, "ply: missing magic: " + path);

    PlyFile file;
    bool saw_format = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment" || word == "obj_info" || word.empty()) continue;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii")
                file.binary = false;
            else if (fmt == "binary_little_endian")
                file.binary = true;
            else
                throw Error(errc::parse, "ply: unsupported format: " + fmt);
            saw_format = true;
        } else if (word == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            file.elements.push_back(e);
        } else if (word == "property") {
            if (file.elements.empty()) throw Error(errc::parse, "ply: property before element");
            PlyProperty p;
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, vt;
                ls >> ct >> vt >> p.name;
                p.is_list = true;
                p.count_type = ply_type(ct);
                p.type = ply_type(vt);
            } else {
                ls >> p.name;
                p.type = ply_type(t);
            }
            file.elements.back().properties.push_back(p);
        } else if (word == "end_header") {
            break;
        } else {
            throw Error(errc::parse, "ply: unexpected header line: " + line);
        }
    }
    if (!saw_format) throw Error(errc::parse, "ply: missing format line: " + path);

    for (PlyElement& e : file.elements) {
        for (const PlyProperty& p : e.properties) {
            if (p.is_list)
                e.lists[p.name].reserve(e.count);
            else
                e.columns[p.name].reserve(e.count);
        }
        for (size_t row = 0; row < e.count; ++row) {
            for (const PlyProperty& p : e.properties) {
                if (p.is_list) {
                    size_t n;
                    if (file.binary) {
                        n = static_cast<size_t>(read_binary_value(in, p.count_type));
                    } else {
                        double nd;
                        if (!(in >> nd)) throw Error(errc::parse, "ply: truncated data: " + path);
                        n = static_cast<size_t>(nd);
                    }
                    if (n > 1024) throw Error(errc::parse, "ply: implausible list length");
                    std::vector<double> items(n);
                    for (size_t k = 0; k < n; ++k) {
                        if (file.binary)
                            items[k] = read_binary_value(in, p.type);
                        else if (!(in >> items[k]))
                            throw Error(errc::parse, "ply: truncated data: " + path);
                    }
                    e.lists[p.name].push_back(std::move(items));
                } else {
                    double v;
                    if (file.binary)
                        v = read_binary_value(in, p.type);
                    else if (!(in >> v))
                        throw Error(errc::parse, "ply: truncated data: " + path);
                    e.columns[p.name].push_back(v);
                }
            }
            if (!in) throw Error(errc::parse, "ply: truncated data: " + path);
        }
    }
    return file;
}

const std::vector<double>* column(const PlyElement& e, const std::string& name) {
    auto it = e.columns.find(name);
    return it == e.columns.end() ? nullptr : &it->second;
}

void append_binary(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
}

}  // namespace

void write_cloud_ply(const std::string& path, const OrientedPointCloud& cloud, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::io, "cannot write " + path);
    const bool colors = cloud.colors.size() == cloud.size();

    out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    for (const char* n : {"x", "y", "z", "nx", "ny", "nz"}) out << "property double " << n << "\n";
    if (colors)
        for (const char* n : {"red", "green", "blue"}) out << "property uchar " << n << "\n";
    out << "end_header\n";

    for (size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        const Vec3& n = cloud.normals[i];
        if (binary) {
            for (double v : {p.x(), p.y(), p.z(), n.x(), n.y(), n.z()}) append_binary(out, v);
            if (colors) out.write(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
        } else {
            out << format_g17(p.x()) << " " << format_g17(p.y()) << " " << format_g17(p.z()) << " "
                << format_g17(n.x()) << " " << format_g17(n.y()) << " " << format_g17(n.z());
            if (colors)
                out << " " << int(cloud.colors[i][0]) << " " << int(cloud.colors[i][1]) << " "
                    << int(cloud.colors[i][2]);
            out << "\n";
        }
    }
    if (!out) throw Error(errc::io, "ply: write failed: " + path);
}

OrientedPointCloud read_cloud_ply(const std::string& path) {
    PlyFile file = read_ply(path);
    const PlyElement* vertex = file.find("vertex");
    if (!vertex) throw Error(errc::parse, "ply: no vertex element: " + path);

    const std::vector<double>*x = column(*vertex, "x"), *y = column(*vertex, "y"),
                             *z = column(*vertex, "z");
    const std::vector<double>*nx = column(*vertex, "nx"), *ny = column(*vertex, "ny"),
                             *nz = column(*vertex, "nz");
    if (!x || !y || !z) throw Error(errc::parse, "ply: vertex element lacks x y z: " + path);
    if (!nx || !ny || !nz)
        throw Error(errc::parse, "ply: point cloud lacks normals (nx ny nz): " + path);

    OrientedPointCloud cloud;
    cloud.points.resize(vertex->count);
    cloud.normals.resize(vertex->count);
    for (size_t i = 0; i < vertex->count; ++i) {
        cloud.points[i] = Vec3((*x)[i], (*y)[i], (*z)[i]);
        cloud.normals[i] = Vec3((*nx)[i], (*ny)[i], (*nz)[i]);
    }
    const std::vector<double>*r = column(*vertex, "red"), *g = column(*vertex, "green"),
                             *b = column(*vertex, "blue");
    if (r && g && b) {
        cloud.colors.resize(vertex->count);
        for (size_t i = 0; i < vertex->count; ++i)
            cloud.colors[i] = {static_cast<uint8_t>((*r)[i]), static_cast<uint8_t>((*g)[i]),
                               static_cast<uint8_t>((*b)[i])};
    }
    return cloud;
}

void write_mesh_ply(const std::string& path, const TriangleMesh& mesh, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::io, "cannot write " + path);
    out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    for (const char* n : {"x", "y", "z"}) out << "property double " << n << "\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";

    for (const Vec3& p : mesh.vertices) {
        if (binary) {
            for (double v : {p.x(), p.y(), p.z()}) append_binary(out, v);
        } else {
            out << format_g17(p.x()) << " " << format_g17(p.y()) << " " << format_g17(p.z()) << "\n";
        }
    }
    for (const auto& f : mesh.faces) {
        if (binary) {
            uint8_t n = 3;
            out.write(reinterpret_cast<const char*>(&n), 1);
            int32_t idx[3] = {f[0], f[1], f[2]};
            out.write(reinterpret_cast<const char*>(idx), 12);
        } else {
            out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
        }
    }
    if (!out) throw Error(errc::io, "ply: write failed: " + path);
}

TriangleMesh read_mesh(const std::string& path) {
    auto dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".obj") return read_mesh_obj(path);
    if (ext == ".ply") return read_mesh_ply(path);
    throw Error(errc::config, "mesh must be .ply or .obj: " + path);
}

TriangleMesh read_mesh_ply(const std::string& path) {
    PlyFile file = read_ply(path);
    const PlyElement* vertex = file.find("vertex");
    const PlyElement* face = file.find("face");
    if (!vertex || !face) throw Error(errc::parse, "ply: need vertex and face elements: " + path);
    const std::vector<double>*x = column(*vertex, "x"), *y = column(*vertex, "y"),
                             *z = column(*vertex, "z");
    if (!x || !y || !z) throw Error(errc::parse, "ply: vertex element lacks x y z: " + path);

    TriangleMesh mesh;
    mesh.vertices.resize(vertex->count);
    for (size_t i = 0; i < vertex->count; ++i) mesh.vertices[i] = Vec3((*x)[i], (*y)[i], (*z)[i]);

    const std::vector<std::vector<double>>* indices = nullptr;
    for (const char* name : {"vertex_indices", "vertex_index"}) {
        auto it = face->lists.find(name);
        if (it != face->lists.end()) indices = &it->second;
    }
    if (!indices) throw Error(errc::parse, "ply: face element lacks vertex_indices: " + path);
    for (const auto& poly : *indices) {
        if (poly.size() < 3) throw Error(errc::parse, "ply: face with fewer than 3 vertices");
        for (size_t k = 2; k < poly.size(); ++k)
            mesh.faces.push_back({static_cast<int>(poly[0]), static_cast<int>(poly[k - 1]),
                                  static_cast<int>(poly[k])});
    }
    mesh.validate();
    return mesh;
}

void write_mesh_obj(const std::string& path, const TriangleMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io, "cannot write " + path);
    for (const Vec3& p : mesh.vertices)
        out << "v " << format_g17(p.x()) << " " << format_g17(p.y()) << " " << format_g17(p.z())
            << "\n";
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    if (!out) throw Error(errc::io, "obj: write failed: " + path);
}

TriangleMesh read_mesh_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io, "cannot open " + path);
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        if (word == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw Error(errc::parse, "obj: bad vertex line: " + line);
            mesh.vertices.emplace_back(x, y, z);
        } else if (word == "f") {
            std::vector<int> poly;
            std::string token;
            while (ls >> token) {
                // "7", "7/1", "7//2", "7/1/2"; negative indices count from the end
                long idx = std::strtol(token.c_str(), nullptr, 10);
                if (idx == 0) throw Error(errc::parse, "obj: bad face index: " + token);
                if (idx < 0) idx = static_cast<long>(mesh.vertices.size()) + idx + 1;
                poly.push_back(static_cast<int>(idx - 1));
            }
            if (poly.size() < 3) throw Error(errc::parse, "obj: face with fewer than 3 vertices");
            for (size_t k = 2; k < poly.size(); ++k)
                mesh.faces.push_back({poly[0], poly[k - 1], poly[k]});
        }
        // vn, vt, usemtl, o, g, s, mtllib: irrelevant here
    }
    mesh.validate();
    return mesh;
}

}  // namespace scanvol
