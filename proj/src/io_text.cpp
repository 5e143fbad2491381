#include <cmath>
#include <cstdio>
#include <fstream>
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

std::ifstream open_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io, "cannot open " + path);
    return in;
}

std::ofstream create_text(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io, "cannot write " + path);
    return out;
}

}  // namespace

void write_pose(const std::string& path, const RigidMotion& g) {
    auto out = create_text(path);
    for (int r = 0; r < 3; ++r) {
        out << format_g17(g.R(r, 0)) << " " << format_g17(g.R(r, 1)) << " " << format_g17(g.R(r, 2))
            << " " << format_g17(g.t(r)) << "\n";
    }
}

RigidMotion read_pose(const std::string& path) {
    auto in = open_text(path);
    RigidMotion g;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) {
            double x;
            if (!(in >> x)) throw Error(errc::parse, "pose: expected 12 numbers: " + path);
            if (c < 3)
                g.R(r, c) = x;
            else
                g.t(r) = x;
        }
    if (!g.is_rigid(1e-6)) throw Error(errc::parse, "pose: not a rigid motion: " + path);
    return g;
}

void write_plane(const std::string& path, const Plane& plane) {
    auto out = create_text(path);
    out << format_g17(plane.normal.x()) << " " << format_g17(plane.normal.y()) << " "
        << format_g17(plane.normal.z()) << " " << format_g17(plane.d) << "\n";
}

Plane read_plane(const std::string& path) {
    auto in = open_text(path);
    Plane p;
    if (!(in >> p.normal.x() >> p.normal.y() >> p.normal.z() >> p.d))
        throw Error(errc::parse, "plane: expected 'nx ny nz d': " + path);
    double n = p.normal.norm();
    if (n < 1e-12) throw Error(errc::parse, "plane: zero normal: " + path);
    // Already-unit normals pass through untouched so a write/read round
    // trip is bit-exact; anything else is normalized (d scales along).
    if (std::abs(n - 1.0) > 1e-12) {
        p.normal /= n;
        p.d /= n;
    }
    return p;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& K) {
    auto out = create_text(path);
    out << format_g17(K.fu) << " " << format_g17(K.fv) << " " << format_g17(K.cu) << " "
        << format_g17(K.cv) << " " << K.width << " " << K.height << "\n";
}

CameraIntrinsics read_intrinsics(const std::string& path) {
    auto in = open_text(path);
    CameraIntrinsics K;
    if (!(in >> K.fu >> K.fv >> K.cu >> K.cv >> K.width >> K.height))
        throw Error(errc::parse, "intrinsics: expected 'fu fv cu cv width height': " + path);
    if (!K.valid()) throw Error(errc::parse, "intrinsics: invalid values: " + path);
    return K;
}

std::vector<std::array<double, 4>> read_correspondence_csv(const std::string& path) {
    auto in = open_text(path);
    std::vector<std::array<double, 4>> rows;
    std::string line;
    int line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        std::array<double, 4> row{};
        if (!(ls >> row[0] >> row[1] >> row[2] >> row[3])) {
            if (first_content) {  // optional header line
                first_content = false;
                continue;
            }
            throw Error(errc::parse,
                        "correspondences line " + std::to_string(line_no) + ": expected u0,v0,u1,v1");
        }
        first_content = false;
        rows.push_back(row);
    }
    return rows;
}

void write_scalar_field(const std::string& path, const ScalarField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::io, "cannot write " + path);
    out << "scalar_field\n";
    out << "dims " << field.grid.nx << " " << field.grid.ny << " " << field.grid.nz << "\n";
    out << "origin " << format_g17(field.grid.origin.x()) << " " << format_g17(field.grid.origin.y())
        << " " << format_g17(field.grid.origin.z()) << "\n";
    out << "spacing " << format_g17(field.grid.h) << "\n";
    out << "data float32 little_endian\n";
    std::vector<float> buf(field.values.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(field.values[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()) * 4);
    if (!out) throw Error(errc::io, "scalar field: write failed: " + path);
}

ScalarField read_scalar_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open " + path);
    std::string magic, word;
    in >> magic;
    VoxelGrid grid;
    if (magic != "scalar_field" || !(in >> word) || word != "dims" ||
        !(in >> grid.nx >> grid.ny >> grid.nz) || !(in >> word) || word != "origin" ||
        !(in >> grid.origin.x() >> grid.origin.y() >> grid.origin.z()) || !(in >> word) ||
        word != "spacing" || !(in >> grid.h))
        throw Error(errc::parse, "scalar field: bad header: " + path);
    std::string line;
    std::getline(in, line);  // end of the spacing line
    std::getline(in, line);  // data line
    if (line.rfind("data", 0) != 0) throw Error(errc::parse, "scalar field: missing data line: " + path);

    ScalarField field(grid);
    std::vector<float> buf(field.values.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()) * 4);
    if (!in) throw Error(errc::parse, "scalar field: truncated data: " + path);
    for (size_t i = 0; i < buf.size(); ++i) field.values[i] = buf[i];
    return field;
}

}  // namespace scanvol
