#include "stls/stl_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace stls {

namespace {

constexpr double kDegenerateArea = 1e-12;

float read_f32le(const uint8_t* p) {
    uint32_t u = (uint32_t)p[0] | ((uint32_t)p[1] << 8) | ((uint32_t)p[2] << 16) |
                 ((uint32_t)p[3] << 24);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

uint32_t read_u32le(const uint8_t* p) {
    return (uint32_t)p[0] | ((uint32_t)p[1] << 8) | ((uint32_t)p[2] << 16) |
           ((uint32_t)p[3] << 24);
}

void push_f32le(std::vector<uint8_t>& out, float f) {
    uint32_t u;
    std::memcpy(&u, &f, 4);
    out.push_back((uint8_t)(u & 0xff));
    out.push_back((uint8_t)((u >> 8) & 0xff));
    out.push_back((uint8_t)((u >> 16) & 0xff));
    out.push_back((uint8_t)((u >> 24) & 0xff));
}

void push_u32le(std::vector<uint8_t>& out, uint32_t u) {
    out.push_back((uint8_t)(u & 0xff));
    out.push_back((uint8_t)((u >> 8) & 0xff));
    out.push_back((uint8_t)((u >> 16) & 0xff));
    out.push_back((uint8_t)((u >> 24) & 0xff));
}

bool looks_binary(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 84) return false;
    uint32_t count = read_u32le(bytes.data() + 80);
    // Files starting with "solid" are still binary when the size formula matches.
    if (bytes.size() == 84 + (size_t)count * 50) return true;
    return std::memcmp(bytes.data(), "solid", 5) != 0;
}

Mesh parse_binary(const std::vector<uint8_t>& bytes, ParseStats* stats) {
    if (bytes.size() < 84) throw Error("parse_stl: truncated binary header");
    uint32_t count = read_u32le(bytes.data() + 80);
    size_t need = 84 + (size_t)count * 50;
    if (bytes.size() < need)
        throw Error("parse_stl: truncated binary body (declared " +
                    std::to_string(count) + " triangles, need " + std::to_string(need) +
                    " bytes, got " + std::to_string(bytes.size()) + ")");
    Mesh mesh;
    mesh.triangles.reserve(count);
    const uint8_t* p = bytes.data() + 84;
    for (uint32_t i = 0; i < count; ++i, p += 50) {
        Triangle t;
        // 12 floats: normal then three vertices; normal is recomputed below.
        double v[12];
        for (int j = 0; j < 12; ++j) v[j] = read_f32le(p + 4 * j);
        t.v0 = {v[3], v[4], v[5]};
        t.v1 = {v[6], v[7], v[8]};
        t.v2 = {v[9], v[10], v[11]};
        if (!t.v0.finite() || !t.v1.finite() || !t.v2.finite())
            throw Error("parse_stl: non-finite vertex in facet " + std::to_string(i));
        if (t.area() < kDegenerateArea) {
            if (stats) stats->degenerate_dropped++;
            continue;
        }
        t.normal = t.computed_normal();
        mesh.triangles.push_back(t);
    }
    if (mesh.empty()) throw Error("parse_stl: empty mesh");
    return mesh;
}

Mesh parse_ascii(const std::vector<uint8_t>& bytes, ParseStats* stats) {
    std::string text(bytes.begin(), bytes.end());
    std::istringstream in(text);
    std::string tok;
    Mesh mesh;
    std::vector<Vec3> verts;
    size_t facet_no = 0;
    auto next_real = [&](const char* what) {
        std::string s;
        if (!(in >> s)) throw Error(std::string("parse_stl: missing ") + what);
        try {
            size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw Error(std::string("parse_stl: unparseable ") + what + " token '" + s +
                        "' in facet " + std::to_string(facet_no));
        }
    };
    while (in >> tok) {
        if (tok == "facet") {
            facet_no++;
            verts.clear();
        } else if (tok == "vertex") {
            Vec3 v{next_real("vertex x"), next_real("vertex y"), next_real("vertex z")};
            if (!v.finite()) throw Error("parse_stl: non-finite vertex");
            verts.push_back(v);
        } else if (tok == "endfacet") {
            if (verts.size() != 3)
                throw Error("parse_stl: facet " + std::to_string(facet_no) + " has " +
                            std::to_string(verts.size()) + " vertices");
            Triangle t;
            t.v0 = verts[0];
            t.v1 = verts[1];
            t.v2 = verts[2];
            if (t.area() < kDegenerateArea) {
                if (stats) stats->degenerate_dropped++;
                continue;
            }
            t.normal = t.computed_normal();
            mesh.triangles.push_back(t);
        } else if (tok == "normal") {
            next_real("normal x");
            next_real("normal y");
            next_real("normal z");
        }
        // solid/endsolid/outer/loop/endloop and solid names carry no geometry.
    }
    if (mesh.empty()) throw Error("parse_stl: empty mesh");
    return mesh;
}

}  // namespace

Mesh parse_stl(const std::vector<uint8_t>& bytes, ParseStats* stats) {
    if (stats) *stats = {};
    if (bytes.size() >= 5 && std::memcmp(bytes.data(), "solid", 5) == 0 &&
        !looks_binary(bytes))
        return parse_ascii(bytes, stats);
    return parse_binary(bytes, stats);
}

std::vector<uint8_t> write_stl(const Mesh& mesh, StlFormat format) {
    if (mesh.empty()) throw Error("write_stl: empty mesh");
    if (format == StlFormat::ascii) {
        std::ostringstream out;
        out.precision(9);
        out << "solid stls\n";
        for (const auto& t : mesh.triangles) {
            Vec3 n = t.computed_normal();
            out << "  facet normal " << n.x << " " << n.y << " " << n.z << "\n"
                << "    outer loop\n";
            for (const Vec3* v : {&t.v0, &t.v1, &t.v2})
                out << "      vertex " << v->x << " " << v->y << " " << v->z << "\n";
            out << "    endloop\n  endfacet\n";
        }
        out << "endsolid stls\n";
        std::string s = out.str();
        return std::vector<uint8_t>(s.begin(), s.end());
    }
    std::vector<uint8_t> out;
    out.reserve(84 + mesh.size() * 50);
    char header[80] = "stls binary stl";
    out.insert(out.end(), header, header + 80);
    push_u32le(out, (uint32_t)mesh.size());
    for (const auto& t : mesh.triangles) {
        // Normal is derived from the f32-rounded vertices so that a
        // parse/write cycle reproduces records bit-exactly.  The rounding
        // goes through volatile float storage; otherwise the optimizer feeds
        // the unrounded doubles into the normal and the roundtrip drifts.
        volatile float vf[9] = {(float)t.v0.x, (float)t.v0.y, (float)t.v0.z,
                                (float)t.v1.x, (float)t.v1.y, (float)t.v1.z,
                                (float)t.v2.x, (float)t.v2.y, (float)t.v2.z};
        Triangle r;
        r.v0 = {vf[0], vf[1], vf[2]};
        r.v1 = {vf[3], vf[4], vf[5]};
        r.v2 = {vf[6], vf[7], vf[8]};
        Vec3 n = r.computed_normal();
        for (double c : {n.x, n.y, n.z, r.v0.x, r.v0.y, r.v0.z, r.v1.x, r.v1.y, r.v1.z,
                         r.v2.x, r.v2.y, r.v2.z})
            push_f32le(out, (float)c);
        out.push_back(0);
        out.push_back(0);
    }
    return out;
}

Mesh load_stl_file(const std::string& path, ParseStats* stats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open STL file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return parse_stl(bytes, stats);
}

void save_stl_file(const Mesh& mesh, const std::string& path, StlFormat format) {
    auto bytes = write_stl(mesh, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write STL file: " + path);
    out.write((const char*)bytes.data(), (std::streamsize)bytes.size());
}

}  // namespace stls
