#include <charconv>
#include <string_view>
#include <vector>

#include "io_internal.hpp"
#include "scenefuse/io.hpp"

namespace scenefuse {
namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::vector<std::string_view> fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_blank(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_blank(line[j])) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_coord(std::string_view sv, std::size_t off) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc{} || p != sv.data() + sv.size())
        throw ParseError("invalid coordinate '" + std::string(sv) + "'", off);
    return v;
}

// First slash-delimited field of "i", "i/t", "i/t/n", or "i//n".
long long parse_face_index(std::string_view sv, std::size_t off) {
    const std::size_t slash = sv.find('/');
    const std::string_view head = slash == std::string_view::npos ? sv : sv.substr(0, slash);
    long long v = 0;
    const auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
    if (ec != std::errc{} || p != head.data() + head.size())
        throw ParseError("invalid face index '" + std::string(sv) + "'", off);
    if (v <= 0)
        throw ParseError("face index must be positive (relative indices unsupported)", off);
    return v;
}

TriangleMesh read_mesh_obj_bytes(const std::string& buf) {
    TriangleMesh mesh;
    std::vector<std::pair<std::array<long long, 3>, std::size_t>> pending;

    std::size_t pos = 0;
    while (pos < buf.size()) {
        const std::size_t line_start = pos;
        std::size_t nl = buf.find('\n', pos);
        if (nl == std::string::npos) nl = buf.size();
        std::string_view line(buf.data() + pos, nl - pos);
        pos = nl + 1;

        const auto f = fields(line);
        if (f.empty() || f[0][0] == '#') continue;
        if (f[0] == "v") {
            if (f.size() < 4) throw ParseError("vertex record needs 3 coordinates", line_start);
            mesh.vertices.push_back({parse_coord(f[1], line_start), parse_coord(f[2], line_start),
                                     parse_coord(f[3], line_start)});
        } else if (f[0] == "f") {
            if (f.size() < 4) throw ParseError("face record needs at least 3 indices", line_start);
            std::vector<long long> poly;
            for (std::size_t k = 1; k < f.size(); ++k)
                poly.push_back(parse_face_index(f[k], line_start));
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                pending.push_back({{poly[0], poly[k], poly[k + 1]}, line_start});
        }
        // All other record types (vn, vt, o, g, s, usemtl, mtllib, ...) are skipped.
    }

    const long long n = static_cast<long long>(mesh.vertices.size());
    for (const auto& [tri, off] : pending) {
        std::array<int, 3> face{};
        for (int k = 0; k < 3; ++k) {
            if (tri[std::size_t(k)] > n)
                throw ParseError("face references vertex " + std::to_string(tri[std::size_t(k)]) +
                                     " of " + std::to_string(n),
                                 off);
            face[std::size_t(k)] = int(tri[std::size_t(k)] - 1);  // OBJ indices are 1-based
        }
        mesh.faces.push_back(face);
    }
    mesh.validate();
    return mesh;
}

}  // namespace

TriangleMesh read_mesh(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".obj") return read_mesh_obj_bytes(detail::read_file_bytes(path));
    if (ext == ".ply") {
        PlyData data = read_ply(path);
        TriangleMesh mesh;
        mesh.vertices = std::move(data.cloud.positions);
        mesh.faces = std::move(data.faces);
        mesh.validate();
        return mesh;
    }
    throw InvalidArgument("read_mesh: unsupported extension '" + ext + "' (need .obj or .ply)");
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
    mesh.validate();
    std::string out;
    char tmp[32];
    for (const Vec3& v : mesh.vertices) {
        out += 'v';
        for (double c : {v.x, v.y, v.z}) {
            const auto res = std::to_chars(tmp, tmp + sizeof(tmp), c);
            out += ' ';
            out.append(tmp, res.ptr);
        }
        out += '\n';
    }
    for (const auto& f : mesh.faces) {
        out += 'f';
        for (int idx : f) out += ' ' + std::to_string(idx + 1);
        out += '\n';
    }
    atomic_write_bytes(path, out);
}

}  // namespace scenefuse
