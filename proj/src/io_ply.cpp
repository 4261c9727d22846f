#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <optional>
#include <string_view>

#include "io_internal.hpp"
#include "scenefuse/io.hpp"

// Payload decoding assumes the host byte order matches the on-disk format.
static_assert(std::endian::native == std::endian::little,
              "binary PLY support is implemented for little-endian hosts only");

namespace scenefuse {
namespace {

enum class PType { Char, UChar, Short, UShort, Int, UInt, Float, Double };

std::size_t type_size(PType t) {
    switch (t) {
        case PType::Char:
        case PType::UChar: return 1;
        case PType::Short:
        case PType::UShort: return 2;
        case PType::Int:
        case PType::UInt:
        case PType::Float: return 4;
        case PType::Double: return 8;
    }
    return 0;
}

bool is_integer(PType t) { return t != PType::Float && t != PType::Double; }

std::optional<PType> parse_type(std::string_view tok) {
    if (tok == "char" || tok == "int8") return PType::Char;
    if (tok == "uchar" || tok == "uint8") return PType::UChar;
    if (tok == "short" || tok == "int16") return PType::Short;
    if (tok == "ushort" || tok == "uint16") return PType::UShort;
    if (tok == "int" || tok == "int32") return PType::Int;
    if (tok == "uint" || tok == "uint32") return PType::UInt;
    if (tok == "float" || tok == "float32") return PType::Float;
    if (tok == "double" || tok == "float64") return PType::Double;
    return std::nullopt;
}

struct Property {
    std::string name;
    PType type{};
    bool is_list = false;
    PType count_type{};
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
    std::size_t header_offset = 0;  // where the element line started, for errors
};

struct Header {
    bool binary = false;
    std::vector<Element> elements;
    std::size_t payload_pos = 0;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_space(line[j])) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

Header parse_header(const std::string& buf) {
    Header h;
    std::size_t pos = 0;
    bool saw_format = false, done = false;
    bool first = true;
    while (!done) {
        const std::size_t line_start = pos;
        const std::size_t nl = buf.find('\n', pos);
        if (nl == std::string::npos)
            throw ParseError("PLY header not terminated by end_header", buf.size());
        std::string_view line(buf.data() + pos, nl - pos);
        pos = nl + 1;

        const auto tok = split(line);
        if (first) {
            if (tok.size() != 1 || tok[0] != "ply")
                throw ParseError("not a PLY file (missing 'ply' magic)", line_start);
            first = false;
            continue;
        }
        if (tok.empty()) continue;

        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() != 3 || tok[2] != "1.0")
                throw ParseError("malformed format line", line_start);
            if (tok[1] == "ascii")
                h.binary = false;
            else if (tok[1] == "binary_little_endian")
                h.binary = true;
            else
                throw ParseError("unsupported PLY format '" + std::string(tok[1]) +
                                     "' (ascii or binary_little_endian)",
                                 line_start);
            saw_format = true;
            continue;
        }
        if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError("malformed element line", line_start);
            Element e;
            e.name = std::string(tok[1]);
            std::size_t count = 0;
            const auto* b = tok[2].data();
            const auto [p, ec] = std::from_chars(b, b + tok[2].size(), count);
            if (ec != std::errc{} || p != b + tok[2].size())
                throw ParseError("invalid element count", line_start);
            e.count = count;
            e.header_offset = line_start;
            h.elements.push_back(std::move(e));
            continue;
        }
        if (tok[0] == "property") {
            if (h.elements.empty())
                throw ParseError("property before any element", line_start);
            Property prop;
            if (tok.size() == 5 && tok[1] == "list") {
                const auto ct = parse_type(tok[2]);
                const auto it = parse_type(tok[3]);
                if (!ct || !it || !is_integer(*ct))
                    throw ParseError("malformed list property", line_start);
                prop.is_list = true;
                prop.count_type = *ct;
                prop.type = *it;
                prop.name = std::string(tok[4]);
            } else if (tok.size() == 3) {
                const auto t = parse_type(tok[1]);
                if (!t) throw ParseError("unknown property type '" + std::string(tok[1]) + "'",
                                         line_start);
                prop.type = *t;
                prop.name = std::string(tok[2]);
            } else {
                throw ParseError("malformed property line", line_start);
            }
            h.elements.back().props.push_back(std::move(prop));
            continue;
        }
        if (tok[0] == "end_header") {
            done = true;
            continue;
        }
        throw ParseError("unrecognized header line '" + std::string(tok[0]) + "'", line_start);
    }
    if (!saw_format) throw ParseError("PLY header has no format line", pos);
    h.payload_pos = pos;
    return h;
}

// Whitespace-separated token stream over the ascii payload.
struct TokenScanner {
    const std::string& buf;
    std::size_t pos;

    std::string_view next() {
        while (pos < buf.size() && is_space(buf[pos])) ++pos;
        if (pos >= buf.size()) throw ParseError("truncated payload", buf.size());
        const std::size_t start = pos;
        while (pos < buf.size() && !is_space(buf[pos])) ++pos;
        return std::string_view(buf.data() + start, pos - start);
    }

    double next_double() {
        const std::size_t at = pos;
        const auto sv = next();
        double v = 0.0;
        const auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
        if (ec != std::errc{} || p != sv.data() + sv.size())
            throw ParseError("invalid number '" + std::string(sv) + "'", at);
        return v;
    }

    long long next_int() {
        const std::size_t at = pos;
        const auto sv = next();
        long long v = 0;
        const auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
        if (ec != std::errc{} || p != sv.data() + sv.size())
            throw ParseError("invalid integer '" + std::string(sv) + "'", at);
        return v;
    }
};

struct ByteReader {
    const std::string& buf;
    std::size_t pos;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw ParseError("truncated payload", buf.size());
    }

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }

    double get_double(PType t) {
        switch (t) {
            case PType::Char: return double(get<std::int8_t>());
            case PType::UChar: return double(get<std::uint8_t>());
            case PType::Short: return double(get<std::int16_t>());
            case PType::UShort: return double(get<std::uint16_t>());
            case PType::Int: return double(get<std::int32_t>());
            case PType::UInt: return double(get<std::uint32_t>());
            case PType::Float: return double(get<float>());
            case PType::Double: return get<double>();
        }
        return 0.0;
    }

    long long get_int(PType t) {
        switch (t) {
            case PType::Char: return get<std::int8_t>();
            case PType::UChar: return get<std::uint8_t>();
            case PType::Short: return get<std::int16_t>();
            case PType::UShort: return get<std::uint16_t>();
            case PType::Int: return get<std::int32_t>();
            case PType::UInt: return get<std::uint32_t>();
            default: throw ParseError("list count is not an integer type", pos);
        }
    }

    void skip(std::size_t n) {
        need(n);
        pos += n;
    }
};

int find_prop(const Element& e, std::string_view name) {
    for (std::size_t i = 0; i < e.props.size(); ++i)
        if (e.props[i].name == name && !e.props[i].is_list) return int(i);
    return -1;
}

void decode_vertices(const Header& h, const Element& e, TokenScanner& ascii, ByteReader& bin,
                     PlyData& out) {
    const int ix = find_prop(e, "x"), iy = find_prop(e, "y"), iz = find_prop(e, "z");
    const std::pair<int, const char*> required[] = {{ix, "x"}, {iy, "y"}, {iz, "z"}};
    for (auto [idx, axis] : required) {
        if (idx < 0)
            throw ParseError(std::string("vertex element missing property '") + axis + "'",
                             e.header_offset);
        if (is_integer(e.props[std::size_t(idx)].type))
            throw ParseError(std::string("vertex property '") + axis +
                                 "' must be float or double",
                             e.header_offset);
    }
    const int ir = find_prop(e, "red"), ig = find_prop(e, "green"), ib = find_prop(e, "blue");
    const bool rgb = ir >= 0 && ig >= 0 && ib >= 0 &&
                     e.props[std::size_t(ir)].type == PType::UChar &&
                     e.props[std::size_t(ig)].type == PType::UChar &&
                     e.props[std::size_t(ib)].type == PType::UChar;
    int il = find_prop(e, "label");
    if (il >= 0 && !is_integer(e.props[std::size_t(il)].type)) il = -1;

    out.cloud.positions.resize(e.count);
    if (rgb) out.cloud.colors.resize(e.count);
    if (il >= 0) out.labels.resize(e.count);

    std::vector<double> row(e.props.size(), 0.0);
    for (std::size_t r = 0; r < e.count; ++r) {
        for (std::size_t p = 0; p < e.props.size(); ++p) {
            const Property& prop = e.props[p];
            if (prop.is_list) {
                const long long n = h.binary ? bin.get_int(prop.count_type) : ascii.next_int();
                if (n < 0) throw ParseError("negative list count", h.binary ? bin.pos : ascii.pos);
                if (h.binary)
                    bin.skip(std::size_t(n) * type_size(prop.type));
                else
                    for (long long k = 0; k < n; ++k) ascii.next();
            } else {
                row[p] = h.binary ? bin.get_double(prop.type) : ascii.next_double();
            }
        }
        out.cloud.positions[r] = {row[std::size_t(ix)], row[std::size_t(iy)],
                                  row[std::size_t(iz)]};
        if (rgb)
            out.cloud.colors[r] = {row[std::size_t(ir)] / 255.0, row[std::size_t(ig)] / 255.0,
                                   row[std::size_t(ib)] / 255.0};
        if (il >= 0) out.labels[r] = int(std::llround(row[std::size_t(il)]));
    }
}

void decode_faces(const Header& h, const Element& e, TokenScanner& ascii, ByteReader& bin,
                  PlyData& out) {
    int list_idx = -1;
    for (std::size_t i = 0; i < e.props.size(); ++i)
        if (e.props[i].is_list &&
            (e.props[i].name == "vertex_indices" || e.props[i].name == "vertex_index"))
            list_idx = int(i);
    if (list_idx < 0)
        throw ParseError("face element has no vertex_indices list", e.header_offset);

    std::vector<long long> poly;
    for (std::size_t r = 0; r < e.count; ++r) {
        for (std::size_t p = 0; p < e.props.size(); ++p) {
            const Property& prop = e.props[p];
            if (!prop.is_list) {
                if (h.binary)
                    bin.skip(type_size(prop.type));
                else
                    ascii.next();
                continue;
            }
            const std::size_t at = h.binary ? bin.pos : ascii.pos;
            const long long n = h.binary ? bin.get_int(prop.count_type) : ascii.next_int();
            if (int(p) != list_idx) {
                if (n < 0) throw ParseError("negative list count", at);
                if (h.binary)
                    bin.skip(std::size_t(n) * type_size(prop.type));
                else
                    for (long long k = 0; k < n; ++k) ascii.next();
                continue;
            }
            if (n < 3) throw ParseError("face with fewer than 3 vertices", at);
            poly.clear();
            for (long long k = 0; k < n; ++k)
                poly.push_back(h.binary ? bin.get_int(prop.type) : ascii.next_int());
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
                for (long long v : {poly[0], poly[k], poly[k + 1]})
                    if (v < 0 || std::size_t(v) >= out.cloud.positions.size())
                        throw ParseError("face index " + std::to_string(v) + " out of range", at);
                out.faces.push_back({int(poly[0]), int(poly[k]), int(poly[k + 1])});
            }
        }
    }
}

void skip_element(const Header& h, const Element& e, TokenScanner& ascii, ByteReader& bin) {
    bool fixed = true;
    std::size_t row_size = 0;
    for (const Property& p : e.props) {
        if (p.is_list)
            fixed = false;
        else
            row_size += type_size(p.type);
    }
    if (h.binary && fixed) {
        bin.skip(e.count * row_size);
        return;
    }
    for (std::size_t r = 0; r < e.count; ++r)
        for (const Property& p : e.props) {
            if (p.is_list) {
                const long long n = h.binary ? bin.get_int(p.count_type) : ascii.next_int();
                if (n < 0) throw ParseError("negative list count", h.binary ? bin.pos : ascii.pos);
                if (h.binary)
                    bin.skip(std::size_t(n) * type_size(p.type));
                else
                    for (long long k = 0; k < n; ++k) ascii.next();
            } else {
                if (h.binary)
                    bin.skip(type_size(p.type));
                else
                    ascii.next();
            }
        }
}

void append_double(std::string& out, double v) {
    char tmp[32];
    const auto res = std::to_chars(tmp, tmp + sizeof(tmp), v);
    out.append(tmp, res.ptr);
}

template <typename T>
void append_raw(std::string& out, T v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    out.append(tmp, sizeof(T));
}

}  // namespace

PlyData read_ply(const std::filesystem::path& path) {
    const std::string buf = detail::read_file_bytes(path);
    const Header h = parse_header(buf);

    PlyData out;
    TokenScanner ascii{buf, h.payload_pos};
    ByteReader bin{buf, h.payload_pos};
    bool saw_vertex = false;
    for (const Element& e : h.elements) {
        if (e.name == "vertex" && !saw_vertex) {
            decode_vertices(h, e, ascii, bin, out);
            saw_vertex = true;
        } else if (e.name == "face") {
            decode_faces(h, e, ascii, bin, out);
        } else {
            skip_element(h, e, ascii, bin);
        }
    }
    if (!saw_vertex) throw ParseError("no vertex element", buf.size());
    out.cloud.validate();
    return out;
}

PointCloud read_pointcloud(const std::filesystem::path& path) {
    return read_ply(path).cloud;
}

void write_pointcloud(const std::filesystem::path& path, const PointCloud& cloud,
                      PlyFormat format, const std::vector<int>* labels) {
    cloud.validate();
    const bool with_labels = labels != nullptr && !labels->empty();
    if (with_labels && labels->size() != cloud.size())
        throw InvalidArgument("write_pointcloud: labels length differs from positions length");

    std::string out;
    out += "ply\n";
    out += format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
    out += "element vertex " + std::to_string(cloud.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_colors())
        out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (with_labels) out += "property int label\n";
    out += "end_header\n";

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        if (format == PlyFormat::Ascii) {
            append_double(out, p.x);
            out += ' ';
            append_double(out, p.y);
            out += ' ';
            append_double(out, p.z);
            if (cloud.has_colors()) {
                const Vec3& c = cloud.colors[i];
                for (double ch : {c.x, c.y, c.z})
                    out += ' ' + std::to_string(int(std::lround(ch * 255.0)));
            }
            if (with_labels) out += ' ' + std::to_string((*labels)[i]);
            out += '\n';
        } else {
            append_raw(out, p.x);
            append_raw(out, p.y);
            append_raw(out, p.z);
            if (cloud.has_colors()) {
                const Vec3& c = cloud.colors[i];
                for (double ch : {c.x, c.y, c.z})
                    append_raw(out, std::uint8_t(std::lround(ch * 255.0)));
            }
            if (with_labels) append_raw(out, std::int32_t((*labels)[i]));
        }
    }
    atomic_write_bytes(path, out);
}

}  // namespace scenefuse
