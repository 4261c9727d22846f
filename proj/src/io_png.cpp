#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <map>
#include <system_error>

#include "io_internal.hpp"
#include "scenefuse/io.hpp"

namespace scenefuse {
namespace {

// libpng reports errors via longjmp; the jump target rethrows as ParseError.
// No C++ object with a nontrivial destructor lives inside a libpng call.
void error_to_ctx(png_structp png, png_const_charp msg) {
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
    longjmp(png_jmpbuf(png), 1);
}

void drop_warning(png_structp, png_const_charp) {}

struct ReadCtx {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::string err;

    ~ReadCtx() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct WriteCtx {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::string err;

    ~WriteCtx() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

struct RawImage {
    int width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    std::size_t stride = 0;
    std::vector<unsigned char> data;  // height * stride, 16-bit samples host-endian
};

RawImage read_png_raw(const std::filesystem::path& path) {
    ReadCtx ctx;
    ctx.fp = std::fopen(path.string().c_str(), "rb");
    if (!ctx.fp) throw IoError("cannot open " + path.string());

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw ParseError("not a PNG file: " + path.string(), 0);

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx.err, error_to_ctx, drop_warning);
    if (!ctx.png) throw IoError("png_create_read_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("png_create_info_struct failed");

    RawImage raw;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(ctx.png)) != 0)
        throw ParseError("libpng: " + ctx.err + " in " + path.string(), 0);

    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    raw.width = int(png_get_image_width(ctx.png, ctx.info));
    raw.height = int(png_get_image_height(ctx.png, ctx.info));
    raw.bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    raw.color_type = png_get_color_type(ctx.png, ctx.info);
    if (raw.bit_depth == 16) png_set_swap(ctx.png);  // stored big-endian
    png_read_update_info(ctx.png, ctx.info);

    raw.stride = png_get_rowbytes(ctx.png, ctx.info);
    raw.data.resize(std::size_t(raw.height) * raw.stride);
    rows.resize(std::size_t(raw.height));
    for (int y = 0; y < raw.height; ++y) rows[std::size_t(y)] = raw.data.data() + y * raw.stride;

    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return raw;
}

void write_png_raw(const std::filesystem::path& path, int width, int height, int bit_depth,
                   int color_type, const unsigned char* data, std::size_t stride) {
    const auto tmp = detail::temp_sibling(path);
    {
        WriteCtx ctx;
        ctx.fp = std::fopen(tmp.string().c_str(), "wb");
        if (!ctx.fp) throw IoError("cannot open " + tmp.string() + " for writing");

        ctx.png =
            png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx.err, error_to_ctx, drop_warning);
        if (!ctx.png) throw IoError("png_create_write_struct failed");
        ctx.info = png_create_info_struct(ctx.png);
        if (!ctx.info) throw IoError("png_create_info_struct failed");

        std::vector<png_bytep> rows(static_cast<std::size_t>(height));
        for (int y = 0; y < height; ++y)
            rows[std::size_t(y)] = const_cast<unsigned char*>(data) + y * stride;

        if (setjmp(png_jmpbuf(ctx.png)) != 0)
            throw IoError("libpng: " + ctx.err + " writing " + tmp.string());

        png_init_io(ctx.png, ctx.fp);
        png_set_IHDR(ctx.png, ctx.info, png_uint_32(width), png_uint_32(height), bit_depth,
                     color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(ctx.png, ctx.info);
        if (bit_depth == 16) png_set_swap(ctx.png);
        png_write_image(ctx.png, rows.data());
        png_write_end(ctx.png, nullptr);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string());
    }
}

void require_format(const RawImage& raw, int bit_depth, int color_type, const char* expectation,
                    const std::filesystem::path& path) {
    if (raw.bit_depth != bit_depth || raw.color_type != color_type)
        throw ParseError("expected " + std::string(expectation) + ", got bit depth " +
                             std::to_string(raw.bit_depth) + " color type " +
                             std::to_string(raw.color_type) + " in " + path.string(),
                         0);
}

std::vector<std::uint8_t> read_gray8(const std::filesystem::path& path, int& w, int& h,
                                     const char* expectation) {
    const RawImage raw = read_png_raw(path);
    require_format(raw, 8, PNG_COLOR_TYPE_GRAY, expectation, path);
    w = raw.width;
    h = raw.height;
    std::vector<std::uint8_t> out(std::size_t(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[std::size_t(y) * w + x] = raw.data[std::size_t(y) * raw.stride + std::size_t(x)];
    return out;
}

}  // namespace

ImageRGB read_image(const std::filesystem::path& path) {
    const RawImage raw = read_png_raw(path);
    require_format(raw, 8, PNG_COLOR_TYPE_RGB, "8-bit RGB PNG", path);
    ImageRGB img(raw.width, raw.height);
    for (int y = 0; y < raw.height; ++y) {
        const unsigned char* row = raw.data.data() + std::size_t(y) * raw.stride;
        for (int x = 0; x < raw.width; ++x)
            img.set(x, y,
                    {row[3 * x + 0] / 255.0, row[3 * x + 1] / 255.0, row[3 * x + 2] / 255.0});
    }
    return img;
}

void write_image(const std::filesystem::path& path, const ImageRGB& image) {
    image.validate();
    if (image.width < 1 || image.height < 1)
        throw InvalidArgument("write_image: empty image");
    std::vector<unsigned char> data(std::size_t(3) * image.width * image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const Vec3 c = image.get(x, y);
            unsigned char* px = data.data() + 3 * (std::size_t(y) * image.width + x);
            px[0] = (unsigned char)std::lround(c.x * 255.0);
            px[1] = (unsigned char)std::lround(c.y * 255.0);
            px[2] = (unsigned char)std::lround(c.z * 255.0);
        }
    write_png_raw(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, data.data(),
                  std::size_t(3) * image.width);
}

BinaryMask read_mask(const std::filesystem::path& path, MaskSemantics semantics) {
    int w = 0, h = 0;
    const auto gray = read_gray8(path, w, h, "8-bit grayscale mask PNG");
    BinaryMask mask(w, h, semantics);
    for (std::size_t i = 0; i < gray.size(); ++i) mask.values[i] = gray[i] ? 1 : 0;
    return mask;
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
    mask.validate();
    if (mask.width < 1 || mask.height < 1) throw InvalidArgument("write_mask: empty mask");
    std::vector<unsigned char> data(mask.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask.values[i] ? 255 : 0;
    write_png_raw(path, mask.width, mask.height, 8, PNG_COLOR_TYPE_GRAY, data.data(),
                  std::size_t(mask.width));
}

std::vector<LabeledMask> read_label_masks(const std::filesystem::path& path) {
    int w = 0, h = 0;
    const auto gray = read_gray8(path, w, h, "8-bit grayscale label PNG");
    std::map<int, BinaryMask> by_label;
    for (std::size_t i = 0; i < gray.size(); ++i) {
        if (gray[i] == 0) continue;
        auto it = by_label.try_emplace(int(gray[i]), BinaryMask(w, h, MaskSemantics::Tool)).first;
        it->second.values[i] = 1;
    }
    std::vector<LabeledMask> out;
    out.reserve(by_label.size());
    for (auto& [label, mask] : by_label) out.push_back({label, std::move(mask)});
    return out;
}

void write_label_masks(const std::filesystem::path& path, const std::vector<LabeledMask>& masks) {
    if (masks.empty()) throw InvalidArgument("write_label_masks: no masks");
    const int w = masks[0].mask.width, h = masks[0].mask.height;
    if (w < 1 || h < 1) throw InvalidArgument("write_label_masks: empty mask");
    std::vector<unsigned char> data(std::size_t(w) * h, 0);
    for (const auto& [label, mask] : masks) {
        if (label < 1 || label > 255)
            throw InvalidArgument("write_label_masks: label " + std::to_string(label) +
                                  " outside [1,255]");
        require_same_dims(mask.width, mask.height, w, h, "label mask", "first mask");
        mask.validate();
        for (std::size_t i = 0; i < mask.values.size(); ++i) {
            if (!mask.values[i]) continue;
            if (data[i])
                throw InvalidArgument("write_label_masks: overlapping masks at label " +
                                      std::to_string(label));
            data[i] = (unsigned char)label;
        }
    }
    write_png_raw(path, w, h, 8, PNG_COLOR_TYPE_GRAY, data.data(), std::size_t(w));
}

DepthMap read_depth(const std::filesystem::path& path, double depth_scale) {
    if (!(depth_scale > 0.0)) throw InvalidArgument("read_depth: depth_scale must be > 0");
    const RawImage raw = read_png_raw(path);
    require_format(raw, 16, PNG_COLOR_TYPE_GRAY, "16-bit grayscale depth PNG", path);
    DepthMap depth(raw.width, raw.height);
    for (int y = 0; y < raw.height; ++y) {
        const unsigned char* row = raw.data.data() + std::size_t(y) * raw.stride;
        for (int x = 0; x < raw.width; ++x) {
            std::uint16_t v;
            std::memcpy(&v, row + 2 * x, 2);
            depth.at(x, y) = double(v) * depth_scale;
        }
    }
    return depth;
}

void write_depth(const std::filesystem::path& path, const DepthMap& depth, double depth_scale) {
    if (!(depth_scale > 0.0)) throw InvalidArgument("write_depth: depth_scale must be > 0");
    depth.validate();
    if (depth.width < 1 || depth.height < 1) throw InvalidArgument("write_depth: empty depth map");
    std::vector<unsigned char> data(std::size_t(2) * depth.width * depth.height);
    for (int y = 0; y < depth.height; ++y)
        for (int x = 0; x < depth.width; ++x) {
            const long long q = std::llround(depth.at(x, y) / depth_scale);
            if (q < 0 || q > 65535)
                throw InvalidArgument("write_depth: value " + std::to_string(depth.at(x, y)) +
                                      " does not fit 16 bits at scale " +
                                      std::to_string(depth_scale));
            const std::uint16_t v = std::uint16_t(q);
            std::memcpy(data.data() + 2 * (std::size_t(y) * depth.width + x), &v, 2);
        }
    write_png_raw(path, depth.width, depth.height, 16, PNG_COLOR_TYPE_GRAY, data.data(),
                  std::size_t(2) * depth.width);
}

}  // namespace scenefuse
