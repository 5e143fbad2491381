#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "scanvol/error.hpp"
#include "scanvol/io.hpp"

namespace scanvol {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngImage {
    int width = 0, height = 0, bit_depth = 0, channels = 0;
    std::vector<uint16_t> samples;  // row major, 8-bit data widened
};

PngImage read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error(errc::io, "cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error(errc::io, "png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error(errc::io, "png: allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(errc::parse, "png: failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w, h;
    int bit_depth, color_type;
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
        color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (bit_depth == 16) png_set_swap(png);  // stored big endian
    png_read_update_info(png, info);

    PngImage out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.bit_depth = png_get_bit_depth(png, info);
    out.channels = png_get_channels(png, info);
    if (out.channels != 1) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(errc::parse, "png: expected a grayscale image: " + path);
    }

    size_t stride = png_get_rowbytes(png, info);
    std::vector<uint8_t> raw(stride * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    out.samples.resize(static_cast<size_t>(out.width) * out.height);
    if (out.bit_depth == 16) {
        std::memcpy(out.samples.data(), raw.data(), out.samples.size() * 2);
    } else {
        for (size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = raw[i];
    }
    return out;
}

void write_png(const std::string& path, int width, int height, int bit_depth,
               const uint16_t* samples) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error(errc::io, "cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error(errc::io, "png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(errc::io, "png: allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(errc::io, "png: failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);

    std::vector<uint8_t> row8(bit_depth == 8 ? width : 0);
    for (int y = 0; y < height; ++y) {
        if (bit_depth == 16) {
            png_write_row(png, reinterpret_cast<png_const_bytep>(samples + static_cast<size_t>(y) * width));
        } else {
            for (int x = 0; x < width; ++x)
                row8[x] = static_cast<uint8_t>(samples[static_cast<size_t>(y) * width + x]);
            png_write_row(png, row8.data());
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

DepthImage read_depth_image(const std::string& path) {
    if (has_suffix(path, ".pfm")) return read_depth_pfm(path);
    if (has_suffix(path, ".png")) return read_depth_png(path);
    throw Error(errc::config, "depth image must be .png or .pfm: " + path);
}

DepthImage read_depth_png(const std::string& path) {
    PngImage png = read_png(path);
    if (png.bit_depth != 16)
        throw Error(errc::parse, "depth png must be 16-bit grayscale (millimeters): " + path);
    DepthImage out(png.width, png.height);
    for (size_t i = 0; i < out.depth.size(); ++i)
        out.depth[i] = png.samples[i] == 0 ? 0.0 : png.samples[i] / 1000.0;
    return out;
}

void write_depth_png(const std::string& path, const DepthImage& depth) {
    std::vector<uint16_t> mm(depth.depth.size());
    for (size_t i = 0; i < mm.size(); ++i) {
        double z = depth.depth[i];
        if (!(std::isfinite(z) && z > 0.0)) {
            mm[i] = 0;
            continue;
        }
        double v = std::round(z * 1000.0);
        mm[i] = static_cast<uint16_t>(std::min(std::max(v, 1.0), 65535.0));
    }
    write_png(path, depth.width, depth.height, 16, mm.data());
}

DepthImage read_depth_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open " + path);
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    if (magic != "Pf" || width <= 0 || height <= 0 || scale >= 0.0)
        throw Error(errc::parse, "pfm: expected little-endian grayscale 'Pf': " + path);
    in.get();  // single whitespace after the header

    std::vector<float> row(width);
    DepthImage out(width, height);
    for (int y = height - 1; y >= 0; --y) {  // PFM rows run bottom to top
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(width) * 4);
        if (!in) throw Error(errc::parse, "pfm: truncated data: " + path);
        for (int x = 0; x < width; ++x) {
            float z = row[x];
            out.at(x, y) = (std::isfinite(z) && z > 0.0f) ? static_cast<double>(z) : 0.0;
        }
    }
    return out;
}

void write_depth_pfm(const std::string& path, const DepthImage& depth) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::io, "cannot write " + path);
    out << "Pf\n" << depth.width << " " << depth.height << "\n-1.0\n";
    std::vector<float> row(depth.width);
    for (int y = depth.height - 1; y >= 0; --y) {
        for (int x = 0; x < depth.width; ++x) {
            double z = depth.at(x, y);
            row[x] = (std::isfinite(z) && z > 0.0) ? static_cast<float>(z) : 0.0f;
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(depth.width) * 4);
    }
    if (!out) throw Error(errc::io, "pfm: write failed: " + path);
}

GrayImage read_gray_png(const std::string& path) {
    PngImage png = read_png(path);
    GrayImage out(png.width, png.height);
    const float denom = png.bit_depth == 16 ? 65535.0f : 255.0f;
    for (size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = png.samples[i] / denom;
    return out;
}

void write_gray_png(const std::string& path, const GrayImage& image) {
    std::vector<uint16_t> bytes(image.pixels.size());
    for (size_t i = 0; i < bytes.size(); ++i) {
        float v = std::min(std::max(image.pixels[i], 0.0f), 1.0f);
        bytes[i] = static_cast<uint16_t>(std::lround(v * 255.0f));
    }
    write_png(path, image.width, image.height, 8, bytes.data());
}

}  // namespace scanvol
