#pragma once

// Minimal libpng wrappers for the three raster kinds the datasets use:
// 8-bit RGB color, 16-bit grayscale depth (millimeters) and 8-bit grayscale
// labels/masks.

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "wcluster/common.hpp"

namespace wcluster::png {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void on_error(png_structp png_ptr, png_const_charp) { std::longjmp(png_jmpbuf(png_ptr), 1); }
inline void on_warning(png_structp, png_const_charp) {}

struct DecodedImage {
    std::size_t width = 0;
    std::size_t height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> bytes; // big-endian samples when bit_depth == 16
};

// Decodes to either 8-bit RGB (`want_rgb`) or grayscale of native depth.
inline DecodedImage decode(const std::string& path, bool want_rgb) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) {
        throw DatasetError(DatasetError::Kind::MissingFile, "cannot open " + path);
    }
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw DatasetError(DatasetError::Kind::Decode, path + " is not a PNG file");
    }
    png_structp png_ptr = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    png_infop info_ptr = png_ptr != nullptr ? png_create_info_struct(png_ptr) : nullptr;
    if (info_ptr == nullptr) {
        png_destroy_read_struct(&png_ptr, nullptr, nullptr);
        throw DatasetError(DatasetError::Kind::Decode, "libpng initialisation failed");
    }

    DecodedImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png_ptr))) {
        png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
        throw DatasetError(DatasetError::Kind::Decode, "cannot decode " + path);
    }
    png_init_io(png_ptr, file.get());
    png_set_sig_bytes(png_ptr, 8);
    png_read_info(png_ptr, info_ptr);

    const png_byte color_type = png_get_color_type(png_ptr, info_ptr);
    const png_byte depth = png_get_bit_depth(png_ptr, info_ptr);

    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png_ptr);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png_ptr);
    }
    if ((color_type & PNG_COLOR_MASK_ALPHA) != 0) {
        png_set_strip_alpha(png_ptr);
    }
    if (png_get_valid(png_ptr, info_ptr, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png_ptr);
        png_set_strip_alpha(png_ptr);
    }
    if (want_rgb) {
        if (depth == 16) {
            png_set_strip_16(png_ptr);
        }
        if ((color_type & PNG_COLOR_MASK_COLOR) == 0) {
            png_set_gray_to_rgb(png_ptr);
        }
    } else if ((color_type & PNG_COLOR_MASK_COLOR) != 0) {
        png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
        throw DatasetError(DatasetError::Kind::Decode, path + ": expected a grayscale PNG");
    }
    png_read_update_info(png_ptr, info_ptr);

    img.width = png_get_image_width(png_ptr, info_ptr);
    img.height = png_get_image_height(png_ptr, info_ptr);
    img.channels = png_get_channels(png_ptr, info_ptr);
    img.bit_depth = png_get_bit_depth(png_ptr, info_ptr);
    const std::size_t stride = png_get_rowbytes(png_ptr, info_ptr);
    img.bytes.resize(stride * img.height);
    rows.resize(img.height);
    for (std::size_t r = 0; r < img.height; ++r) {
        rows[r] = img.bytes.data() + r * stride;
    }
    png_read_image(png_ptr, rows.data());
    png_read_end(png_ptr, nullptr);
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    return img;
}

inline void encode(const std::string& path, std::size_t width, std::size_t height, int color_type, int bit_depth,
                   const std::vector<std::uint8_t>& bytes) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) {
        throw DatasetError(DatasetError::Kind::Io, "cannot write " + path);
    }
    png_structp png_ptr = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    png_infop info_ptr = png_ptr != nullptr ? png_create_info_struct(png_ptr) : nullptr;
    if (info_ptr == nullptr) {
        png_destroy_write_struct(&png_ptr, nullptr);
        throw DatasetError(DatasetError::Kind::Io, "libpng initialisation failed");
    }
    std::vector<png_const_bytep> rows(height);
    if (setjmp(png_jmpbuf(png_ptr))) {
        png_destroy_write_struct(&png_ptr, &info_ptr);
        throw DatasetError(DatasetError::Kind::Io, "cannot encode " + path);
    }
    png_init_io(png_ptr, file.get());
    png_set_IHDR(png_ptr, info_ptr, png_uint_32(width), png_uint_32(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png_ptr, info_ptr);
    const std::size_t stride = bytes.size() / (height == 0 ? 1 : height);
    for (std::size_t r = 0; r < height; ++r) {
        rows[r] = bytes.data() + r * stride;
    }
    png_write_rows(png_ptr, const_cast<png_bytepp>(rows.data()), png_uint_32(height));
    png_write_end(png_ptr, nullptr);
    png_destroy_write_struct(&png_ptr, &info_ptr);
}

} // namespace detail

inline Grid<Rgb> read_rgb(const std::string& path) {
    const auto img = detail::decode(path, true);
    Grid<Rgb> out(img.width, img.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {img.bytes[3 * i], img.bytes[3 * i + 1], img.bytes[3 * i + 2]};
    }
    return out;
}

inline Grid<std::uint16_t> read_gray16(const std::string& path) {
    const auto img = detail::decode(path, false);
    Grid<std::uint16_t> out(img.width, img.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = img.bit_depth == 16 ? std::uint16_t((img.bytes[2 * i] << 8) | img.bytes[2 * i + 1])
                                     : std::uint16_t(img.bytes[i]);
    }
    return out;
}

inline Grid<std::uint8_t> read_gray8(const std::string& path) {
    const auto img = detail::decode(path, false);
    if (img.bit_depth != 8) {
        throw DatasetError(DatasetError::Kind::Decode, path + ": expected an 8-bit grayscale PNG");
    }
    Grid<std::uint8_t> out(img.width, img.height);
    out.data() = img.bytes;
    return out;
}

inline void write_rgb(const std::string& path, const Grid<Rgb>& img) {
    std::vector<std::uint8_t> bytes(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) {
        bytes[3 * i] = img[i].r;
        bytes[3 * i + 1] = img[i].g;
        bytes[3 * i + 2] = img[i].b;
    }
    detail::encode(path, img.width(), img.height(), PNG_COLOR_TYPE_RGB, 8, bytes);
}

inline void write_gray16(const std::string& path, const Grid<std::uint16_t>& img) {
    std::vector<std::uint8_t> bytes(img.size() * 2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        bytes[2 * i] = std::uint8_t(img[i] >> 8);
        bytes[2 * i + 1] = std::uint8_t(img[i] & 0xff);
    }
    detail::encode(path, img.width(), img.height(), PNG_COLOR_TYPE_GRAY, 16, bytes);
}

inline void write_gray8(const std::string& path, const Grid<std::uint8_t>& img) {
    detail::encode(path, img.width(), img.height(), PNG_COLOR_TYPE_GRAY, 8, img.data());
}

} // namespace wcluster::png
