#include "focalspec/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cctype>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "focalspec/error.hpp"

namespace focalspec {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw InputError("cannot open " + path.string());
    return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    if (text) *text = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

float to_unit(float v) { return std::clamp(v, 0.0f, 1.0f); }

}  // namespace

Image read_png(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    std::uint8_t signature[8];
    if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
        throw InputError("not a PNG file: " + path.string());
    }

    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn,
                                             png_warning_fn);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> row_ptrs;
    std::vector<std::uint8_t> buffer;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InputError("corrupt PNG " + path.string() + ": " + error);
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const std::size_t width = png_get_image_width(png, info);
    const std::size_t height = png_get_image_height(png, info);
    const std::size_t channels = png_get_channels(png, info);
    bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);

    buffer.resize(row_bytes * height);
    row_ptrs.resize(height);
    for (std::size_t y = 0; y < height; ++y) row_ptrs[y] = buffer.data() + y * row_bytes;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (channels != 1 && channels != 3) {
        throw InputError("unsupported PNG channel layout in " + path.string());
    }
    Image image(height, width, channels);
    auto out = image.data();
    if (bit_depth == 16) {
        for (std::size_t y = 0; y < height; ++y) {
            const std::uint8_t* row = row_ptrs[y];
            for (std::size_t i = 0; i < width * channels; ++i) {
                const unsigned v = (unsigned(row[2 * i]) << 8) | row[2 * i + 1];
                out[y * width * channels + i] = static_cast<float>(v) / 65535.0f;
            }
        }
    } else {
        for (std::size_t y = 0; y < height; ++y) {
            const std::uint8_t* row = row_ptrs[y];
            for (std::size_t i = 0; i < width * channels; ++i) {
                out[y * width * channels + i] = static_cast<float>(row[i]) / 255.0f;
            }
        }
    }
    return image;
}

void write_png(const std::filesystem::path& path, const Image& image, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw InputError("PNG bit depth must be 8 or 16");
    if (image.channels() != 1 && image.channels() != 3) {
        throw InputError("PNG export needs 1 or 3 channels");
    }
    auto file = open_file(path, "wb");
    std::string error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn,
                                              png_warning_fn);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);

    const std::size_t w = image.width();
    const std::size_t h = image.height();
    const std::size_t c = image.channels();
    const std::size_t bytes_per_sample = bit_depth / 8;
    std::vector<std::uint8_t> buffer(w * h * c * bytes_per_sample);
    auto in = image.data();
    for (std::size_t i = 0; i < w * h * c; ++i) {
        const float v = to_unit(in[i]);
        if (bit_depth == 16) {
            const auto q = static_cast<unsigned>(std::lround(v * 65535.0f));
            buffer[2 * i] = static_cast<std::uint8_t>(q >> 8);
            buffer[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
        } else {
            buffer[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
    }
    std::vector<png_bytep> rows(h);
    for (std::size_t y = 0; y < h; ++y) rows[y] = buffer.data() + y * w * c * bytes_per_sample;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG write failed for " + path.string() + ": " + error);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
                 c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::string magic;
    std::size_t width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    in.get();
    if (!in || (magic != "PF" && magic != "Pf") || width == 0 || height == 0 || scale == 0.0) {
        throw InputError("malformed PFM header in " + path.string());
    }
    const std::size_t channels = magic == "PF" ? 3 : 1;
    const bool little = scale < 0.0;
    std::vector<std::uint32_t> raw(width * height * channels);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
    if (!in) throw InputError("truncated PFM data in " + path.string());

    const bool swap = little != (std::endian::native == std::endian::little);
    Image image(height, width, channels);
    auto out = image.data();
    // Rows are stored bottom to top.
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t i = 0; i < width * channels; ++i) {
            std::uint32_t bits = raw[(height - 1 - y) * width * channels + i];
            if (swap) bits = __builtin_bswap32(bits);
            out[y * width * channels + i] = std::bit_cast<float>(bits);
        }
    }
    return image;
}

void write_pfm(const std::filesystem::path& path, const Image& image) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw InputError("PFM export needs 1 or 3 channels");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    const bool little = std::endian::native == std::endian::little;
    out << (image.channels() == 3 ? "PF" : "Pf") << '\n'
        << image.width() << ' ' << image.height() << '\n'
        << (little ? "-1.0" : "1.0") << '\n';
    const std::size_t row_len = image.width() * image.channels();
    auto data = image.data();
    for (std::size_t y = image.height(); y-- > 0;) {
        out.write(reinterpret_cast<const char*>(data.data() + y * row_len),
                  static_cast<std::streamsize>(row_len * sizeof(float)));
    }
}

Image read_image(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".pfm") return read_pfm(path);
    if (ext == ".png") return read_png(path);
    throw InputError("unsupported image format: " + path.string());
}

}  // namespace focalspec
