#include <png.h>

#include <csetjmp>
#include <cstring>
#include <string>

#include "avs/core/errors.hpp"
#include "avs/media/codecs.hpp"

namespace avs::media {
namespace {

struct ErrorSlot {
    std::string message;
};

void on_error(png_structp png, png_const_charp msg) {
    if (auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png))) slot->message = msg;
    png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

struct ReadCursor {
    ByteSpan data;
    std::size_t pos = 0;
};

void read_fn(png_structp png, png_bytep out, png_size_t len) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (len > cur->data.size() - cur->pos) png_error(png, "unexpected end of data");
    std::memcpy(out, cur->data.data() + cur->pos, len);
    cur->pos += len;
}

void write_fn(png_structp png, png_bytep in, png_size_t len) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), in, in + len);
}

void flush_fn(png_structp) {}

// Rows are packed before setjmp so no C++ object is constructed between the
// setjmp and a possible longjmp.
std::vector<Bytes> pack_rows(const Image& img) {
    const std::size_t row_samples = static_cast<std::size_t>(img.width) * img.samples_per_pixel;
    const std::size_t bps = img.bits_per_sample / 8;
    std::vector<Bytes> rows(img.height, Bytes(row_samples * bps));
    for (std::uint32_t y = 0; y < img.height; ++y) {
        const std::uint16_t* src = img.samples.data() + y * row_samples;
        Bytes& dst = rows[y];
        for (std::size_t i = 0; i < row_samples; ++i) {
            if (bps == 1) {
                dst[i] = static_cast<std::uint8_t>(src[i]);
            } else {
                dst[2 * i] = static_cast<std::uint8_t>(src[i] >> 8);  // PNG is big-endian
                dst[2 * i + 1] = static_cast<std::uint8_t>(src[i]);
            }
        }
    }
    return rows;
}

}  // namespace

Bytes encode_png(const Image& img) {
    img.validate();
    std::vector<Bytes> rows = pack_rows(img);
    std::vector<png_bytep> row_ptrs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) row_ptrs[i] = rows[i].data();
    Bytes out;
    out.reserve(img.sample_count());
    ErrorSlot err;

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
    if (!png) throw CodecError("png: cannot allocate writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw CodecError("png: cannot allocate info");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw CodecError("png: encode failed: " + err.message);
    }
    png_set_write_fn(png, &out, write_fn, flush_fn);
    png_set_IHDR(png, info, img.width, img.height, img.bits_per_sample,
                 img.samples_per_pixel == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_ALL_FILTERS);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Image decode_png(ByteSpan data) {
    if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) throw CodecError("png: bad signature");
    ReadCursor cursor{data, 0};
    ErrorSlot err;
    Image img;
    Bytes row;
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
    if (!png) throw CodecError("png: cannot allocate reader");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw CodecError("png: cannot allocate info");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw CodecError("png: decode failed: " + err.message);
    }
    png_set_read_fn(png, &cursor, read_fn);
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, &interlace, nullptr, nullptr);
    if ((color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) ||
        (bit_depth != 8 && bit_depth != 16) || interlace != PNG_INTERLACE_NONE) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw CodecError("png: only non-interlaced 8/16-bit gray or RGB is supported");
    }
    img.width = width;
    img.height = height;
    img.samples_per_pixel = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    img.bits_per_sample = static_cast<std::uint8_t>(bit_depth);
    img.samples.resize(img.sample_count());
    row.resize(png_get_rowbytes(png, info));
    {
        const std::size_t row_samples = static_cast<std::size_t>(width) * img.samples_per_pixel;
        for (png_uint_32 y = 0; y < height; ++y) {
            png_read_row(png, row.data(), nullptr);
            std::uint16_t* dst = img.samples.data() + y * row_samples;
            for (std::size_t i = 0; i < row_samples; ++i)
                dst[i] = bit_depth == 8 ? row[i] : static_cast<std::uint16_t>(row[2 * i] << 8 | row[2 * i + 1]);
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace avs::media
