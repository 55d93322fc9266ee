#include "attncsf/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

namespace attncsf {

namespace {

struct WriteState {
    std::vector<std::uint8_t>* out;
};

void write_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* state = static_cast<WriteState*>(png_get_io_ptr(png));
    state->out->insert(state->out->end(), data, data + length);
}

void flush_callback(png_structp) {}

struct ReadState {
    const std::vector<std::uint8_t>* in;
    std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* state = static_cast<ReadState*>(png_get_io_ptr(png));
    if (state->offset + length > state->in->size()) png_error(png, "truncated PNG");
    std::memcpy(data, state->in->data() + state->offset, length);
    state->offset += length;
}

void warning_callback(png_structp, png_const_charp) {}

} // namespace

std::vector<std::uint8_t> encode_png(const EncodedFrame& frame) {
    if (frame.channels != 1 && frame.channels != 3) throw ImageIoError("PNG output needs 1 or 3 channels");
    if (frame.data.size() != static_cast<std::size_t>(frame.width) * frame.height * frame.channels)
        throw ImageIoError("frame buffer size does not match its dimensions");

    std::vector<std::uint8_t> out;
    WriteState state{&out};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, warning_callback);
    if (!png) throw ImageIoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ImageIoError("PNG encoding failed");
    }
    {
        png_set_write_fn(png, &state, write_callback, flush_callback);
        png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width), static_cast<png_uint_32>(frame.height), 8,
                     frame.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        const std::size_t stride = static_cast<std::size_t>(frame.width) * frame.channels;
        for (int y = 0; y < frame.height; ++y)
            png_write_row(png, const_cast<png_bytep>(frame.data.data() + stride * y));
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png(const std::string& path, const EncodedFrame& frame) {
    const auto bytes = encode_png(frame);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

EncodedFrame decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw ImageIoError("not a PNG file");
    ReadState state{&bytes};
    EncodedFrame frame;
    std::vector<png_bytep> rows;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, warning_callback);
    if (!png) throw ImageIoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError("PNG decoding failed");
    }
    {
        png_set_read_fn(png, &state, read_callback);
        png_read_info(png, info);
        const auto color = png_get_color_type(png, info);
        if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        png_read_update_info(png, info);

        frame.width = static_cast<int>(png_get_image_width(png, info));
        frame.height = static_cast<int>(png_get_image_height(png, info));
        frame.channels = static_cast<int>(png_get_channels(png, info));
        if (frame.channels != 1 && frame.channels != 3) png_error(png, "unsupported PNG channel layout");
        const std::size_t stride = png_get_rowbytes(png, info);
        frame.data.resize(stride * frame.height);
        rows.resize(frame.height);
        for (int y = 0; y < frame.height; ++y) rows[y] = frame.data.data() + stride * y;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return frame;
}

EncodedFrame read_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

} // namespace attncsf
