#pragma once

#include "attncsf/stimulus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace attncsf {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit grayscale or RGB PNG.
std::vector<std::uint8_t> encode_png(const EncodedFrame& frame);
void write_png(const std::string& path, const EncodedFrame& frame);

/// Reads 8/16-bit gray, gray+alpha, RGB or RGBA; alpha is dropped, 16-bit is reduced to 8.
EncodedFrame read_png(const std::string& path);
EncodedFrame decode_png(const std::vector<std::uint8_t>& bytes);

} // namespace attncsf
