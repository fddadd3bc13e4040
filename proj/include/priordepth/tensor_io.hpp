#pragma once

#include <string>

#include "priordepth/tensor.hpp"

namespace priordepth {

// PLT1 tensor file: 4-byte magic "PLT1", four u32 little-endian dims
// (n, c, h, w), then n*c*h*w little-endian IEEE-754 f32 values, row-major
// with w fastest. Round-trips are bit-exact, including negative zero.
Tensor4 tensor_read(const std::string& path);
void tensor_write(const Tensor4& t, const std::string& path);

// Binary PGM (P5, maxval 255) of a single (n=0, c=0) slice, min-max
// normalized; constant slices map to mid-gray.
void tensor_write_pgm(const Tensor4& t, const std::string& path);

} // namespace priordepth
