#include "priordepth/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace priordepth {

namespace {

constexpr char kMagic[4] = {'P', 'L', 'T', '1'};
constexpr std::uint32_t kMaxDim = 1u << 20;

static_assert(std::endian::native == std::endian::little,
              "PLT1 I/O assumes a little-endian host");

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("tensor io: " + what + " (" + path + ")");
}

} // namespace

Tensor4 tensor_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_fail(path, "cannot open file");

    char magic[4];
    std::uint32_t dims[4];
    if (!in.read(magic, 4) || !in.read(reinterpret_cast<char*>(dims), 16))
        io_fail(path, "truncated header");
    if (std::memcmp(magic, kMagic, 4) != 0) io_fail(path, "bad magic");

    std::uint64_t count = 1;
    for (std::uint32_t d : dims) {
        if (d > kMaxDim) io_fail(path, "dimension overflow");
        count *= d;
    }
    if (count > (1ull << 32)) io_fail(path, "dimension overflow");

    std::vector<float> data(count);
    if (count > 0 &&
        !in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(count * sizeof(float))))
        io_fail(path, "truncated payload");

    return Tensor4(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                   static_cast<int>(dims[2]), static_cast<int>(dims[3]), std::move(data));
}

void tensor_write(const Tensor4& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(path, "cannot open file for writing");

    std::uint32_t dims[4] = {static_cast<std::uint32_t>(t.n()), static_cast<std::uint32_t>(t.c()),
                             static_cast<std::uint32_t>(t.h()), static_cast<std::uint32_t>(t.w())};
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(dims), 16);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!out) io_fail(path, "write failed");
}

void tensor_write_pgm(const Tensor4& t, const std::string& path) {
    if (t.n() < 1 || t.c() < 1 || t.h() < 1 || t.w() < 1)
        io_fail(path, "empty tensor");

    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x) {
            float v = t.at(0, 0, y, x);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const float range = hi - lo;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(path, "cannot open file for writing");
    out << "P5\n" << t.w() << " " << t.h() << "\n255\n";
    for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x) {
            float v = t.at(0, 0, y, x);
            int g = range > 0.0f ? static_cast<int>(255.0f * (v - lo) / range + 0.5f) : 128;
            out.put(static_cast<char>(std::clamp(g, 0, 255)));
        }
    if (!out) io_fail(path, "write failed");
}

} // namespace priordepth
