// Middlebury .flo reader/writer.
//
// Layout: 4-byte float tag 202021.25 ("PIEH"), int32 width, int32 height,
// then row-major interleaved float32 (u, v) pairs, all little-endian.
// Reading promotes float32 to double exactly, so read-then-write round-trips
// are bit-identical; writing an arbitrary double field rounds to float32.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/flow.hpp"

namespace flowtrack {

inline constexpr float kFloTag = 202021.25f;
inline constexpr int kFloMaxDim = 99999;

static_assert(std::endian::native == std::endian::little,
              "flo_io assumes a little-endian host");

inline FlowField read_flo(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());

    float tag = 0.0f;
    std::int32_t width = 0, height = 0;
    in.read(reinterpret_cast<char*>(&tag), sizeof(tag));
    in.read(reinterpret_cast<char*>(&width), sizeof(width));
    in.read(reinterpret_cast<char*>(&height), sizeof(height));
    if (!in) throw ParseError(path.string() + ": truncated header");
    if (tag != kFloTag)
        throw ParseError(path.string() + ": bad magic (not a .flo file?)");
    if (width < 1 || width > kFloMaxDim || height < 1 || height > kFloMaxDim)
        throw ParseError(path.string() + ": implausible dimensions " +
                         std::to_string(width) + "x" + std::to_string(height));

    FlowField f(width, height);
    std::vector<float> row(static_cast<std::size_t>(width) * 2);
    for (int y = 0; y < height; ++y) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in)
            throw ParseError(path.string() + ": file too short at row " +
                             std::to_string(y));
        for (int x = 0; x < width; ++x) {
            f.u_at(x, y) = row[static_cast<std::size_t>(2 * x)];
            f.v_at(x, y) = row[static_cast<std::size_t>(2 * x) + 1];
        }
    }
    if (in.peek() != std::ifstream::traits_type::eof())
        throw ParseError(path.string() + ": trailing bytes after flow data");
    return f;
}

inline void write_flo(const std::filesystem::path& path, const FlowField& f) {
    if (f.width < 1 || f.height < 1 || f.width > kFloMaxDim ||
        f.height > kFloMaxDim)
        throw InvalidConfig("flow field dimensions out of range for .flo");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");

    const float tag = kFloTag;
    const std::int32_t width = f.width;
    const std::int32_t height = f.height;
    out.write(reinterpret_cast<const char*>(&tag), sizeof(tag));
    out.write(reinterpret_cast<const char*>(&width), sizeof(width));
    out.write(reinterpret_cast<const char*>(&height), sizeof(height));

    std::vector<float> row(static_cast<std::size_t>(f.width) * 2);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            row[static_cast<std::size_t>(2 * x)] = static_cast<float>(f.u_at(x, y));
            row[static_cast<std::size_t>(2 * x) + 1] =
                static_cast<float>(f.v_at(x, y));
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw ParseError("write failed for " + path.string());
}

}  // namespace flowtrack
