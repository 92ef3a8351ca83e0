#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "retina/grid.hpp"

namespace retina {

// Loads one grayscale frame normalized to [0,1]. Supported inputs: 8-bit PGM
// (P5 binary or P2 ASCII), PNG 8/16-bit grayscale, and 8-bit color PNG reduced
// to luminance 0.299 R + 0.587 G + 0.114 B. 8-bit samples are divided by 255,
// 16-bit by 65535.
Grid load_frame(const std::filesystem::path& path);

// Writes a [0,255] grid as an 8-bit grayscale image: PNG when the extension is
// .png (case-insensitive), PGM P5 otherwise. Values are rounded half away from
// zero; re-loading reproduces the quantized bytes exactly.
void save_motion_map(const GridView& map, const std::filesystem::path& path);

// Interleaved 8-bit image buffer, row-major.
struct ImageU8 {
    Eigen::Index height = 0;
    Eigen::Index width = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(Eigen::Index row, Eigen::Index col, int channel) const {
        return pixels[size_t((row * width + col) * channels + channel)];
    }
};

// Full-precision text dump of a grid ("height width" header line, then one row
// of %.17g values per line); parse_grid_text inverts it exactly.
void save_grid_text(const GridView& g, const std::filesystem::path& path);
Grid load_grid_text(const std::filesystem::path& path);

}  // namespace retina
