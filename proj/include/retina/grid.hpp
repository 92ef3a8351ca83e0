#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>

#include "retina/error.hpp"

namespace retina {

// Dense pixel grid, row-major with (row, col) indexing and the origin at the
// top-left, matching raster order of the on-disk formats. The toolkit runs all
// internal arithmetic in double precision; quantization to 8 bits happens only
// at output.
template <typename Scalar>
using GridT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Grid = GridT<double>;

// Read-only grid view; accepts blocks and maps without copying.
using GridView = Eigen::Ref<const Grid>;

namespace grid_limits {
// Guard against nonsense dimensions long before the allocator does.
inline constexpr Eigen::Index max_side = 1 << 20;
inline constexpr Eigen::Index max_cells = Eigen::Index(1) << 31;
}  // namespace grid_limits

inline void check_dims(Eigen::Index height, Eigen::Index width) {
    if (height < 1 || width < 1)
        fail(ErrorCode::dimension, "grid dimensions must be positive, got " +
                                       std::to_string(height) + "x" + std::to_string(width));
    if (height > grid_limits::max_side || width > grid_limits::max_side ||
        height * width > grid_limits::max_cells)
        fail(ErrorCode::dimension, "grid dimensions overflow supported size: " +
                                       std::to_string(height) + "x" + std::to_string(width));
}

inline Grid grid_new(Eigen::Index height, Eigen::Index width, double fill) {
    check_dims(height, width);
    if (!std::isfinite(fill))
        fail(ErrorCode::parameter, "grid fill value must be finite");
    return Grid::Constant(height, width, fill);
}

inline bool grid_finite(const GridView& g) noexcept { return g.allFinite(); }

inline bool same_dims(const GridView& a, const GridView& b) noexcept {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

// Output quantization: round half away from zero, clamp to [0, 255]. Fixed so
// that independent implementations reproduce motion-map bytes exactly.
inline std::uint8_t quantize_byte(double v) noexcept {
    long q = std::lround(v);
    if (q < 0) q = 0;
    if (q > 255) q = 255;
    return static_cast<std::uint8_t>(q);
}

}  // namespace retina
