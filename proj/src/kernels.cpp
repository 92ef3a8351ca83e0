#include "retina/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace retina {

namespace {

inline Eigen::Index clamp_index(Eigen::Index i, Eigen::Index n) {
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

}  // namespace

Kernel gaussian_kernel(int size, double sigma) {
    if (size < 1 || size % 2 == 0)
        fail(ErrorCode::parameter, "gaussian kernel size must be odd and positive, got " +
                                       std::to_string(size));
    if (!(sigma > 0.0)) fail(ErrorCode::parameter, "gaussian sigma must be > 0");
    const int r = size / 2;
    Grid w(size, size);
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x)
            w(y + r, x + r) = std::exp(-double(x * x + y * y) / (2.0 * sigma * sigma));
    double sum = 0.0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) sum += w(i, j);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) w(i, j) /= sum;
    return Kernel{std::move(w), Kernel::Norm::sum_one};
}

Grid mexican_hat_raw(int size_param, double sigma1, double sigma2, double w_surr) {
    if (size_param < 1)
        fail(ErrorCode::parameter, "mexican-hat size parameter must be >= 1, got " +
                                       std::to_string(size_param));
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
        fail(ErrorCode::parameter, "mexican-hat sigmas must be > 0");
    const int r = (size_param + 1) / 2;  // even p -> offsets in [-p/2, p/2]
    const int size = 2 * r + 1;
    Grid w(size, size);
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double r2 = double(x * x + y * y);
            w(y + r, x + r) = std::exp(-r2 / (2.0 * sigma1 * sigma1)) -
                              w_surr * std::exp(-r2 / (2.0 * sigma2 * sigma2));
        }
    return w;
}

Kernel mexican_hat_kernel(int size_param, double sigma1, double sigma2, double w_surr) {
    Grid w = mexican_hat_raw(size_param, sigma1, sigma2, w_surr);
    const int size = static_cast<int>(w.rows());
    double l1 = 0.0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) l1 += std::fabs(w(i, j));
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) w(i, j) /= l1;
    return Kernel{std::move(w), Kernel::Norm::l1_one};
}

Grid convolve(const GridView& input, const Kernel& kernel) {
    const Eigen::Index h = input.rows();
    const Eigen::Index w = input.cols();
    check_dims(h, w);
    const int k = kernel.size();
    const int r = kernel.radius();
    Grid out(h, w);

    auto compute_clamped = [&](Eigen::Index row, Eigen::Index col) {
        double acc = 0.0;
        for (int ky = 0; ky < k; ++ky) {
            const Eigen::Index iy = clamp_index(row + ky - r, h);
            for (int kx = 0; kx < k; ++kx)
                acc += kernel.weights(ky, kx) * input(iy, clamp_index(col + kx - r, w));
        }
        out(row, col) = acc;
    };

    const bool has_interior = h > 2 * Eigen::Index(r) && w > 2 * Eigen::Index(r);
    if (!has_interior) {
        for (Eigen::Index row = 0; row < h; ++row)
            for (Eigen::Index col = 0; col < w; ++col) compute_clamped(row, col);
        return out;
    }

    const double* in_data = input.data();
    // Interior rows: one pass per kernel weight over contiguous column spans.
    // Each output pixel accumulates the weights in the same row-major kernel
    // order as the clamped loop, so both paths agree bitwise.
    const Eigen::Index count = w - 2 * r;
    for (Eigen::Index row = r; row < h - r; ++row) {
        double* __restrict out_row = out.data() + row * w + r;
        std::fill(out_row, out_row + count, 0.0);
        for (int ky = 0; ky < k; ++ky) {
            const double* in_row = in_data + (row + ky - r) * w;
            for (int kx = 0; kx < k; ++kx) {
                const double wgt = kernel.weights(ky, kx);
                const double* __restrict src = in_row + kx;
                for (Eigen::Index j = 0; j < count; ++j) out_row[j] += wgt * src[j];
            }
        }
        for (Eigen::Index col = 0; col < r; ++col) compute_clamped(row, col);
        for (Eigen::Index col = w - r; col < w; ++col) compute_clamped(row, col);
    }
    for (Eigen::Index row = 0; row < r; ++row)
        for (Eigen::Index col = 0; col < w; ++col) compute_clamped(row, col);
    for (Eigen::Index row = h - r; row < h; ++row)
        for (Eigen::Index col = 0; col < w; ++col) compute_clamped(row, col);
    return out;
}

Grid sobel_gradient_magnitude(const GridView& input) {
    const Eigen::Index h = input.rows();
    const Eigen::Index w = input.cols();
    check_dims(h, w);
    // Standard unscaled Sobel responses in difference-of-weighted-sums form:
    // both halves of each difference accumulate identically, so constant
    // inputs cancel to exactly zero.
    Grid out(h, w);
    for (Eigen::Index row = 0; row < h; ++row) {
        const Eigen::Index up = clamp_index(row - 1, h);
        const Eigen::Index down = clamp_index(row + 1, h);
        for (Eigen::Index col = 0; col < w; ++col) {
            const Eigen::Index left = clamp_index(col - 1, w);
            const Eigen::Index right = clamp_index(col + 1, w);
            const double gx = (input(up, right) + 2.0 * input(row, right) + input(down, right)) -
                              (input(up, left) + 2.0 * input(row, left) + input(down, left));
            const double gy = (input(down, left) + 2.0 * input(down, col) + input(down, right)) -
                              (input(up, left) + 2.0 * input(up, col) + input(up, right));
            out(row, col) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

Grid bilateral_filter(const GridView& input, int d, double sigma_color, double sigma_space) {
    if (d < 1 || d % 2 == 0)
        fail(ErrorCode::parameter, "bilateral diameter must be odd and positive, got " +
                                       std::to_string(d));
    if (!(sigma_color > 0.0) || !(sigma_space > 0.0))
        fail(ErrorCode::parameter, "bilateral sigmas must be > 0");
    const Eigen::Index h = input.rows();
    const Eigen::Index w = input.cols();
    check_dims(h, w);
    const int r = d / 2;
    // Canonical weight form: exp(-squared_distance * inv) with inv = 1/(2 sigma^2)
    // precomputed once for each of the two terms.
    const double inv2c = 1.0 / (2.0 * sigma_color * sigma_color);
    const double inv2s = 1.0 / (2.0 * sigma_space * sigma_space);

    // Spatial weights per window offset, row-major.
    std::vector<double> spatial(size_t(d) * d);
    for (int dy = -r, j = 0; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx, ++j)
            spatial[j] = std::exp(-double(dx * dx + dy * dy) * inv2s);

    Grid out(h, w);

    // exp(-0 * inv2c) is exactly 1, so equal neighbors skip the call.
    auto color_weight = [&](double a, double b) {
        const double diff = a - b;
        return diff == 0.0 ? 1.0 : std::exp(-(diff * diff) * inv2c);
    };

    auto compute_direct = [&](Eigen::Index row, Eigen::Index col) {
        const double center = input(row, col);
        double num = 0.0, den = 0.0;
        int j = 0;
        for (int dy = -r; dy <= r; ++dy) {
            const Eigen::Index iy = clamp_index(row + dy, h);
            for (int dx = -r; dx <= r; ++dx, ++j) {
                const double v = input(iy, clamp_index(col + dx, w));
                const double wgt = (dy == 0 && dx == 0) ? spatial[j]
                                                        : spatial[j] * color_weight(v, center);
                num += wgt * v;
                den += wgt;
            }
        }
        out(row, col) = num / den;
    };

    const bool small = h <= 2 * Eigen::Index(r) || w <= 2 * Eigen::Index(r);
    if (small) {
        for (Eigen::Index row = 0; row < h; ++row)
            for (Eigen::Index col = 0; col < w; ++col) compute_direct(row, col);
        return out;
    }

    // The color weight is symmetric in the pixel pair, so each unordered offset
    // pair needs one exp, not two: per offset class with (dy > 0) or
    // (dy == 0 && dx > 0) a row of weights is computed once and the mirrored
    // offset reads it at a shifted index. Values are bitwise identical to
    // direct evaluation (exp is a pure function); only the call count changes.
    // Output row `row` touches plane rows row-r .. row, so a ring of r+1 rows
    // per class keeps the working set cache-resident.
    struct OffsetClass {
        int dy, dx;
    };
    std::vector<OffsetClass> classes;
    for (int dy = 0; dy <= r; ++dy)
        for (int dx = (dy == 0 ? 1 : -r); dx <= r; ++dx) classes.push_back({dy, dx});

    const Eigen::Index ring_rows = r + 1;
    const size_t ring_stride = size_t(ring_rows) * size_t(w);
    // Scratch persists across calls so stepping a sequence does not re-fault
    // fresh pages every frame.
    thread_local std::vector<double> ring;
    ring.resize(classes.size() * ring_stride);
    const double* in_data = input.data();  // row-major contiguous

    auto plane_row = [&](size_t cls, Eigen::Index row) {
        return ring.data() + cls * ring_stride + size_t(row % ring_rows) * size_t(w);
    };
    auto compute_plane_row = [&](Eigen::Index row) {
        for (size_t c = 0; c < classes.size(); ++c) {
            const auto [dy, dx] = classes[c];
            const Eigen::Index qrow = clamp_index(row + dy, h);
            const double* src = in_data + row * w;
            const double* qsrc = in_data + qrow * w;
            double* dst = plane_row(c, row);
            const Eigen::Index lo = dx < 0 ? -Eigen::Index(dx) : 0;
            const Eigen::Index hi = dx > 0 ? w - dx : w;
            for (Eigen::Index col = 0; col < lo; ++col)
                dst[col] = color_weight(qsrc[clamp_index(col + dx, w)], src[col]);
            for (Eigen::Index col = lo; col < hi; ++col)
                dst[col] = color_weight(qsrc[col + dx], src[col]);
            for (Eigen::Index col = hi; col < w; ++col)
                dst[col] = color_weight(qsrc[clamp_index(col + dx, w)], src[col]);
        }
    };

    // Window-order lookup: which class row (relative to the output row) and
    // column shift serves each offset. Positive-class offsets read their own
    // pixel; mirrored offsets read the shifted entry of the mirror class.
    struct Lookup {
        int cls = -1;   // -1 marks the center offset
        int row_off = 0;
        int col_off = 0;
        double spatial = 0.0;
    };
    std::vector<Lookup> lut(size_t(d) * d);
    {
        int j = 0;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx, ++j) {
                Lookup& e = lut[size_t(j)];
                e.spatial = spatial[size_t(j)];
                if (dy == 0 && dx == 0) continue;
                const bool positive = dy > 0 || (dy == 0 && dx > 0);
                const int cy = positive ? dy : -dy;
                const int cx = positive ? dx : -dx;
                for (size_t cls = 0; cls < classes.size(); ++cls)
                    if (classes[cls].dy == cy && classes[cls].dx == cx) {
                        e.cls = int(cls);
                        break;
                    }
                e.row_off = positive ? 0 : dy;
                e.col_off = positive ? 0 : dx;
            }
    }

    // Interior rows: per-offset passes over contiguous column spans into
    // row-local accumulators. Each output pixel still sums its 25 window terms
    // in row-major offset order, matching compute_direct bitwise.
    const Eigen::Index count = w - 2 * r;
    thread_local std::vector<double> num_row_v, den_row_v;
    num_row_v.resize(size_t(count));
    den_row_v.resize(size_t(count));
    double* __restrict num_row = num_row_v.data();
    double* __restrict den_row = den_row_v.data();

    Eigen::Index next_plane = 0;
    for (Eigen::Index row = 0; row < h; ++row) {
        const bool row_interior = row >= r && row < h - r;
        if (!row_interior) {
            for (Eigen::Index col = 0; col < w; ++col) compute_direct(row, col);
            continue;
        }
        while (next_plane <= row) compute_plane_row(next_plane++);
        for (Eigen::Index col = 0; col < r; ++col) compute_direct(row, col);
        std::fill(num_row, num_row + count, 0.0);
        std::fill(den_row, den_row + count, 0.0);
        int j = 0;
        for (int dy = -r; dy <= r; ++dy) {
            const double* vsrc = in_data + (row + dy) * w + r;
            for (int dx = -r; dx <= r; ++dx, ++j) {
                const Lookup& e = lut[size_t(j)];
                const double* __restrict v = vsrc + dx;
                if (e.cls < 0) {
                    const double s = e.spatial;
                    for (Eigen::Index i = 0; i < count; ++i) {
                        num_row[i] += s * v[i];
                        den_row[i] += s;
                    }
                } else {
                    const double s = e.spatial;
                    const double* __restrict plane =
                        plane_row(size_t(e.cls), row + e.row_off) + r + e.col_off;
                    for (Eigen::Index i = 0; i < count; ++i) {
                        const double wgt = s * plane[i];
                        num_row[i] += wgt * v[i];
                        den_row[i] += wgt;
                    }
                }
            }
        }
        double* out_row = out.data() + row * w + r;
        for (Eigen::Index i = 0; i < count; ++i) out_row[i] = num_row[i] / den_row[i];
        for (Eigen::Index col = w - r; col < w; ++col) compute_direct(row, col);
    }
    return out;
}

}  // namespace retina
