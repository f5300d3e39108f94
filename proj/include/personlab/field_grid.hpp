#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace personlab {

/// 2-D point in image-pixel coordinates.
struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

inline Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
inline Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
inline double norm(Point2D p) { return std::hypot(p.x, p.y); }

/// Dense height x width x channels grid at a fixed output stride.
/// Layout is row-major, channel-minor: index = (i * width + j) * channels + c.
/// Cell (i, j) sits at image position ((j + 0.5) * stride, (i + 0.5) * stride).
template <typename T>
struct Grid {
    int height = 0;
    int width = 0;
    int channels = 0;
    int stride = 1;  // image pixels per cell
    std::vector<T> data;

    Grid() = default;
    Grid(int h, int w, int c, int s, T fill = T{})
        : height(h), width(w), channels(c), stride(s),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t index(int i, int j, int c) const {
        return (static_cast<std::size_t>(i) * width + j) * channels + c;
    }
    T at(int i, int j, int c) const { return data[index(i, j, c)]; }
    T& at(int i, int j, int c) { return data[index(i, j, c)]; }

    bool same_shape(const Grid& o) const {
        return height == o.height && width == o.width && channels == o.channels &&
               stride == o.stride;
    }

    Point2D cell_center(int i, int j) const {
        return {(j + 0.5) * stride, (i + 0.5) * stride};
    }
};

using FieldGrid = Grid<float>;    // container-facing fields, f32
using ScoreGrid = Grid<double>;   // accumulators and score maps, f64

namespace detail {
inline double clampd(double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}
}  // namespace detail

/// Bilinear interpolation of one channel at image position p.
/// Positions outside the grid clamp to the border cell.
template <typename T>
double bilinear_sample(const Grid<T>& g, int channel, Point2D p) {
    if (channel < 0 || channel >= g.channels)
        throw std::invalid_argument("bilinear_sample: channel out of range");
    // image pixels -> continuous cell coordinates, then clamp per axis
    const double cx = detail::clampd(p.x / g.stride - 0.5, 0.0, g.width - 1.0);
    const double cy = detail::clampd(p.y / g.stride - 0.5, 0.0, g.height - 1.0);
    const int j0 = static_cast<int>(cx);
    const int i0 = static_cast<int>(cy);
    const int j1 = std::min(j0 + 1, g.width - 1);
    const int i1 = std::min(i0 + 1, g.height - 1);
    const double dx = cx - j0;
    const double dy = cy - i0;
    const double v00 = g.at(i0, j0, channel);
    const double v01 = g.at(i0, j1, channel);
    const double v10 = g.at(i1, j0, channel);
    const double v11 = g.at(i1, j1, channel);
    return (1.0 - dy) * ((1.0 - dx) * v00 + dx * v01) +
           dy * ((1.0 - dx) * v10 + dx * v11);
}

/// Adjoint of bilinear_sample: deposit weight w at image position p onto the
/// 4 surrounding cells. Targets outside the grid clamp to the border, so no
/// mass is lost or created.
inline void splat_bilinear(ScoreGrid& g, int channel, Point2D p, double w) {
    const double cx = detail::clampd(p.x / g.stride - 0.5, 0.0, g.width - 1.0);
    const double cy = detail::clampd(p.y / g.stride - 0.5, 0.0, g.height - 1.0);
    const int j0 = static_cast<int>(cx);
    const int i0 = static_cast<int>(cy);
    const int j1 = std::min(j0 + 1, g.width - 1);
    const int i1 = std::min(i0 + 1, g.height - 1);
    const double dx = cx - j0;
    const double dy = cy - i0;
    g.at(i0, j0, channel) += w * (1.0 - dy) * (1.0 - dx);
    g.at(i0, j1, channel) += w * (1.0 - dy) * dx;
    g.at(i1, j0, channel) += w * dy * (1.0 - dx);
    g.at(i1, j1, channel) += w * dy * dx;
}

/// Bilinear hat weight that one target cell receives from a vote at image
/// position p, under the same border clamping as splat_bilinear. Used by the
/// gather-form reference accumulator.
inline double splat_weight(const ScoreGrid& g, Point2D p, int cell_i, int cell_j) {
    const double cx = detail::clampd(p.x / g.stride - 0.5, 0.0, g.width - 1.0);
    const double cy = detail::clampd(p.y / g.stride - 0.5, 0.0, g.height - 1.0);
    const double wx = std::max(0.0, 1.0 - std::abs(cx - cell_j));
    const double wy = std::max(0.0, 1.0 - std::abs(cy - cell_i));
    return wx * wy;
}

}  // namespace personlab
