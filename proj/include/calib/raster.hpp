#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace calib {

/// Walk the 1-px Bresenham stroke between two continuous pixel positions,
/// invoking fn(ix, iy) for every in-bounds pixel exactly once. Pixel i
/// covers [i, i+1), so integer coordinates name the pixel they start.
template <typename Fn>
inline void for_each_stroke_pixel(double x0, double y0, double x1, double y1,
                                  int width, int height, Fn&& fn) {
    int ix0 = static_cast<int>(std::floor(x0));
    int iy0 = static_cast<int>(std::floor(y0));
    int ix1 = static_cast<int>(std::floor(x1));
    int iy1 = static_cast<int>(std::floor(y1));
    const int dx = std::abs(ix1 - ix0), sx = ix0 < ix1 ? 1 : -1;
    const int dy = -std::abs(iy1 - iy0), sy = iy0 < iy1 ? 1 : -1;
    int err = dx + dy;
    int x = ix0, y = iy0;
    while (true) {
        if (x >= 0 && x < width && y >= 0 && y < height) fn(x, y);
        if (x == ix1 && y == iy1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

} // namespace calib
