#pragma once

#include <vector>

#include "drymask/common.hpp"

namespace drymask {

// Dense rows x cols matrix, row-major. Used for magnitudes, phases and masks
// (frequency rows, time-frame columns).
template <class T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Grid() = default;
    Grid(int r, int c, T fill = T{}) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Grid: negative dimension");
    }

    T& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }

    T max_abs() const { return peak_abs(v); }
};

template <class T>
void require_same_shape(const Grid<T>& a, const Grid<T>& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace drymask
