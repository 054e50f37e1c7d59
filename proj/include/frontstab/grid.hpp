#pragma once

#include <cstddef>
#include <stdexcept>

namespace frontstab {

/// Tensor grid: nx nodes on [x_min, x_max] including the Dirichlet boundary
/// nodes, ny periodic nodes y_j = -period/2 + j*hy. ny = 1 is the planar case.
/// Field storage order is (field, x, y) with y fastest. x_order selects the
/// accuracy of the centred x-differences (2 or 4); y-differences are second order.
struct FieldGrid {
    double x_min = -150.0;
    double x_max = 150.0;
    int nx = 301;
    double period = 120.0;
    int ny = 240;
    int x_order = 2;

    void validate() const {
        if (!(x_max > x_min) || nx < 4) throw std::invalid_argument("FieldGrid: bad x range or nx < 4");
        if (ny < 1 || !(period > 0.0)) throw std::invalid_argument("FieldGrid: bad transverse grid");
        if (x_order != 2 && x_order != 4) throw std::invalid_argument("FieldGrid: x_order must be 2 or 4");
    }

    [[nodiscard]] double hx() const { return (x_max - x_min) / (nx - 1); }
    [[nodiscard]] double hy() const { return period / ny; }
    [[nodiscard]] double x(int i) const { return x_min + i * hx(); }
    [[nodiscard]] double y(int j) const { return -0.5 * period + j * hy(); }
    [[nodiscard]] std::size_t nodes() const { return static_cast<std::size_t>(nx) * ny; }
    [[nodiscard]] std::size_t index(int f, int i, int j) const {
        return (static_cast<std::size_t>(f) * nx + i) * ny + j;
    }
    [[nodiscard]] int wrap_y(int j) const { return ((j % ny) + ny) % ny; }

    friend bool operator==(const FieldGrid&, const FieldGrid&) = default;
};

}  // namespace frontstab
