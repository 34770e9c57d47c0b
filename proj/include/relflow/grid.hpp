#pragma once

// Uniform periodic grids in one or two dimensions and fourth-order central
// difference operators on them. Cell (i, j) sits at (i h, j h); storage is
// row-major with x fastest.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relflow/errors.hpp"
#include "relflow/parallel.hpp"
#include "relflow/spacetime.hpp"

namespace relflow {

using ScalarField = std::vector<double>;
using VectorField = std::vector<Vec3>;

struct Grid {
    int dim = 1;
    std::size_t n = 64;
    double L = 1.0;

    Grid() = default;
    Grid(int dim_, std::size_t n_, double L_) : dim(dim_), n(n_), L(L_) { validate(); }

    void validate() const {
        if (dim != 1 && dim != 2) throw DomainError("grid: dim must be 1 or 2");
        if (n < 8) throw DomainError("grid: n must be >= 8");
        if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("grid: L must be > 0");
    }

    double h() const { return L / static_cast<double>(n); }
    std::size_t cells() const { return dim == 1 ? n : n * n; }
    double cell_volume() const { return dim == 1 ? h() : h() * h(); }

    std::size_t index(std::size_t i, std::size_t j = 0) const { return j * n + i; }
    std::size_t ix(std::size_t cell) const { return cell % n; }
    std::size_t jy(std::size_t cell) const { return cell / n; }

    Vec3 position(std::size_t cell) const {
        return {static_cast<double>(ix(cell)) * h(), dim == 2 ? static_cast<double>(jy(cell)) * h() : 0.0, 0.0};
    }

    /// Neighbour offset by `shift` cells along `axis`, wrapping periodically.
    std::size_t neighbor(std::size_t cell, int axis, long shift) const {
        const long nn = static_cast<long>(n);
        if (axis == 0) {
            const long i = (static_cast<long>(ix(cell)) + shift % nn + nn) % nn;
            return index(static_cast<std::size_t>(i), jy(cell));
        }
        const long j = (static_cast<long>(jy(cell)) + shift % nn + nn) % nn;
        return index(ix(cell), static_cast<std::size_t>(j));
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Fourth-order central first derivative along one axis at one cell.
inline double ddx(const Grid& g, std::span<const double> f, std::size_t cell, int axis) {
    const double fm2 = f[g.neighbor(cell, axis, -2)];
    const double fm1 = f[g.neighbor(cell, axis, -1)];
    const double fp1 = f[g.neighbor(cell, axis, 1)];
    const double fp2 = f[g.neighbor(cell, axis, 2)];
    // Differences first: exactly zero on constant data.
    return (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * g.h());
}

/// In-plane gradient at one cell (components beyond the grid dimension are 0).
inline Vec3 grad_at(const Grid& g, std::span<const double> f, std::size_t cell) {
    Vec3 out;
    for (int a = 0; a < g.dim; ++a) out[static_cast<std::size_t>(a)] = ddx(g, f, cell, a);
    return out;
}

inline VectorField gradient(const Grid& g, std::span<const double> f) {
    VectorField out(g.cells());
    parallel_for(g.cells(), [&](std::size_t c) { out[c] = grad_at(g, f, c); });
    return out;
}

/// Fourth-order divergence of a flux field; sums to zero over a periodic grid.
inline ScalarField divergence(const Grid& g, std::span<const Vec3> flux) {
    ScalarField out(g.cells(), 0.0);
    std::vector<double> comp(g.cells());
    for (int a = 0; a < g.dim; ++a) {
        for (std::size_t c = 0; c < g.cells(); ++c) comp[c] = flux[c][static_cast<std::size_t>(a)];
        parallel_for(g.cells(), [&](std::size_t c) { out[c] += ddx(g, comp, c, a); });
    }
    return out;
}

/// sum f h^d
inline double integrate(const Grid& g, std::span<const double> f) {
    double s = 0.0;
    for (double v : f) s += v;
    return s * g.cell_volume();
}

template <class Fn>
ScalarField sample(const Grid& g, Fn&& fn) {
    ScalarField out(g.cells());
    for (std::size_t c = 0; c < g.cells(); ++c) out[c] = fn(g.position(c));
    return out;
}

} // namespace relflow
