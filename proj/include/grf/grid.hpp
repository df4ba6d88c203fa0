#pragma once

#include <cstdint>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace grf {

/// Dense d-dimensional array of doubles, row-major with the last dimension
/// fastest. Shared layout for field and noise grids.
struct Grid {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Grid() = default;
    explicit Grid(std::vector<std::size_t> extents)
        : shape(std::move(extents)), data(count(shape), 0.0) {}

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t e : shape) {
            if (e == 0) throw std::invalid_argument("grid: zero extent");
            n *= e;
        }
        return n;
    }

    std::size_t dims() const { return shape.size(); }
    std::size_t size() const { return data.size(); }

    std::size_t stride(std::size_t axis) const {
        std::size_t s = 1;
        for (std::size_t j = axis + 1; j < shape.size(); ++j) s *= shape[j];
        return s;
    }

    double& at(const std::vector<std::size_t>& idx) { return data[flat(idx)]; }
    double at(const std::vector<std::size_t>& idx) const { return data[flat(idx)]; }

    std::size_t flat(const std::vector<std::size_t>& idx) const {
        std::size_t f = 0;
        for (std::size_t j = 0; j < shape.size(); ++j) f = f * shape[j] + idx[j];
        return f;
    }

    /// Sub-block of the given extents anchored at `offset`.
    Grid block(const std::vector<std::size_t>& offset,
               const std::vector<std::size_t>& extents) const;
};

/// Field samples plus the metadata needed to reproduce them.
struct FieldGrid {
    Grid grid;
    std::vector<double> T;  // per-dimension sampling distances
    std::uint64_t seed = 0;
    std::uint32_t scale_level = 0;
};

/// Unit-variance white-noise samples; a deterministic function of
/// (seed, shape).
struct NoiseGrid {
    Grid grid;
    std::uint64_t seed = 0;
};

}  // namespace grf
