#pragma once

#include "compabs/model.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace compabs {

inline constexpr std::size_t kSink = std::numeric_limits<std::size_t>::max();

/// Uniform grid over a box; cells are flattened row-major (last dimension fastest).
struct Partition {
    IntervalBox box;
    std::vector<std::size_t> cells_per_dim;

    int dim() const { return box.dim(); }
    std::size_t size() const;
    Vector widths() const;
    double delta() const;  // Euclidean diagonal of one cell
    double cell_lower(int d, std::size_t i) const;
    double cell_upper(int d, std::size_t i) const;
    Vector representative(std::size_t index) const;
    IntervalBox cell_box(std::size_t index) const;
    std::vector<std::size_t> unflatten(std::size_t index) const;
    std::size_t flatten(const std::vector<std::size_t>& multi) const;
};

Partition build_partition(const IntervalBox& box, const std::vector<std::size_t>& counts);
/// Smallest uniform grid whose cell diagonal does not exceed target_delta.
Partition build_partition(const IntervalBox& box, double target_delta);
/// Per-dimension cell width at most `width`.
Partition build_partition_by_width(const IntervalBox& box, double width);

struct PiResult {
    std::size_t index = kSink;
    Vector representative;
    bool in_box() const { return index != kSink; }
};

/// Cell containing x; boundary points go to the lower-index cell, points outside the box to kSink.
PiResult pi_map(const Partition& p, const Vector& x);

/// Nearest point of the grid lattice extended beyond the box, so |Pi(x) - x| <= delta/2 everywhere.
Vector quantize_lattice(const Partition& p, const Vector& x);

}  // namespace compabs
