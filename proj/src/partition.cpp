#include "compabs/partition.hpp"

#include "compabs/error.hpp"

#include <cmath>

namespace compabs {

std::size_t Partition::size() const {
    std::size_t s = 1;
    for (auto c : cells_per_dim) s *= c;
    return s;
}

Vector Partition::widths() const {
    Vector w(dim());
    for (int d = 0; d < dim(); ++d) w[d] = (box.upper[d] - box.lower[d]) / static_cast<double>(cells_per_dim[d]);
    return w;
}

double Partition::delta() const { return widths().norm(); }

double Partition::cell_lower(int d, std::size_t i) const {
    if (i == 0) return box.lower[d];
    return box.lower[d] + (box.upper[d] - box.lower[d]) * static_cast<double>(i) / static_cast<double>(cells_per_dim[d]);
}

double Partition::cell_upper(int d, std::size_t i) const {
    if (i + 1 == cells_per_dim[d]) return box.upper[d];
    return cell_lower(d, i + 1);
}

std::vector<std::size_t> Partition::unflatten(std::size_t index) const {
    std::vector<std::size_t> m(cells_per_dim.size());
    for (int d = dim() - 1; d >= 0; --d) {
        m[d] = index % cells_per_dim[d];
        index /= cells_per_dim[d];
    }
    return m;
}

std::size_t Partition::flatten(const std::vector<std::size_t>& multi) const {
    std::size_t idx = 0;
    for (int d = 0; d < dim(); ++d) idx = idx * cells_per_dim[d] + multi[d];
    return idx;
}

Vector Partition::representative(std::size_t index) const {
    auto m = unflatten(index);
    Vector r(dim());
    for (int d = 0; d < dim(); ++d) r[d] = 0.5 * (cell_lower(d, m[d]) + cell_upper(d, m[d]));
    return r;
}

IntervalBox Partition::cell_box(std::size_t index) const {
    auto m = unflatten(index);
    Vector lo(dim()), hi(dim());
    for (int d = 0; d < dim(); ++d) {
        lo[d] = cell_lower(d, m[d]);
        hi[d] = cell_upper(d, m[d]);
    }
    return IntervalBox(lo, hi);
}

Partition build_partition(const IntervalBox& box, const std::vector<std::size_t>& counts) {
    if (static_cast<int>(counts.size()) != box.dim()) throw DimensionError("build_partition: counts differ from box dimension");
    for (int d = 0; d < box.dim(); ++d) {
        if (counts[d] == 0) throw InvalidArgument("build_partition: cell counts must be positive");
        if (box.upper[d] == box.lower[d] && counts[d] > 1)
            throw InvalidArgument("build_partition: zero-width dimension with more than one cell");
    }
    return Partition{box, counts};
}

namespace {

std::size_t cells_for(double length, double width) {
    if (length == 0.0) return 1;
    double r = length / width;
    // guard against 125.00000000000001-style quotients
    double c = std::ceil(r - 1e-9 * std::max(1.0, r));
    return static_cast<std::size_t>(std::max(1.0, c));
}

}  // namespace

Partition build_partition(const IntervalBox& box, double target_delta) {
    if (!(target_delta > 0.0)) throw InvalidArgument("build_partition: target delta must be positive");
    int spanning = 0;
    for (int d = 0; d < box.dim(); ++d)
        if (box.upper[d] > box.lower[d]) ++spanning;
    double width = spanning ? target_delta / std::sqrt(static_cast<double>(spanning)) : target_delta;
    return build_partition_by_width(box, width);
}

Partition build_partition_by_width(const IntervalBox& box, double width) {
    if (!(width > 0.0)) throw InvalidArgument("build_partition: width must be positive");
    std::vector<std::size_t> counts(box.dim());
    for (int d = 0; d < box.dim(); ++d) counts[d] = cells_for(box.upper[d] - box.lower[d], width);
    return build_partition(box, counts);
}

PiResult pi_map(const Partition& p, const Vector& x) {
    PiResult r;
    if (x.size() != p.dim()) throw DimensionError("pi_map: point dimension differs from partition");
    if (!p.box.contains(x)) return r;
    std::vector<std::size_t> m(p.dim());
    for (int d = 0; d < p.dim(); ++d) {
        const double len = p.box.upper[d] - p.box.lower[d];
        const auto n = p.cells_per_dim[d];
        if (len == 0.0) {
            m[d] = 0;
            continue;
        }
        double t = (x[d] - p.box.lower[d]) / len * static_cast<double>(n);
        double near = std::round(t);
        long idx;
        if (std::abs(t - near) <= 1e-9 * std::max(1.0, std::abs(t)))
            idx = static_cast<long>(near) - 1;  // on a boundary: lower cell
        else
            idx = static_cast<long>(std::floor(t));
        idx = std::clamp<long>(idx, 0, static_cast<long>(n) - 1);
        m[d] = static_cast<std::size_t>(idx);
    }
    r.index = p.flatten(m);
    r.representative = p.representative(r.index);
    return r;
}

Vector quantize_lattice(const Partition& p, const Vector& x) {
    if (x.size() != p.dim()) throw DimensionError("quantize_lattice: point dimension differs from partition");
    auto in = pi_map(p, x);
    if (in.in_box()) return in.representative;
    Vector w = p.widths();
    Vector out(p.dim());
    for (int d = 0; d < p.dim(); ++d) {
        if (w[d] == 0.0) {
            out[d] = p.box.lower[d];
            continue;
        }
        double t = (x[d] - p.box.lower[d]) / w[d];
        out[d] = p.box.lower[d] + (std::floor(t) + 0.5) * w[d];
    }
    return out;
}

}  // namespace compabs
