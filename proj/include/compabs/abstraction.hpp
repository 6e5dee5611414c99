#pragma once

#include "compabs/msample.hpp"
#include "compabs/partition.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace compabs {

/// mean(x, nu, w) = A x + E phi(F x) + B nu + D w, additive Gaussian noise with `covariance`.
struct KernelModel {
    Matrix A, B, D;
    std::optional<SlopeRestrictedTerm> nonlinearity;
    Matrix covariance;

    Vector mean(const Vector& x, const Vector& nu, const Vector& w) const;
};

KernelModel kernel_model(const AuxiliarySubsystem& aux);
KernelModel kernel_model(const Subsystem& sub);

struct MdpProvenance {
    std::uint64_t source_hash = 0;
    double delta = 0.0, beta = 0.0, theta = 0.0;
    std::uint32_t steps = 1;
    Vector sigma;
};

/// Rows are (state, ext input, int input) with the int input fastest; the last column is the sink.
struct FiniteMDP {
    Partition states, ext_inputs, int_inputs;
    std::vector<double> T;
    MdpProvenance provenance;

    std::size_t n_x() const { return states.size(); }
    std::size_t n_nu() const { return ext_inputs.size(); }
    std::size_t n_w() const { return int_inputs.size(); }
    std::size_t cols() const { return n_x() + 1; }
    std::size_t rows() const { return n_x() * n_nu() * n_w(); }
    std::size_t sink_index() const { return n_x(); }
    std::size_t row_index(std::size_t x, std::size_t nu, std::size_t w) const { return (x * n_nu() + nu) * n_w() + w; }
    const double* row(std::size_t x, std::size_t nu, std::size_t w) const { return T.data() + row_index(x, nu, w) * cols(); }
    double prob(std::size_t x, std::size_t nu, std::size_t w, std::size_t next) const { return row(x, nu, w)[next]; }
};

inline constexpr std::uint64_t kDefaultBudgetBytes = 4'000'000'000ULL;

struct BuildOptions {
    unsigned threads = 1;
    std::uint64_t budget_bytes = kDefaultBudgetBytes;
    double quadrature_rel_tol = 1e-6;
};

struct MemoryEstimate {
    long double bytes = 0;
    double gigabytes = 0.0;
    bool exact = true;  // false when the product overflowed 128-bit integers
};

/// Per subsystem: n_x * n_w * n_nu * n_x * bytes_per_entry.
MemoryEstimate memory_estimate(std::uint64_t n_x, std::uint64_t n_nu, std::uint64_t n_w,
                               std::uint64_t bytes_per_entry = 8);
/// Monolithic: (prod n_x) * (prod n_nu) * (prod n_x) * bytes_per_entry.
MemoryEstimate monolithic_memory_estimate(const std::vector<std::uint64_t>& n_x, const std::vector<std::uint64_t>& n_nu,
                                          std::uint64_t bytes_per_entry = 8);

/// Fills one row of probabilities (n_x cells followed by the sink).
class RowKernel {
public:
    RowKernel(const KernelModel& model, const Partition& states, double rel_tol = 1e-6);
    void fill(const Vector& mean, double* out) const;
    bool diagonal() const { return diagonal_; }

private:
    const Partition& states_;
    bool diagonal_ = true;
    Vector std_;
    Matrix chol_;
    double rel_tol_;
};

FiniteMDP build_mdp(const KernelModel& model, const Partition& X, const Partition& U, const Partition& W,
                    const BuildOptions& opts = {}, MdpProvenance prov = {});

struct StreamStats {
    std::uint64_t rows = 0;
    std::uint64_t bytes = 0;
    double max_row_error = 0.0;
};

/// Same bytes as save_mdp(build_mdp(...)) without holding the tensor in memory.
StreamStats build_mdp_to_file(const KernelModel& model, const Partition& X, const Partition& U, const Partition& W,
                              const std::string& path, const BuildOptions& opts = {}, MdpProvenance prov = {});

/// Probability that N(mean, L L^T) lands in [lo, hi] (L lower triangular), nested adaptive quadrature.
double gaussian_box_probability(const Vector& mean, const Matrix& L, const Vector& lo, const Vector& hi,
                                double rel_tol = 1e-6);

double normal_cdf(double z);
/// Phi(b) - Phi(a) without cancellation in the tails.
double normal_interval(double a, double b);

}  // namespace compabs
