#pragma once

#include "compabs/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace compabs {

struct IntervalBox {
    Vector lower;
    Vector upper;

    IntervalBox() = default;
    IntervalBox(Vector lo, Vector hi);

    static IntervalBox empty_dim() { return IntervalBox(Vector(0), Vector(0)); }
    static IntervalBox uniform(int dim, double lo, double hi);

    int dim() const { return static_cast<int>(lower.size()); }
    Vector width() const { return upper - lower; }
    Vector center() const { return 0.5 * (lower + upper); }
    bool contains(const Vector& x, double tol = 0.0) const;
    bool contains(const IntervalBox& other, double tol = 0.0) const;
};

/// Interval image of the linear map x -> G x over a box (exact for linear maps).
IntervalBox interval_image(const Matrix& G, const IntervalBox& box);

IntervalBox product(const std::vector<IntervalBox>& boxes);

struct GaussianNoise {
    Vector std;
    int dim() const { return static_cast<int>(std.size()); }
};

using ScalarFunction = double (*)(double);

/// Closed registry: "sin", "identity", "zero", "tanh", "atan".
ScalarFunction lookup_nonlinearity(const std::string& name);
std::vector<std::string> registered_nonlinearities();

/// E*phi(F x) with phi slope-restricted to [slope_lo, slope_hi].
struct SlopeRestrictedTerm {
    Matrix E;  // n x 1
    Matrix F;  // 1 x n
    double slope_lo = 0.0;
    double slope_hi = 1.0;
    std::string phi = "zero";

    double eval_phi(double v) const { return lookup_nonlinearity(phi)(v); }
};

/// x+ = A x + B nu + D w + R noise (+ E phi(F x) when `nonlinearity` is set).
struct Subsystem {
    Matrix A, B, D, R;
    IntervalBox state_box, ext_input_box, int_input_box;
    GaussianNoise noise;
    std::optional<SlopeRestrictedTerm> nonlinearity;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(D.cols()); }
    int q() const { return static_cast<int>(R.cols()); }
    bool is_linear() const { return !nonlinearity.has_value(); }
};

struct Network {
    std::vector<Subsystem> subsystems;
    Matrix G;

    int size() const { return static_cast<int>(subsystems.size()); }
    int total_states() const;
    int total_internal() const;
    int total_noise() const;
    std::vector<int> state_offsets() const;
    std::vector<int> internal_offsets() const;
    std::vector<int> noise_offsets() const;
    bool is_linear() const;
};

struct ValidationReport {
    std::vector<std::string> errors;
    bool dimensions_ok = true;
    bool well_posed = false;
    IntervalBox image;   // G * prod X_i
    IntervalBox target;  // prod W_i

    bool valid() const { return dimensions_ok && well_posed && errors.empty(); }
};

/// Collects dimension problems for one subsystem; empty when consistent.
std::vector<std::string> subsystem_errors(const Subsystem& sub, const std::string& label = "subsystem");

ValidationReport validate_network(const Network& net);

Vector eval_dynamics(const Subsystem& sub, const Vector& x, const Vector& nu, const Vector& w,
                     const Vector& noise);

/// Samples pairs on a grid and checks the difference quotient of phi against the slope bounds.
bool slope_restriction_holds(const SlopeRestrictedTerm& term, double tol = 1e-9);

}  // namespace compabs
