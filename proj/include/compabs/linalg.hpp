#pragma once

#include <Eigen/Dense>
#include <vector>

namespace compabs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultPsdTol = 1e-9;

struct PsdResult {
    bool ok = false;
    double min_eigenvalue = 0.0;
};

/// Symmetrizes S and tests lambda_min(S) >= -tol. Throws InvalidArgument on NaN/Inf.
PsdResult psd_check(const Matrix& S, double tol = kDefaultPsdTol);

double min_eigenvalue_sym(const Matrix& S);
double max_eigenvalue_sym(const Matrix& S);
double spectral_radius(const Matrix& S);

Matrix block_diagonal(const std::vector<Matrix>& blocks);

bool all_finite(const Matrix& S);

}  // namespace compabs
