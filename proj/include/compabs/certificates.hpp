#pragma once

#include "compabs/msample.hpp"

#include <optional>
#include <string>
#include <vector>

namespace compabs {

enum class CertificateKind { LinearMStep, NonlinearClassic };

const char* to_string(CertificateKind k);
CertificateKind certificate_kind_from_string(const std::string& s);

/**
 * Quadratic storage function V(x, x^) = (x - x^)^T M (x - x^) with interface nu = K(x - x^) + nu^.
 * The first group of fields is the candidate; psi, alpha_coeff, kappa_coeff are filled by the checks.
 */
struct StorageCertificate {
    CertificateKind kind = CertificateKind::LinearMStep;
    Matrix M;  // M~
    Matrix K;  // empty means zero gain
    double kappa_hat = 0.5;
    double pi = 1.0;
    Matrix X11, X12, X21, X22;  // X21 empty means X12^T
    double delta = 0.0;
    std::optional<double> reported_kappa;  // optional smaller kappa coefficient

    double psi = 0.0;
    double psi_multiplier = 0.0;  // psi = psi_multiplier * lambda_max(M) * delta^2
    double alpha_coeff = 0.0;     // lambda_min(M)
    double kappa_coeff = 0.0;     // 1 - kappa_hat unless reported_kappa is given
    double rho_ext = 0.0;
    bool verified = false;

    Matrix x21() const { return X21.size() ? X21 : Matrix(X12.transpose()); }
};

struct CertificateReport {
    bool feasible = false;
    double min_eigenvalue = 0.0;
    Matrix lhs, rhs, residual;  // residual = rhs - lhs
    std::vector<std::string> issues;
    StorageCertificate certificate;  // candidate with derived fields filled
};

CertificateReport check_linear_fstf(const AuxiliarySubsystem& aux, const StorageCertificate& cand,
                                    double tol = kDefaultPsdTol);

/// Slope-restricted check with blocks ordered (x - x^, w - w^, delta_bar F (x - x^)).
CertificateReport check_nonlinear_stf(const Subsystem& sub, const StorageCertificate& cand,
                                      double tol = kDefaultPsdTol);
CertificateReport check_nonlinear_stf(const AuxiliarySubsystem& sub, const StorageCertificate& cand,
                                      double tol = kDefaultPsdTol);

Vector interface_apply(const StorageCertificate& cert, const Vector& x, const Vector& xhat, const Vector& nuhat);

double psi_for(const StorageCertificate& cert, double delta);

struct GridRanges {
    std::vector<double> kappa_hat;
    std::vector<double> pi;
    std::vector<double> k_scale;  // K = scale * base.K (base.K empty => zero gain)
};

/// Best feasible candidate by residual min-eigenvalue; first in (kappa_hat, pi, k_scale) order wins ties.
std::optional<StorageCertificate> grid_search_params(const AuxiliarySubsystem& aux, const StorageCertificate& base,
                                                     const GridRanges& ranges, double tol = kDefaultPsdTol);
std::optional<StorageCertificate> grid_search_params(const Subsystem& sub, const StorageCertificate& base,
                                                     const GridRanges& ranges, double tol = kDefaultPsdTol);

}  // namespace compabs
