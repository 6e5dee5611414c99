#pragma once

#include "compabs/certificates.hpp"

#include <optional>
#include <vector>

namespace compabs {

struct CompositionCertificate {
    Vector mu;
    double mu_bar = 0.0;
    Matrix Xcmp;
    bool lmi_ok = false;
    bool mu_cond_ok = false;
    bool coupling_match_ok = false;
    double lmi_max_eigenvalue = 0.0;

    double alpha_coeff = 0.0;  // proof construction: alpha(s) = alpha_coeff * s^2
    std::optional<double> alpha_override;
    double kappa_hat = 0.0;    // kappa(r) >= kappa_hat * r

    double psi_subsystems = 0.0;  // sum mu_i psi_i
    double c_delta = 0.0;         // coefficient of a common delta^2 in sum mu_i psi_i
    double lambda_max_P = 0.0;
    double lambda_max_xcmp = 0.0;
    double rho_xcmp = 0.0;
    bool rho_term_included = false;
    double c_beta = 0.0;          // coefficient of ||beta||^2
    Vector beta;
    double psi_candidate = 0.0;   // computed whether or not the flags pass
    std::optional<double> psi;    // set only when all flags pass

    bool certified() const { return lmi_ok && mu_cond_ok && coupling_match_ok && psi.has_value(); }
    double alpha_scale() const { return alpha_override ? *alpha_override : alpha_coeff; }
    double alpha(double s) const { return alpha_scale() * s * s; }
};

struct LmiResult {
    bool ok = false;
    double max_eigenvalue = 0.0;
};

Matrix assemble_xcmp(const std::vector<StorageCertificate>& certs, const Vector& mu);

/// S = [Ga; I]^T Xcmp [Ga; I] (symmetrized), ok iff lambda_max(S) <= tol.
LmiResult check_lmi(const Matrix& Ga, const Matrix& Xcmp, double tol = kDefaultPsdTol);

bool check_mu_condition(const std::vector<StorageCertificate>& certs, const Vector& mu, double mu_bar);

CompositionCertificate compose_fsf(const std::vector<StorageCertificate>& certs, const Vector& mu, double mu_bar,
                                   const Vector& beta, const Matrix& Ga, const Matrix& Ga_hat,
                                   double tol = kDefaultPsdTol, std::optional<double> alpha_override = {});

struct BoundResult {
    double probability = 0.0;  // clamped to [0,1]
    double unclamped = 0.0;
    int branch = 0;            // 1: alpha(eps) >= psi^/kappa^, 2 otherwise
    double alpha_eps = 0.0;
    double psi_hat = 0.0;
    bool certified = true;
};

BoundResult closeness_bound(double alpha_eps, double psi_hat, double kappa_hat, double V0, int Td);

/// Uses psi (or psi_candidate when the certificate is flagged; result.certified is false then).
BoundResult closeness_bound(const CompositionCertificate& cc, double V0, double eps, int Td, double nu_sup = 0.0);

}  // namespace compabs
