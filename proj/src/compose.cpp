#include "compabs/compose.hpp"

#include "compabs/error.hpp"

#include <algorithm>
#include <cmath>

namespace compabs {

Matrix assemble_xcmp(const std::vector<StorageCertificate>& certs, const Vector& mu) {
    if (static_cast<std::size_t>(mu.size()) != certs.size())
        throw DimensionError("assemble_xcmp: mu and certificate list differ in length");
    std::vector<Matrix> b11, b12, b21, b22;
    for (std::size_t i = 0; i < certs.size(); ++i) {
        const auto& c = certs[i];
        b11.push_back(mu[i] * c.X11);
        b12.push_back(mu[i] * c.X12);
        b21.push_back(mu[i] * c.x21());
        b22.push_back(mu[i] * c.X22);
    }
    Matrix t11 = block_diagonal(b11), t12 = block_diagonal(b12), t21 = block_diagonal(b21), t22 = block_diagonal(b22);
    if (t12.rows() != t11.rows() || t21.cols() != t11.cols() || t22.rows() != t12.cols())
        throw DimensionError("assemble_xcmp: inconsistent X blocks");
    const auto p = t11.rows(), n = t22.rows();
    Matrix X(p + n, p + n);
    X << t11, t12, t21, t22;
    return X;
}

LmiResult check_lmi(const Matrix& Ga, const Matrix& Xcmp, double tol) {
    const auto p = Ga.rows(), n = Ga.cols();
    if (Xcmp.rows() != p + n || Xcmp.cols() != p + n) throw DimensionError("check_lmi: Xcmp does not match Ga");
    Matrix T(p + n, n);
    T << Ga, Matrix::Identity(n, n);
    Matrix S = T.transpose() * Xcmp * T;
    LmiResult r;
    r.max_eigenvalue = max_eigenvalue_sym(S);
    r.ok = r.max_eigenvalue <= tol;
    return r;
}

bool check_mu_condition(const std::vector<StorageCertificate>& certs, const Vector& mu, double mu_bar) {
    if (static_cast<std::size_t>(mu.size()) != certs.size())
        throw DimensionError("check_mu_condition: mu and certificate list differ in length");
    if (!(mu_bar > 0.0 && mu_bar < 1.0)) throw InvalidArgument("mu_bar must lie in (0,1)");
    for (std::size_t i = 0; i < certs.size(); ++i) {
        const auto& c = certs[i];
        double kc = c.kappa_coeff > 0.0 ? c.kappa_coeff : 1.0 - c.kappa_hat;
        double ratio = (mu[i] / mu_bar) * kc * min_eigenvalue_sym(c.M);
        if (ratio < 1.0 - 1e-12) return false;
    }
    return true;
}

CompositionCertificate compose_fsf(const std::vector<StorageCertificate>& certs, const Vector& mu, double mu_bar,
                                   const Vector& beta, const Matrix& Ga, const Matrix& Ga_hat, double tol,
                                   std::optional<double> alpha_override) {
    if (certs.empty()) throw InvalidArgument("compose_fsf: no certificates");
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (!(mu[i] > 0.0)) throw InvalidArgument("compose_fsf: mu entries must be positive");
    CompositionCertificate cc;
    cc.mu = mu;
    cc.mu_bar = mu_bar;
    cc.beta = beta;
    cc.alpha_override = alpha_override;
    cc.Xcmp = assemble_xcmp(certs, mu);

    auto lmi = check_lmi(Ga, cc.Xcmp, tol);
    cc.lmi_ok = lmi.ok;
    cc.lmi_max_eigenvalue = lmi.max_eigenvalue;
    cc.mu_cond_ok = check_mu_condition(certs, mu, mu_bar);
    cc.coupling_match_ok = Ga.rows() == Ga_hat.rows() && Ga.cols() == Ga_hat.cols() &&
                           (Ga.size() == 0 || (Ga - Ga_hat).cwiseAbs().maxCoeff() <= 1e-12);

    double min_kappa = 1.0, inv_alpha_sum = 0.0;
    for (std::size_t i = 0; i < certs.size(); ++i) {
        const auto& c = certs[i];
        double kc = c.kappa_coeff > 0.0 ? c.kappa_coeff : 1.0 - c.kappa_hat;
        min_kappa = std::min(min_kappa, kc);
        double a = min_eigenvalue_sym(c.M);
        inv_alpha_sum += 1.0 / (mu[i] * a);
        cc.psi_subsystems += mu[i] * c.psi;
        cc.c_delta += mu[i] * c.psi_multiplier * max_eigenvalue_sym(c.M);
    }
    cc.kappa_hat = (1.0 - mu_bar) * min_kappa;
    cc.alpha_coeff = 1.0 / inv_alpha_sum;

    const auto p = Ga.rows(), n = Ga.cols();
    Matrix T(p + n, n);
    T << Ga, Matrix::Identity(n, n);
    Matrix P = cc.Xcmp.transpose() * T * T.transpose() * cc.Xcmp;
    cc.lambda_max_P = max_eigenvalue_sym(P);
    cc.lambda_max_xcmp = max_eigenvalue_sym(cc.Xcmp);
    cc.rho_term_included = cc.lambda_max_xcmp > tol;
    cc.rho_xcmp = spectral_radius(0.5 * (cc.Xcmp + cc.Xcmp.transpose()));
    cc.c_beta = cc.lambda_max_P / (mu_bar * mu_bar) + (cc.rho_term_included ? cc.rho_xcmp : 0.0);
    cc.psi_candidate = cc.psi_subsystems + cc.c_beta * beta.squaredNorm();
    if (cc.lmi_ok && cc.mu_cond_ok && cc.coupling_match_ok) cc.psi = cc.psi_candidate;
    return cc;
}

BoundResult closeness_bound(double alpha_eps, double psi_hat, double kappa_hat, double V0, int Td) {
    if (!(alpha_eps > 0.0)) throw InvalidArgument("closeness_bound: alpha(eps) must be positive");
    if (!(kappa_hat > 0.0 && kappa_hat < 1.0)) throw InvalidArgument("closeness_bound: kappa_hat must lie in (0,1)");
    if (Td < 0) throw InvalidArgument("closeness_bound: Td must be nonnegative");
    if (!(V0 >= 0.0) || !(psi_hat >= 0.0)) throw InvalidArgument("closeness_bound: V0 and psi must be nonnegative");
    BoundResult r;
    r.alpha_eps = alpha_eps;
    r.psi_hat = psi_hat;
    if (alpha_eps >= psi_hat / kappa_hat) {
        r.branch = 1;
        r.unclamped = 1.0 - (1.0 - V0 / alpha_eps) * std::pow(1.0 - psi_hat / alpha_eps, Td);
    } else {
        r.branch = 2;
        double decay = std::pow(1.0 - kappa_hat, Td);
        r.unclamped = (V0 / alpha_eps) * decay + (psi_hat / (kappa_hat * alpha_eps)) * (1.0 - decay);
    }
    r.probability = std::clamp(r.unclamped, 0.0, 1.0);
    return r;
}

BoundResult closeness_bound(const CompositionCertificate& cc, double V0, double eps, int Td, double nu_sup) {
    if (!(eps > 0.0)) throw InvalidArgument("closeness_bound: eps must be positive");
    (void)nu_sup;  // rho_ext is zero for every certificate built here
    double psi = cc.psi ? *cc.psi : cc.psi_candidate;
    auto r = closeness_bound(cc.alpha(eps), psi, cc.kappa_hat, V0, Td);
    r.certified = cc.certified();
    return r;
}

}  // namespace compabs
