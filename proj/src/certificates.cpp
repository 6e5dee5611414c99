#include "compabs/certificates.hpp"

#include "compabs/error.hpp"

#include <cmath>
#include <limits>

namespace compabs {

const char* to_string(CertificateKind k) {
    return k == CertificateKind::LinearMStep ? "linear-mstep" : "nonlinear-classic";
}

CertificateKind certificate_kind_from_string(const std::string& s) {
    if (s == "linear-mstep" || s == "linear") return CertificateKind::LinearMStep;
    if (s == "nonlinear-classic" || s == "nonlinear") return CertificateKind::NonlinearClassic;
    throw ConfigError("unknown certificate kind '" + s + "'");
}

namespace {

void expect_shape(const Matrix& m, Eigen::Index r, Eigen::Index c, const char* name) {
    if (m.rows() != r || m.cols() != c)
        throw DimensionError(std::string(name) + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                             ", expected " + std::to_string(r) + "x" + std::to_string(c));
}

struct Common {
    Matrix K, X21;
};

Common validate_candidate(const StorageCertificate& c, int n, int m, int p) {
    if (!(c.kappa_hat > 0.0 && c.kappa_hat < 1.0)) throw InvalidArgument("kappa_hat must lie in (0,1)");
    if (!(c.pi > 0.0)) throw InvalidArgument("pi must be positive");
    if (!(c.delta >= 0.0)) throw InvalidArgument("delta must be nonnegative");
    expect_shape(c.M, n, n, "M");
    Common out;
    out.K = c.K.size() ? c.K : Matrix::Zero(m, n);
    expect_shape(out.K, m, n, "K");
    expect_shape(c.X11, p, p, "X11");
    expect_shape(c.X12, p, n, "X12");
    out.X21 = c.x21();
    expect_shape(out.X21, n, p, "X21");
    expect_shape(c.X22, n, n, "X22");
    return out;
}

// Derived data shared by both kinds; psi multiplier depends on how many cross terms the proof splits.
void fill_derived(CertificateReport& rep, double multiplier) {
    auto& c = rep.certificate;
    c.psi_multiplier = multiplier;
    c.alpha_coeff = min_eigenvalue_sym(c.M);
    c.psi = psi_for(c, c.delta);
    c.rho_ext = 0.0;
    c.kappa_coeff = 1.0 - c.kappa_hat;
    if (c.reported_kappa) {
        double k = *c.reported_kappa;
        if (!(k > 0.0) || k > c.kappa_coeff * (1.0 + 1e-12)) {
            rep.feasible = false;
            rep.issues.push_back("reported kappa must lie in (0, 1 - kappa_hat]");
        } else {
            c.kappa_coeff = k;
        }
    }
    if (!((c.M - c.M.transpose()).cwiseAbs().maxCoeff() <= 1e-9)) {
        rep.feasible = false;
        rep.issues.push_back("M is not symmetric");
    }
    if (!(c.alpha_coeff > 0.0)) {
        rep.feasible = false;
        rep.issues.push_back("M is not positive definite");
    }
    c.verified = rep.feasible;
}

CertificateReport nonlinear_check(const Matrix& A, const Matrix& B, const Matrix& D, const Matrix& E,
                                  const Matrix& F, double slope_hi, const StorageCertificate& cand, double tol) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    const int p = static_cast<int>(D.cols());
    if (!std::isfinite(slope_hi)) throw UnsupportedModel("slope bound b must be finite");
    if (!(slope_hi > 0.0)) throw InvalidArgument("slope bound b must be positive");
    auto cm = validate_candidate(cand, n, m, p);
    expect_shape(E, n, 1, "E");
    expect_shape(F, 1, n, "F");

    const Matrix& Mt = cand.M;
    const Matrix Acl = A + B * cm.K;
    const double g = 1.0 + cand.pi;
    const int d = n + p + 1;

    Matrix lhs(d, d);
    lhs.block(0, 0, n, n) = g * Acl.transpose() * Mt * Acl;
    lhs.block(0, n, n, p) = Acl.transpose() * Mt * D;
    lhs.block(0, n + p, n, 1) = Acl.transpose() * Mt * E;
    lhs.block(n, 0, p, n) = D.transpose() * Mt * Acl;
    lhs.block(n, n, p, p) = g * D.transpose() * Mt * D;
    lhs.block(n, n + p, p, 1) = D.transpose() * Mt * E;
    lhs.block(n + p, 0, 1, n) = E.transpose() * Mt * Acl;
    lhs.block(n + p, n, 1, p) = E.transpose() * Mt * D;
    lhs.block(n + p, n + p, 1, 1) = g * E.transpose() * Mt * E;

    Matrix rhs = Matrix::Zero(d, d);
    rhs.block(0, 0, n, n) = cand.kappa_hat * Mt + cand.X22;
    rhs.block(0, n, n, p) = cm.X21;
    rhs.block(0, n + p, n, 1) = -F.transpose();
    rhs.block(n, 0, p, n) = cand.X12;
    rhs.block(n, n, p, p) = cand.X11;
    rhs.block(n + p, 0, 1, n) = -F;
    rhs(n + p, n + p) = 2.0 / slope_hi;

    CertificateReport rep;
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.residual = rhs - lhs;
    auto r = psd_check(rep.residual, tol);
    rep.feasible = r.ok;
    rep.min_eigenvalue = r.min_eigenvalue;
    if (!r.ok) rep.issues.push_back("RHS - LHS is not positive semidefinite");
    rep.certificate = cand;
    rep.certificate.kind = CertificateKind::NonlinearClassic;
    rep.certificate.K = cm.K;
    rep.certificate.X21 = cm.X21;
    const bool has_term = E.cwiseAbs().maxCoeff() > 0.0 && F.cwiseAbs().maxCoeff() > 0.0;
    fill_derived(rep, has_term ? 1.0 + 3.0 / cand.pi : 1.0 + 2.0 / cand.pi);
    return rep;
}

template <class System, class Check>
std::optional<StorageCertificate> grid_search(const System& sys, const StorageCertificate& base,
                                              const GridRanges& g, double tol, Check check) {
    std::optional<StorageCertificate> best;
    double best_margin = -std::numeric_limits<double>::infinity();
    for (double kh : g.kappa_hat) {
        for (double pi : g.pi) {
            for (double ks : g.k_scale) {
                StorageCertificate c = base;
                c.kappa_hat = kh;
                c.pi = pi;
                if (base.K.size()) c.K = ks * base.K;
                CertificateReport rep;
                try {
                    rep = check(sys, c, tol);
                } catch (const InvalidArgument&) {
                    continue;
                }
                if (rep.feasible && rep.min_eigenvalue > best_margin) {
                    best_margin = rep.min_eigenvalue;
                    best = rep.certificate;
                }
            }
        }
    }
    return best;
}

}  // namespace

double psi_for(const StorageCertificate& c, double delta) {
    return c.psi_multiplier * max_eigenvalue_sym(c.M) * delta * delta;
}

CertificateReport check_linear_fstf(const AuxiliarySubsystem& aux, const StorageCertificate& cand, double tol) {
    if (aux.nonlinearity) throw UnsupportedModel("linear check applied to a subsystem with a nonlinear term");
    const int n = aux.n(), m = aux.m(), p = aux.p();
    auto cm = validate_candidate(cand, n, m, p);
    const Matrix& Mt = cand.M;
    const Matrix Acl = aux.A + aux.B * cm.K;
    const Matrix& D = aux.D;
    const double g = 1.0 + cand.pi;

    Matrix lhs(n + p, n + p);
    lhs.block(0, 0, n, n) = g * Acl.transpose() * Mt * Acl;
    lhs.block(0, n, n, p) = Acl.transpose() * Mt * D;
    lhs.block(n, 0, p, n) = D.transpose() * Mt * Acl;
    lhs.block(n, n, p, p) = g * D.transpose() * Mt * D;

    Matrix rhs(n + p, n + p);
    rhs.block(0, 0, n, n) = cand.kappa_hat * Mt + cand.X22;
    rhs.block(0, n, n, p) = cm.X21;
    rhs.block(n, 0, p, n) = cand.X12;
    rhs.block(n, n, p, p) = cand.X11;

    CertificateReport rep;
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.residual = rhs - lhs;
    auto r = psd_check(rep.residual, tol);
    rep.feasible = r.ok;
    rep.min_eigenvalue = r.min_eigenvalue;
    if (!r.ok) rep.issues.push_back("RHS - LHS is not positive semidefinite");
    rep.certificate = cand;
    rep.certificate.kind = CertificateKind::LinearMStep;
    rep.certificate.K = cm.K;
    rep.certificate.X21 = cm.X21;
    fill_derived(rep, 1.0 + 2.0 / cand.pi);
    return rep;
}

CertificateReport check_nonlinear_stf(const Subsystem& sub, const StorageCertificate& cand, double tol) {
    const int n = sub.n();
    if (sub.nonlinearity) {
        const auto& t = *sub.nonlinearity;
        return nonlinear_check(sub.A, sub.B, sub.D, t.E, t.F, t.slope_hi, cand, tol);
    }
    return nonlinear_check(sub.A, sub.B, sub.D, Matrix::Zero(n, 1), Matrix::Zero(1, n), 1.0, cand, tol);
}

CertificateReport check_nonlinear_stf(const AuxiliarySubsystem& sub, const StorageCertificate& cand, double tol) {
    if (sub.steps != 1) throw UnsupportedModel("slope-restricted check needs the one-step model");
    const int n = sub.n();
    if (sub.nonlinearity) {
        const auto& t = *sub.nonlinearity;
        return nonlinear_check(sub.A, sub.B, sub.D, t.E, t.F, t.slope_hi, cand, tol);
    }
    return nonlinear_check(sub.A, sub.B, sub.D, Matrix::Zero(n, 1), Matrix::Zero(1, n), 1.0, cand, tol);
}

Vector interface_apply(const StorageCertificate& cert, const Vector& x, const Vector& xhat, const Vector& nuhat) {
    if (x.size() != xhat.size()) throw DimensionError("interface_apply: x and x^ differ in size");
    if (cert.K.size() == 0) return nuhat;
    if (cert.K.cols() != x.size() || cert.K.rows() != nuhat.size())
        throw DimensionError("interface_apply: K does not match the state/input sizes");
    return cert.K * (x - xhat) + nuhat;
}

std::optional<StorageCertificate> grid_search_params(const AuxiliarySubsystem& aux, const StorageCertificate& base,
                                                     const GridRanges& ranges, double tol) {
    return grid_search(aux, base, ranges, tol, [](const AuxiliarySubsystem& a, const StorageCertificate& c, double t) {
        return check_linear_fstf(a, c, t);
    });
}

std::optional<StorageCertificate> grid_search_params(const Subsystem& sub, const StorageCertificate& base,
                                                     const GridRanges& ranges, double tol) {
    return grid_search(sub, base, ranges, tol, [](const Subsystem& s, const StorageCertificate& c, double t) {
        return check_nonlinear_stf(s, c, t);
    });
}

}  // namespace compabs
