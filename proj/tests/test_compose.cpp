#include "compabs/compose.hpp"
#include "compabs/error.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace compabs;
using compabs::test::scalar;

namespace {

// Case-study certificates checked on the printed model so that derived fields are filled.
std::vector<StorageCertificate> checked_case1() {
    auto aux = compabs::test::case1_printed_aux();
    auto certs = compabs::test::case1_certs();
    std::vector<StorageCertificate> out;
    for (int i = 0; i < 4; ++i) out.push_back(check_linear_fstf(aux.subsystems[i], certs[i]).certificate);
    return out;
}

StorageCertificate plain(double kc) {
    StorageCertificate c;
    c.M = scalar(1.0);
    c.kappa_hat = 1.0 - kc;
    c.kappa_coeff = kc;
    c.X11 = scalar(-1.0);
    c.X12 = scalar(0.0);
    c.X22 = scalar(-1.0);
    return c;
}

double branch_one(double a, double psi, double V0, int Td) { return 1.0 - (1.0 - V0 / a) * std::pow(1.0 - psi / a, Td); }

double branch_two(double a, double psi, double k, double V0, int Td) {
    const double d = std::pow(1.0 - k, Td);
    return V0 / a * d + psi / (k * a) * (1.0 - d);
}

}  // namespace

TEST_SUITE("compose") {

TEST_CASE("Xcmp assembly") {
    auto certs = checked_case1();
    Vector mu = Vector::Ones(4);
    Matrix X = assemble_xcmp(certs, mu);
    REQUIRE(X.rows() == 8);
    CHECK(X(0, 0) == 1.1);
    CHECK(X(1, 1) == 1.05);
    CHECK(X(2, 2) == 1.99);
    CHECK(X(3, 3) == 1.99);
    CHECK(X(0, 1) == 0.0);
    CHECK(X(0, 4) == certs[0].X12(0, 0));
    CHECK(X(4, 0) == certs[0].x21()(0, 0));
    CHECK(X(7, 7) == certs[3].X22(0, 0));

    Matrix one = assemble_xcmp({certs[0]}, Vector::Ones(1));
    Matrix xbar(2, 2);
    xbar << certs[0].X11, certs[0].X12, certs[0].x21(), certs[0].X22;
    CHECK(one == xbar);

    CHECK(assemble_xcmp(certs, 2.0 * mu) == 2.0 * X);
    CHECK_THROWS_AS(assemble_xcmp(certs, Vector::Ones(3)), DimensionError);
}

TEST_CASE("LMI trivial cases") {
    Matrix Ga = Matrix::Zero(2, 2);
    CHECK(check_lmi(Ga, -Matrix::Identity(4, 4)).ok);
    Matrix X = Matrix::Zero(4, 4);
    X.bottomRightCorner(2, 2) = Matrix::Identity(2, 2);
    auto r = check_lmi(Ga, X);
    CHECK_FALSE(r.ok);
    CHECK(r.max_eigenvalue == doctest::Approx(1.0));
    CHECK_THROWS_AS(check_lmi(Ga, Matrix::Zero(3, 3)), DimensionError);
}

TEST_CASE("LMI value agrees with a direct quadratic form") {
    auto certs = checked_case1();
    auto aux = compabs::test::case1_printed_aux();
    Matrix X = assemble_xcmp(certs, Vector::Ones(4));
    // S = Ga^T X11 Ga + Ga^T X12 + X21 Ga + X22, symmetrized
    const Matrix& G = aux.Ga;
    Matrix S = G.transpose() * X.topLeftCorner(4, 4) * G + G.transpose() * X.topRightCorner(4, 4) +
               X.bottomLeftCorner(4, 4) * G + X.bottomRightCorner(4, 4);
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    CHECK(check_lmi(G, X).max_eigenvalue == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-10));
}

TEST_CASE("LMI verdict is invariant under scaling of mu") {
    auto certs = checked_case1();
    auto G = compabs::test::case1_printed_aux().Ga;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    auto base = check_lmi(G, assemble_xcmp(certs, Vector::Ones(4)));
    for (int t = 0; t < 20; ++t) {
        double c = u(rng);
        auto r = check_lmi(G, assemble_xcmp(certs, Vector::Constant(4, c)));
        CHECK(r.ok == base.ok);
        CHECK(r.max_eigenvalue == doctest::Approx(c * base.max_eigenvalue).epsilon(1e-9));
    }
}

TEST_CASE("mu condition") {
    auto certs = checked_case1();
    Vector mu = Vector::Ones(4);
    CHECK(check_mu_condition(certs, mu, 0.005));
    CHECK_FALSE(check_mu_condition(certs, mu, 0.01));
    // worst ratio is 0.0051 / 0.005
    double worst = 1.0;
    for (auto& c : certs) worst = std::min(worst, c.kappa_coeff);
    CHECK(worst == 0.0051);
    CHECK(worst / 0.005 == doctest::Approx(1.02));
    CHECK(worst / 0.01 == doctest::Approx(0.51));

    auto c = plain(1.0);
    c.kappa_hat = 0.5;
    c.kappa_coeff = 0.5;
    CHECK(check_mu_condition({c}, Vector::Constant(1, 0.5), 0.25));  // exactly 1
    CHECK_THROWS_AS(check_mu_condition(certs, mu, 1.0), InvalidArgument);
}

TEST_CASE("case1 composition constants") {
    auto certs = checked_case1();
    auto G = compabs::test::case1_printed_aux().Ga;
    auto cc = compose_fsf(certs, Vector::Ones(4), 0.005, Vector::Constant(4, 1e-4), G, G, kDefaultPsdTol, 1.0);
    CHECK(cc.kappa_hat == doctest::Approx(0.995 * 0.0051).epsilon(1e-12));
    CHECK(cc.kappa_hat == doctest::Approx(0.005).epsilon(0.02));
    const double cdelta = 21.0 + 41.0 + 2.0 * (1.0 + 2.0 / 0.99);
    CHECK(cc.c_delta == doctest::Approx(cdelta).epsilon(1e-12));
    CHECK(std::round(cc.c_delta * 100) / 100 == doctest::Approx(68.04));
    CHECK(cc.alpha_coeff == doctest::Approx(0.25));
    CHECK(cc.alpha_scale() == 1.0);
    CHECK(cc.psi_candidate >= cc.psi_subsystems);
    CHECK(cc.coupling_match_ok);

    auto zero = compose_fsf(certs, Vector::Ones(4), 0.005, Vector::Zero(4), G, G);
    CHECK(zero.psi_candidate == zero.psi_subsystems);
}

TEST_CASE("c_beta follows P and the spectral radius") {
    auto certs = checked_case1();
    auto G = compabs::test::case1_printed_aux().Ga;
    auto cc = compose_fsf(certs, Vector::Ones(4), 0.005, Vector::Constant(4, 1e-4), G, G);
    Matrix T(8, 4);
    T << G, Matrix::Identity(4, 4);
    Matrix P = cc.Xcmp.transpose() * T * T.transpose() * cc.Xcmp;
    Eigen::SelfAdjointEigenSolver<Matrix> ep(P), ex(cc.Xcmp);
    const double rho = ex.eigenvalues().cwiseAbs().maxCoeff();
    REQUIRE(ex.eigenvalues().maxCoeff() > 0.0);
    CHECK(cc.rho_term_included);
    CHECK(cc.c_beta == doctest::Approx(ep.eigenvalues().maxCoeff() / 2.5e-5 + rho).epsilon(1e-10));

    // negative definite Xcmp drops the spectral radius term
    std::vector<StorageCertificate> neg(2, plain(0.5));
    auto nd = compose_fsf(neg, Vector::Ones(2), 0.1, Vector::Ones(2), Matrix::Zero(2, 2), Matrix::Zero(2, 2));
    CHECK_FALSE(nd.rho_term_included);
    CHECK(nd.c_beta == doctest::Approx(1.0 / 0.01));
    CHECK(nd.certified());
    CHECK(nd.psi.has_value());
}

TEST_CASE("flags and missing psi") {
    std::vector<StorageCertificate> neg(2, plain(0.5));
    Matrix G = Matrix::Zero(2, 2), H = Matrix::Identity(2, 2);
    auto cc = compose_fsf(neg, Vector::Ones(2), 0.1, Vector::Zero(2), G, H);
    CHECK_FALSE(cc.coupling_match_ok);
    CHECK_FALSE(cc.psi.has_value());
    CHECK_FALSE(cc.certified());
    auto bad_mu = compose_fsf(neg, Vector::Ones(2), 0.9, Vector::Zero(2), G, G);
    CHECK_FALSE(bad_mu.mu_cond_ok);
    CHECK_FALSE(bad_mu.psi.has_value());
    CHECK_THROWS_AS(compose_fsf({}, Vector(0), 0.1, Vector(0), G, G), InvalidArgument);
    CHECK_THROWS_AS(compose_fsf(neg, Vector::Constant(2, -1.0), 0.1, Vector::Zero(2), G, G), InvalidArgument);
}

TEST_CASE("proof alpha for identical subsystems") {
    std::vector<StorageCertificate> certs(5, plain(0.5));
    for (auto& c : certs) c.M = scalar(2.0);
    auto cc = compose_fsf(certs, Vector::Ones(5), 0.1, Vector::Zero(5), Matrix::Zero(5, 5), Matrix::Zero(5, 5));
    CHECK(cc.alpha_coeff == doctest::Approx(2.0 / 5.0));
    CHECK(cc.alpha(3.0) == doctest::Approx(2.0 / 5.0 * 9.0));
}

TEST_CASE("closeness bound examples") {
    const double psi = 68.04 * 0.004 * 0.004 + 1.6e5 * 1e-8;
    CHECK(psi == doctest::Approx(2.6886e-3).epsilon(1e-4));
    auto r = closeness_bound(0.25, psi, 0.005, 0.0, 7);
    CHECK(r.branch == 2);
    CHECK(r.probability == doctest::Approx(branch_two(0.25, psi, 0.005, 0.0, 7)).epsilon(1e-14));
    CHECK(r.probability == doctest::Approx(0.0742).epsilon(5e-4));
    CHECK(r.probability <= 0.1);

    CHECK(closeness_bound(1.0, 0.0, 0.5, 0.0, 10).probability == 0.0);
    auto edge = closeness_bound(1.0, 0.0, 0.5, 1.0, 1);
    CHECK(edge.branch == 1);
    CHECK(edge.probability == 1.0);

    auto big = closeness_bound(0.01, 1.0, 0.5, 0.0, 3);
    CHECK(big.unclamped > 1.0);
    CHECK(big.probability == 1.0);

    CHECK_THROWS_AS(closeness_bound(0.0, 0.1, 0.5, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(closeness_bound(1.0, 0.1, 0.5, 0.0, -1), InvalidArgument);
    CHECK_THROWS_AS(closeness_bound(1.0, 0.1, 1.0, 0.0, 1), InvalidArgument);
}

TEST_CASE("bound from a composition certificate") {
    std::vector<StorageCertificate> certs(2, plain(0.5));
    for (auto& c : certs) {
        c.psi_multiplier = 3.0;
        c.psi = 3.0 * 1e-4;
    }
    Matrix G = Matrix::Zero(2, 2);
    auto cc = compose_fsf(certs, Vector::Ones(2), 0.1, Vector::Zero(2), G, G);
    auto r = closeness_bound(cc, 0.0, 0.5, 4);
    CHECK(r.certified);
    CHECK(r.alpha_eps == doctest::Approx(0.5 * 0.25));
    CHECK(r.psi_hat == doctest::Approx(6e-4));
    cc.psi.reset();
    cc.lmi_ok = false;
    auto u = closeness_bound(cc, 0.0, 0.5, 4);
    CHECK_FALSE(u.certified);
    CHECK(u.probability == r.probability);
    CHECK_THROWS_AS(closeness_bound(cc, 0.0, 0.0, 4), InvalidArgument);
}

TEST_CASE("bound monotonicity over random instances") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int t = 0; t < 1000; ++t) {
        const double a = 0.01 + 2.0 * u(rng), k = 0.001 + 0.99 * u(rng), psi = 0.5 * a * k * 2 * u(rng);
        const double V0 = a * u(rng), dpsi = 0.1 * u(rng) * a * k, dv = 0.1 * a * u(rng), da = a * u(rng);
        const int Td = static_cast<int>(30 * u(rng));
        const double b = closeness_bound(a, psi, k, V0, Td).probability;
        const double tol = 1e-12;
        CHECK(closeness_bound(a, psi + dpsi, k, V0, Td).probability >= b - tol);
        CHECK(closeness_bound(a, psi, k, V0 + dv, Td).probability >= b - tol);
        CHECK(closeness_bound(a + da, psi, k, V0, Td).probability <= b + tol);
        const double p = closeness_bound(a, psi, k, V0, Td).probability;
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("branches agree at the switching point") {
    for (int Td : {1, 5, 20}) {
        for (double k : {0.005, 0.2, 0.7}) {
            const double a = 0.3, psi = k * a, V0 = 0.1;
            const double b1 = branch_one(a, psi, V0, Td), b2 = branch_two(a, psi, k, V0, Td);
            CHECK(std::abs(b1 - b2) <= std::max(1e-9, 1e-6 * std::abs(b1)));
            auto on = closeness_bound(a, psi, k, V0, Td);
            auto below = closeness_bound(a * (1 - 1e-12), psi, k, V0, Td);
            CHECK(on.branch == 1);
            CHECK(below.branch == 2);
            CHECK(std::abs(on.unclamped - below.unclamped) <= std::max(1e-9, 1e-6 * on.unclamped));
        }
    }
}

TEST_CASE("traffic composition delta coefficient") {
    auto net = make_traffic_ring({.cells = 50});
    StorageCertificate c;
    c.kind = CertificateKind::NonlinearClassic;
    c.M = scalar(1.0);
    c.K = scalar(0.0);
    c.kappa_hat = 0.99;
    c.pi = 1.47;
    c.X11 = scalar(0.320112);
    c.X12 = scalar(0.1404);
    c.X22 = scalar(-0.6082128);
    std::vector<StorageCertificate> certs;
    for (auto& s : net.subsystems) certs.push_back(check_nonlinear_stf(s, c).certificate);
    auto cc = compose_fsf(certs, Vector::Ones(50), 0.01, Vector::Zero(50), net.G, net.G);
    CHECK(cc.c_delta == doctest::Approx(50.0 * (1.0 + 2.0 / 1.47)).epsilon(1e-12));
    CHECK(cc.c_delta == doctest::Approx(117.78).epsilon(0.01));
    CHECK(cc.lmi_ok);
}

}
