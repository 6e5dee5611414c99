#include "compabs/error.hpp"
#include "compabs/msample.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace compabs;
using compabs::test::scalar;

namespace {

Network motivating() { return load_network(compabs::test::config_path("case1/motivating.json")); }

double coefficient(const AuxiliarySubsystem& a, NoiseTerm t) {
    for (std::size_t c = 0; c < a.noise_layout.size(); ++c)
        if (a.noise_layout[c] == t) return a.R(0, static_cast<Eigen::Index>(c));
    return 0.0;
}

Network random_network(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nsub(1, 3), dim(1, 2);
    std::normal_distribution<double> n01;
    Network net;
    const int N = nsub(rng);
    int total_n = 0, total_p = 0;
    for (int i = 0; i < N; ++i) {
        int n = dim(rng), m = dim(rng) - 1, p = dim(rng), q = dim(rng);
        if (total_n + n > 6) n = 1;
        Subsystem s;
        s.A = 0.6 * Matrix::NullaryExpr(n, n, [&] { return n01(rng); });
        s.B = Matrix::NullaryExpr(n, m, [&] { return n01(rng); });
        s.D = 0.5 * Matrix::NullaryExpr(n, p, [&] { return n01(rng); });
        s.R = Matrix::NullaryExpr(n, q, [&] { return n01(rng); });
        s.state_box = IntervalBox::uniform(n, -1, 1);
        s.ext_input_box = IntervalBox::uniform(m, -1, 1);
        s.int_input_box = IntervalBox::uniform(p, -10, 10);
        s.noise.std = Vector::Ones(q);
        net.subsystems.push_back(s);
        total_n += n;
        total_p += p;
    }
    net.G = 0.5 * Matrix::NullaryExpr(total_p, total_n, [&] { return n01(rng); });
    return net;
}

}  // namespace

TEST_SUITE("msample") {

TEST_CASE("closed matrix of the motivating example") {
    Matrix phi = closed_matrix(motivating());
    // [[1.01 - 0.4, 0.4], [-0.2, 0.55 - 0.2]]
    CHECK(phi(0, 0) == doctest::Approx(0.61));
    CHECK(phi(0, 1) == doctest::Approx(0.40));
    CHECK(phi(1, 0) == doctest::Approx(-0.20));
    CHECK(phi(1, 1) == doctest::Approx(0.35));
}

TEST_CASE("closed matrix with zero coupling or zero D") {
    auto net = motivating();
    net.G.setZero();
    Matrix phi = closed_matrix(net);
    CHECK(phi(0, 0) == 1.01);
    CHECK(phi(1, 1) == 0.55);
    CHECK(phi(0, 1) == 0.0);
    net = motivating();
    for (auto& s : net.subsystems) s.D.setZero();
    phi = closed_matrix(net);
    CHECK(phi(0, 0) == 1.01);
    CHECK(phi(1, 0) == 0.0);
}

TEST_CASE("motivating example two steps ahead") {
    auto aux = msample_network(motivating(), 2);
    // squared by hand: [[0.61^2 - 0.08, 0.244 + 0.14], [-0.122 - 0.07, -0.08 + 0.1225]]
    CHECK(aux.subsystems[0].A(0, 0) == doctest::Approx(0.2921).epsilon(1e-12));
    CHECK(aux.Ga(0, 1) == doctest::Approx(0.384).epsilon(1e-12));
    CHECK(aux.subsystems[1].A(0, 0) == doctest::Approx(0.0425).epsilon(1e-12));
    CHECK(aux.Ga(1, 0) == doctest::Approx(-0.192).epsilon(1e-12));
    CHECK(std::round(aux.subsystems[0].A(0, 0) * 100) / 100 == doctest::Approx(0.29));
    CHECK(std::round(aux.Ga(0, 1) * 100) / 100 == doctest::Approx(0.38));
    CHECK(std::round(aux.subsystems[1].A(0, 0) * 100) / 100 == doctest::Approx(0.04));
    CHECK(std::round(aux.Ga(1, 0) * 100) / 100 == doctest::Approx(-0.19));

    // noise: x1 gets 0.61 s1(k) + s1(k+1) + 0.4 s2(k); x2 gets -0.2 s1(k) + 0.35 s2(k) + s2(k+1)
    const auto& a0 = aux.subsystems[0];
    const auto& a1 = aux.subsystems[1];
    CHECK(a0.q() == 3);
    CHECK(coefficient(a0, {0, 0, 0}) == doctest::Approx(0.61));
    CHECK(coefficient(a0, {0, 1, 0}) == doctest::Approx(1.0));
    CHECK(coefficient(a0, {1, 0, 0}) == doctest::Approx(0.4));
    CHECK(coefficient(a1, {0, 0, 0}) == doctest::Approx(-0.2));
    CHECK(coefficient(a1, {1, 0, 0}) == doctest::Approx(0.35));
    CHECK(coefficient(a1, {1, 1, 0}) == doctest::Approx(1.0));
}

TEST_CASE("spectral effect of sampling") {
    auto net = motivating();
    auto one = one_step_view(net);
    CHECK(one.subsystems[0].A(0, 0) > 1.0);
    auto two = msample_network(net, 2);
    CHECK(std::abs(two.subsystems[0].A(0, 0)) < 1.0);
    CHECK(block_spectral_radii(two)[0] < 1.0);
}

TEST_CASE("case1 auxiliary network matches the printed model") {
    auto aux = msample_network(compabs::test::case1_network(), 2);
    const double printed[] = {0.89, 0.95, 0.24, 0.35};
    for (int i = 0; i < 4; ++i) {
        double a = aux.subsystems[i].A(0, 0);
        CHECK(std::trunc(a * 100) / 100 == doctest::Approx(printed[i]));
        CHECK(std::abs(a - printed[i]) < 0.01);
    }
    // subsystem 1 noise gains 0.95 (s1(k)), -0.07 (s3(k)), 1 (s1(k+1))
    const auto& a0 = aux.subsystems[0];
    CHECK(coefficient(a0, {0, 0, 0}) == doctest::Approx(0.95));
    CHECK(coefficient(a0, {2, 0, 0}) == doctest::Approx(-0.07));
    CHECK(coefficient(a0, {0, 1, 0}) == doctest::Approx(1.0));
    CHECK(a0.q() == 3);
    CHECK(aux.subsystems[2].q() == 4);
    // W~_1 = G_a row 1 over [0,0.5]^4
    CHECK(aux.subsystems[0].int_input_box.lower[0] == doctest::Approx(0.5 * (aux.Ga(0, 1) + aux.Ga(0, 2))));
    CHECK(aux.subsystems[0].int_input_box.upper[0] == doctest::Approx(0.0));
}

TEST_CASE("block reconstruction") {
    auto net = compabs::test::case1_network();
    for (int M : {1, 2, 3, 5}) {
        auto aux = msample_network(net, M);
        Matrix phiM = Matrix::Identity(4, 4);
        Matrix phi = closed_matrix(net);
        for (int k = 0; k < M; ++k) phiM = phi * phiM;
        Matrix rebuilt = aux.Ga;
        for (int i = 0; i < 4; ++i) rebuilt(i, i) += aux.subsystems[i].A(0, 0);
        CHECK((rebuilt - phiM).cwiseAbs().maxCoeff() < 1e-12);
        for (int i = 0; i < 4; ++i) CHECK(aux.Ga(i, i) == 0.0);
    }
}

TEST_CASE("one-step partition") {
    auto net = compabs::test::case1_network();
    auto aux = msample_network(net, 1);
    Matrix phi = closed_matrix(net);
    for (int i = 0; i < 4; ++i) {
        CHECK(aux.subsystems[i].A(0, 0) ==
              doctest::Approx(net.subsystems[i].A(0, 0) + net.subsystems[i].D(0, 0) * net.G(i, i)));
        for (int j = 0; j < 4; ++j)
            if (i != j) CHECK(aux.Ga(i, j) == doctest::Approx(phi(i, j)));
    }
}

TEST_CASE("noise covariance") {
    auto aux = compabs::test::case1_printed_aux();
    auto a0 = aux.subsystems[0];
    a0.noise_std = Vector::Ones(3);
    CHECK(aux_noise_covariance(a0)(0, 0) == doctest::Approx(0.95 * 0.95 + 0.07 * 0.07 + 1.0));
    CHECK(aux_noise_covariance(a0)(0, 0) == doctest::Approx(1.9074));
    a0.noise_std.setZero();
    CHECK(aux_noise_covariance(a0)(0, 0) == 0.0);
    AuxiliarySubsystem id;
    id.R = Matrix::Ones(1, 1);
    id.noise_std = Vector::Ones(1);
    CHECK(aux_noise_covariance(id)(0, 0) == 1.0);
}

TEST_CASE("oracle equivalence on case1") {
    auto net = compabs::test::case1_network();
    auto aux = msample_network(net, 2);
    std::mt19937_64 rng(0);
    std::normal_distribution<double> n01;
    const int J = 3, M = 2;
    std::vector<Vector> inputs, noise;
    for (int k = 0; k < J * M; ++k) {
        Vector u = Vector::Zero(2);
        if (k % M == M - 1) u = Vector::NullaryExpr(2, [&] { return n01(rng); });
        inputs.push_back(u);
        noise.push_back(Vector::NullaryExpr(4, [&] { return n01(rng); }));
    }
    auto tr = oracle_simulate(net, aux, Vector::Constant(4, 0.3), inputs, noise, J);
    CHECK(tr.max_deviation < 1e-10);
}

TEST_CASE("oracle with zero data stays at zero") {
    auto net = compabs::test::case1_network();
    auto aux = msample_network(net, 2);
    std::vector<Vector> inputs(4, Vector::Zero(2)), noise(4, Vector::Zero(4));
    auto tr = oracle_simulate(net, aux, Vector::Zero(4), inputs, noise, 2);
    for (const auto& x : tr.original) CHECK(x.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& x : tr.auxiliary) CHECK(x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("oracle equivalence on random networks") {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> n01;
    std::uniform_int_distribution<int> msteps(1, 4);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Network net = random_network(rng);
        const int M = msteps(rng);
        auto aux = msample_network(net, M);
        const int J = 3;
        int m_total = 0, q_total = 0;
        for (const auto& s : net.subsystems) {
            m_total += s.m();
            q_total += s.q();
        }
        std::vector<Vector> inputs, noise;
        for (int k = 0; k < J * M; ++k) {
            Vector u = Vector::Zero(m_total);
            if (k % M == M - 1) u = Vector::NullaryExpr(m_total, [&] { return n01(rng); });
            inputs.push_back(u);
            noise.push_back(Vector::NullaryExpr(q_total, [&] { return n01(rng); }));
        }
        Vector x0 = Vector::NullaryExpr(net.total_states(), [&] { return n01(rng); });
        auto tr = oracle_simulate(net, aux, x0, inputs, noise, J);
        double scale = 1.0;
        for (const auto& x : tr.original) scale = std::max(scale, x.cwiseAbs().maxCoeff());
        CHECK(tr.max_deviation < 1e-10 * scale);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("input outside the sampling instants is rejected") {
    auto net = compabs::test::case1_network();
    auto aux = msample_network(net, 2);
    std::vector<Vector> inputs(2, Vector::Zero(2)), noise(2, Vector::Zero(4));
    inputs[0] = Vector::Ones(2);
    CHECK_THROWS(oracle_simulate(net, aux, Vector::Zero(4), inputs, noise, 1));
}

TEST_CASE("invalid requests") {
    auto net = compabs::test::case1_network();
    CHECK_THROWS_AS(msample_network(net, 0), InvalidArgument);
    auto cg = load_network(compabs::test::config_path("complete500/net5.json"));
    CHECK_THROWS_AS(msample_network(cg, 2), UnsupportedModel);
    CHECK_THROWS_AS(closed_matrix(cg), UnsupportedModel);
    CHECK_NOTHROW(one_step_view(cg));
}

}
