#include "compabs/config.hpp"
#include "compabs/error.hpp"
#include "compabs/model.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace compabs;
using compabs::test::scalar;

namespace {

Subsystem scalar_sub(double a, double d) {
    Subsystem s;
    s.A = scalar(a);
    s.B = Matrix(1, 0);
    s.D = scalar(d);
    s.R = scalar(1.0);
    s.state_box = IntervalBox::uniform(1, -1, 1);
    s.ext_input_box = IntervalBox::empty_dim();
    s.int_input_box = IntervalBox::uniform(1, -1, 1);
    s.noise.std = Vector::Ones(1);
    return s;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("case1 network is valid") {
    auto net = compabs::test::case1_network();
    auto rep = validate_network(net);
    CHECK(rep.valid());
    CHECK(rep.well_posed);
    // G * [0,0.5]^4 with nonnegative rows summing to 2 gives [0,1] per entry
    for (int i = 0; i < 4; ++i) {
        CHECK(rep.image.lower[i] == doctest::Approx(0.0));
        CHECK(rep.image.upper[i] == doctest::Approx(1.0));
    }
}

TEST_CASE("wrong G column count is reported") {
    auto net = compabs::test::case1_network();
    net.G = Matrix::Zero(4, 3);
    auto rep = validate_network(net);
    CHECK_FALSE(rep.dimensions_ok);
    CHECK_FALSE(rep.errors.empty());
    CHECK_FALSE(rep.valid());
}

TEST_CASE("single subsystem with zero coupling") {
    Network net;
    net.subsystems.push_back(scalar_sub(0.5, 1.0));
    net.G = Matrix::Zero(1, 1);
    auto rep = validate_network(net);
    CHECK(rep.valid());
    CHECK(rep.image.lower[0] == 0.0);
    CHECK(rep.image.upper[0] == 0.0);
}

TEST_CASE("ill-posed coupling is flagged without dimension errors") {
    Network net;
    net.subsystems.push_back(scalar_sub(0.5, 1.0));
    net.G = Matrix::Constant(1, 1, 2.0);  // image [-2,2] not inside [-1,1]
    auto rep = validate_network(net);
    CHECK(rep.dimensions_ok);
    CHECK_FALSE(rep.well_posed);
}

TEST_CASE("validation is idempotent") {
    auto net = compabs::test::case1_network();
    auto a = validate_network(net);
    auto b = validate_network(net);
    CHECK(a.valid() == b.valid());
    CHECK(a.image.lower == b.image.lower);
    CHECK(a.image.upper == b.image.upper);
}

TEST_CASE("eval_dynamics examples") {
    auto s = scalar_sub(1.01, 0.4);
    Vector one = Vector::Ones(1), zero = Vector::Zero(1);
    CHECK(eval_dynamics(s, one, Vector(0), one, zero)[0] == doctest::Approx(1.41));
    CHECK(eval_dynamics(s, zero, Vector(0), zero, zero)[0] == 0.0);

    s.nonlinearity = SlopeRestrictedTerm{scalar(0.1), scalar(0.1), -1, 1, "sin"};
    CHECK(eval_dynamics(s, zero, Vector(0), zero, zero)[0] == 0.0);
    Vector x = Vector::Constant(1, 2.0);
    CHECK(eval_dynamics(s, x, Vector(0), zero, zero)[0] == doctest::Approx(1.01 * 2 + 0.1 * std::sin(0.2)));
}

TEST_CASE("dimension mismatch throws") {
    auto s = scalar_sub(1.0, 1.0);
    CHECK_THROWS_AS(eval_dynamics(s, Vector::Ones(2), Vector(0), Vector::Ones(1), Vector::Ones(1)), DimensionError);
}

TEST_CASE("linear dynamics superpose") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    Subsystem s;
    s.A = Matrix::NullaryExpr(3, 3, [&] { return n01(rng); });
    s.B = Matrix::NullaryExpr(3, 2, [&] { return n01(rng); });
    s.D = Matrix::NullaryExpr(3, 1, [&] { return n01(rng); });
    s.R = Matrix::NullaryExpr(3, 3, [&] { return n01(rng); });
    s.state_box = IntervalBox::uniform(3, -1, 1);
    s.ext_input_box = IntervalBox::uniform(2, -1, 1);
    s.int_input_box = IntervalBox::uniform(1, -1, 1);
    s.noise.std = Vector::Ones(3);
    auto rnd = [&](int n) { return Vector(Vector::NullaryExpr(n, [&] { return n01(rng); })); };
    for (int t = 0; t < 20; ++t) {
        Vector x1 = rnd(3), x2 = rnd(3), u1 = rnd(2), u2 = rnd(2), w1 = rnd(1), w2 = rnd(1), z1 = rnd(3), z2 = rnd(3);
        double a = n01(rng), b = n01(rng);
        Vector lhs = eval_dynamics(s, a * x1 + b * x2, a * u1 + b * u2, a * w1 + b * w2, a * z1 + b * z2);
        Vector rhs = a * eval_dynamics(s, x1, u1, w1, z1) + b * eval_dynamics(s, x2, u2, w2, z2);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("slope restriction sampling") {
    SlopeRestrictedTerm t{scalar(0.1), scalar(0.1), -1, 1, "sin"};
    CHECK(slope_restriction_holds(t));
    t.slope_lo = 0.0;
    CHECK_FALSE(slope_restriction_holds(t));
    SlopeRestrictedTerm id{scalar(1), scalar(1), 1, 1, "identity"};
    CHECK(slope_restriction_holds(id));
}

TEST_CASE("nonlinearity registry is closed") {
    CHECK(lookup_nonlinearity("sin")(0.5) == std::sin(0.5));
    CHECK(lookup_nonlinearity("zero")(3.0) == 0.0);
    CHECK_THROWS(lookup_nonlinearity("exp"));
}

TEST_CASE("invalid boxes throw") {
    CHECK_THROWS(IntervalBox(Vector::Ones(1), Vector::Zero(1)));
    CHECK_THROWS(IntervalBox(Vector::Zero(2), Vector::Ones(1)));
}

TEST_CASE("traffic ring generator") {
    auto net = make_traffic_ring({});
    REQUIRE(net.size() == 50);
    // tau v / l = (6.48 / 3600 h) * 100 km/h / 0.5 km
    const double flow = 6.48 / 3600.0 * 100.0 / 0.5;
    CHECK(flow == doctest::Approx(0.36));
    CHECK(net.subsystems[0].A(0, 0) == doctest::Approx(1.0 - flow - 0.25));
    CHECK(net.subsystems[0].D(0, 0) == doctest::Approx(flow));
    CHECK(net.subsystems[3].B(0, 0) == 6.0);
    CHECK(net.subsystems[3].R(0, 0) == 0.83);
    CHECK(net.G(0, 49) == 1.0);
    CHECK(net.G(5, 4) == 1.0);
    CHECK(net.G.sum() == 50.0);
    CHECK(validate_network(net).valid());
}

TEST_CASE("complete graph generator") {
    auto net = make_complete_graph({.nodes = 5});
    REQUIRE(net.size() == 5);
    CHECK(net.G(0, 1) == doctest::Approx(0.1));
    CHECK(net.G(2, 2) == doctest::Approx(-0.4));
    for (int i = 0; i < 5; ++i) CHECK(std::abs(net.G.row(i).sum()) < 1e-15);
    CHECK(net.subsystems[0].nonlinearity.has_value());
    CHECK(validate_network(net).valid());
}

}
