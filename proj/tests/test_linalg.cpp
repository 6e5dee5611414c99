#include "compabs/error.hpp"
#include "compabs/linalg.hpp"

#include "doctest.h"

#include <limits>

using namespace compabs;

TEST_SUITE("linalg") {

TEST_CASE("psd_check on a diagonal residual") {
    Matrix S(2, 2);
    S << 0.0387, 0, 0, 0;
    auto r = psd_check(S);
    CHECK(r.ok);
    CHECK(r.min_eigenvalue == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("psd_check rejects negative identity") {
    auto r = psd_check(-Matrix::Identity(3, 3));
    CHECK_FALSE(r.ok);
    CHECK(r.min_eigenvalue == doctest::Approx(-1.0));
}

TEST_CASE("zero matrix is psd") {
    auto r = psd_check(Matrix::Zero(4, 4));
    CHECK(r.ok);
    CHECK(r.min_eigenvalue == 0.0);
}

TEST_CASE("psd_check symmetrizes first") {
    // (S + S^T)/2 = [[1, 0], [0, 1]]
    Matrix S(2, 2);
    S << 1, 3, -3, 1;
    CHECK(psd_check(S).ok);
    CHECK(psd_check(S).min_eigenvalue == doctest::Approx(1.0));
}

TEST_CASE("tolerance is absolute on the smallest eigenvalue") {
    Matrix S = Matrix::Identity(2, 2);
    S(1, 1) = -1e-10;
    CHECK(psd_check(S, 1e-9).ok);
    CHECK_FALSE(psd_check(S, 1e-11).ok);
}

TEST_CASE("non-finite entries throw") {
    Matrix S = Matrix::Identity(2, 2);
    S(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(psd_check(S), InvalidArgument);
    S(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(psd_check(S), InvalidArgument);
}

TEST_CASE("block_diagonal and spectral radius") {
    Matrix a = Matrix::Constant(1, 1, 2.0);
    Matrix b(2, 2);
    b << 0, -3, -3, 0;
    Matrix d = block_diagonal({a, b});
    REQUIRE(d.rows() == 3);
    CHECK(d(0, 0) == 2.0);
    CHECK(d(1, 2) == -3.0);
    CHECK(d(0, 1) == 0.0);
    CHECK(spectral_radius(d) == doctest::Approx(3.0));
    CHECK(max_eigenvalue_sym(d) == doctest::Approx(3.0));
    CHECK(min_eigenvalue_sym(d) == doctest::Approx(-3.0));
}

}
