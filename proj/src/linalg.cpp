#include "compabs/linalg.hpp"

#include "compabs/error.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace compabs {

bool all_finite(const Matrix& S) { return S.allFinite(); }

namespace {

Eigen::VectorXd sym_eigenvalues(const Matrix& S) {
    if (S.rows() != S.cols()) throw DimensionError("eigenvalues of a non-square matrix");
    if (!S.allFinite()) throw InvalidArgument("matrix has NaN or Inf entries");
    if (S.size() == 0) return Eigen::VectorXd();
    Matrix sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

}  // namespace

double min_eigenvalue_sym(const Matrix& S) {
    auto ev = sym_eigenvalues(S);
    return ev.size() ? ev.minCoeff() : 0.0;
}

double max_eigenvalue_sym(const Matrix& S) {
    auto ev = sym_eigenvalues(S);
    return ev.size() ? ev.maxCoeff() : 0.0;
}

PsdResult psd_check(const Matrix& S, double tol) {
    PsdResult r;
    r.min_eigenvalue = min_eigenvalue_sym(S);
    r.ok = r.min_eigenvalue >= -tol;
    return r;
}

double spectral_radius(const Matrix& S) {
    if (S.rows() != S.cols()) throw DimensionError("spectral radius of a non-square matrix");
    if (!S.allFinite()) throw InvalidArgument("matrix has NaN or Inf entries");
    if (S.size() == 0) return 0.0;
    if ((S - S.transpose()).cwiseAbs().maxCoeff() == 0.0) {
        auto ev = sym_eigenvalues(S);
        return ev.cwiseAbs().maxCoeff();
    }
    Eigen::EigenSolver<Matrix> es(S, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Matrix out = Matrix::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

}  // namespace compabs
