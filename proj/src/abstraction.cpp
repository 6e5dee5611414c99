#include "compabs/abstraction.hpp"

#include "compabs/error.hpp"
#include "compabs/mdp_io.hpp"
#include "compabs/parallel.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace compabs {

Vector KernelModel::mean(const Vector& x, const Vector& nu, const Vector& w) const {
    Vector m = A * x + D * w;
    if (B.cols() > 0) m += B * nu;
    if (nonlinearity) {
        const auto& t = *nonlinearity;
        m += t.E.col(0) * t.eval_phi((t.F * x)(0));
    }
    return m;
}

KernelModel kernel_model(const AuxiliarySubsystem& aux) {
    return KernelModel{aux.A, aux.B, aux.D, aux.nonlinearity, aux_noise_covariance(aux)};
}

KernelModel kernel_model(const Subsystem& sub) {
    Vector var = sub.noise.std.array().square();
    return KernelModel{sub.A, sub.B, sub.D, sub.nonlinearity, sub.R * var.asDiagonal() * sub.R.transpose()};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_interval(double a, double b) {
    if (!(a < b)) return 0.0;
    const double s = 1.0 / std::sqrt(2.0);
    if (a >= 0.0) return 0.5 * (std::erfc(a * s) - std::erfc(b * s));
    if (b <= 0.0) return 0.5 * (std::erfc(-b * s) - std::erfc(-a * s));
    return 1.0 - 0.5 * std::erfc(-a * s) - 0.5 * std::erfc(b * s);
}

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kQuadLimit = 9.0;

double std_normal_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double eps, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    if (!(a < b)) return 0.0;
    // seed on a few panels so narrow peaks are not missed
    constexpr int kPanels = 8;
    double total = 0.0;
    std::vector<double> xs(kPanels + 1), fs(kPanels + 1);
    for (int i = 0; i <= kPanels; ++i) {
        xs[i] = a + (b - a) * i / kPanels;
        fs[i] = f(xs[i]);
    }
    std::vector<double> mids(kPanels), whole(kPanels);
    double rough = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        mids[i] = f(0.5 * (xs[i] + xs[i + 1]));
        whole[i] = (xs[i + 1] - xs[i]) / 6.0 * (fs[i] + 4.0 * mids[i] + fs[i + 1]);
        rough += whole[i];
    }
    double eps = std::max(rel_tol * std::abs(rough), 1e-15) / kPanels;
    for (int i = 0; i < kPanels; ++i)
        total += simpson_step(f, xs[i], xs[i + 1], fs[i], mids[i], fs[i + 1], whole[i], eps, 30);
    return total;
}

double box_level(int d, Vector& z, const Vector& mean, const Matrix& L, const Vector& lo, const Vector& hi,
                 double rel_tol) {
    const int n = static_cast<int>(mean.size());
    double shift = mean[d];
    for (int k = 0; k < d; ++k) shift += L(d, k) * z[k];
    double a = (lo[d] - shift) / L(d, d), b = (hi[d] - shift) / L(d, d);
    if (d == n - 1) return normal_interval(a, b);
    a = std::max(a, -kQuadLimit);
    b = std::min(b, kQuadLimit);
    if (!(a < b)) return 0.0;
    std::function<double(double)> f = [&](double t) {
        z[d] = t;
        return std_normal_pdf(t) * box_level(d + 1, z, mean, L, lo, hi, rel_tol);
    };
    return adaptive_simpson(f, a, b, rel_tol);
}

std::string format_gb(const MemoryEstimate& m) {
    std::ostringstream os;
    os.precision(6);
    os << m.gigabytes << " GB";
    return os.str();
}

struct RowContext {
    const KernelModel& model;
    const Partition &X, &U, &W;
    std::vector<Vector> xr, ur, wr;
    RowKernel kernel;

    RowContext(const KernelModel& m, const Partition& x, const Partition& u, const Partition& w, double tol)
        : model(m), X(x), U(u), W(w), kernel(m, x, tol) {
        for (std::size_t i = 0; i < X.size(); ++i) xr.push_back(X.representative(i));
        for (std::size_t i = 0; i < U.size(); ++i) ur.push_back(U.representative(i));
        for (std::size_t i = 0; i < W.size(); ++i) wr.push_back(W.representative(i));
    }

    void fill(std::size_t row, double* out) const {
        const std::size_t nw = W.size(), nu = U.size();
        const std::size_t w = row % nw, u = (row / nw) % nu, x = row / (nw * nu);
        kernel.fill(model.mean(xr[x], ur[u], wr[w]), out);
    }
};

void check_model_shape(const KernelModel& m, const Partition& X, const Partition& U, const Partition& W) {
    if (m.A.rows() != X.dim() || m.A.cols() != X.dim()) throw DimensionError("build_mdp: A does not match the state partition");
    if (m.B.rows() != X.dim() || m.B.cols() != U.dim()) throw DimensionError("build_mdp: B does not match the input partition");
    if (m.D.rows() != X.dim() || m.D.cols() != W.dim())
        throw DimensionError("build_mdp: D does not match the internal-input partition");
    if (m.covariance.rows() != X.dim() || m.covariance.cols() != X.dim())
        throw DimensionError("build_mdp: covariance does not match the state partition");
}

double row_error(const double* row, std::size_t cols) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += row[c];
    return std::abs(s - 1.0);
}

}  // namespace

double gaussian_box_probability(const Vector& mean, const Matrix& L, const Vector& lo, const Vector& hi,
                                double rel_tol) {
    if (mean.size() == 0) return 1.0;
    Vector z = Vector::Zero(mean.size());
    return box_level(0, z, mean, L, lo, hi, rel_tol);
}

RowKernel::RowKernel(const KernelModel& model, const Partition& states, double rel_tol)
    : states_(states), rel_tol_(rel_tol) {
    const Matrix& C = model.covariance;
    const int n = states.dim();
    if (C.rows() != n || C.cols() != n) throw DimensionError("kernel: covariance does not match the state partition");
    double scale = n ? C.diagonal().cwiseAbs().maxCoeff() : 0.0;
    for (int i = 0; i < n && diagonal_; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && std::abs(C(i, j)) > 1e-15 * scale) {
                diagonal_ = false;
                break;
            }
    Vector w = states.widths();
    if (diagonal_) {
        std_ = C.diagonal().cwiseMax(0.0).cwiseSqrt();
        for (int d = 0; d < n; ++d)
            if (std_[d] == 0.0 && w[d] > 0.0)
                throw DegenerateNoise("zero noise variance in a state dimension with nonzero cell span");
    } else {
        Eigen::LLT<Matrix> llt(C);
        if (llt.info() != Eigen::Success) throw DegenerateNoise("noise covariance is singular");
        chol_ = llt.matrixL();
        for (int d = 0; d < n; ++d)
            if (!(chol_(d, d) > 1e-300)) throw DegenerateNoise("noise covariance is singular");
    }
}

void RowKernel::fill(const Vector& mean, double* out) const {
    const int n = states_.dim();
    const std::size_t cells = states_.size();
    if (diagonal_) {
        std::vector<std::vector<double>> per(n);
        for (int d = 0; d < n; ++d) {
            const std::size_t nd = states_.cells_per_dim[d];
            auto& p = per[d];
            p.resize(nd);
            const double s = std_[d];
            if (s == 0.0) {  // zero-width dimension
                p[0] = mean[d] == states_.box.lower[d] ? 1.0 : 0.0;
                continue;
            }
            double za = (states_.cell_lower(d, 0) - mean[d]) / s;
            for (std::size_t k = 0; k < nd; ++k) {
                double zb = (states_.cell_upper(d, k) - mean[d]) / s;
                p[k] = normal_interval(za, zb);
                za = zb;
            }
        }
        if (n == 1) {
            std::copy(per[0].begin(), per[0].end(), out);
        } else {
            out[0] = 1.0;
            std::size_t len = 1;
            std::vector<double> tmp;
            for (int d = 0; d < n; ++d) {
                tmp.assign(out, out + len);
                const auto& p = per[d];
                for (std::size_t i = 0; i < len; ++i)
                    for (std::size_t k = 0; k < p.size(); ++k) out[i * p.size() + k] = tmp[i] * p[k];
                len *= p.size();
            }
        }
    } else {
        for (std::size_t c = 0; c < cells; ++c) {
            IntervalBox b = states_.cell_box(c);
            out[c] = gaussian_box_probability(mean, chol_, b.lower, b.upper, rel_tol_);
        }
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < cells; ++c) sum += out[c];
    if (sum > 1.0) {
        for (std::size_t c = 0; c < cells; ++c) out[c] /= sum;
        out[cells] = 0.0;
    } else {
        out[cells] = 1.0 - sum;
    }
}

namespace {

bool mul_checked(unsigned __int128& acc, std::uint64_t v) {
    unsigned __int128 r;
    if (__builtin_mul_overflow(acc, static_cast<unsigned __int128>(v), &r)) return false;
    acc = r;
    return true;
}

MemoryEstimate estimate_from(const std::vector<std::uint64_t>& factors) {
    MemoryEstimate m;
    unsigned __int128 acc = 1;
    long double approx = 1.0L;
    for (auto f : factors) {
        if (f == 0) throw InvalidArgument("memory_estimate: counts must be positive");
        approx *= static_cast<long double>(f);
        if (m.exact && !mul_checked(acc, f)) m.exact = false;
    }
    m.bytes = m.exact ? static_cast<long double>(acc) : approx;
    m.gigabytes = static_cast<double>(m.bytes / 1e9L);
    return m;
}

}  // namespace

MemoryEstimate memory_estimate(std::uint64_t n_x, std::uint64_t n_nu, std::uint64_t n_w, std::uint64_t bytes) {
    return estimate_from({n_x, n_w, n_nu, n_x, bytes});
}

MemoryEstimate monolithic_memory_estimate(const std::vector<std::uint64_t>& n_x, const std::vector<std::uint64_t>& n_nu,
                                          std::uint64_t bytes) {
    std::vector<std::uint64_t> f;
    for (auto v : n_x) f.push_back(v);
    for (auto v : n_nu) f.push_back(v);
    for (auto v : n_x) f.push_back(v);
    f.push_back(bytes);
    return estimate_from(f);
}

FiniteMDP build_mdp(const KernelModel& model, const Partition& X, const Partition& U, const Partition& W,
                    const BuildOptions& opts, MdpProvenance prov) {
    check_model_shape(model, X, U, W);
    FiniteMDP mdp{X, U, W, {}, std::move(prov)};
    auto need = estimate_from({mdp.rows(), mdp.cols(), 8});
    if (need.bytes > static_cast<long double>(opts.budget_bytes)) {
        auto est = memory_estimate(X.size(), U.size(), W.size());
        throw BudgetExceeded("transition tensor needs " + format_gb(need) + " (memory model " + format_gb(est) +
                             "), above the budget of " + format_gb(estimate_from({opts.budget_bytes})));
    }
    RowContext ctx(model, X, U, W, opts.quadrature_rel_tol);
    mdp.T.assign(mdp.rows() * mdp.cols(), 0.0);
    const std::size_t cols = mdp.cols();
    parallel_for(mdp.rows(), opts.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) ctx.fill(r, mdp.T.data() + r * cols);
    });
    return mdp;
}

StreamStats build_mdp_to_file(const KernelModel& model, const Partition& X, const Partition& U, const Partition& W,
                              const std::string& path, const BuildOptions& opts, MdpProvenance prov) {
    check_model_shape(model, X, U, W);
    FiniteMDP shape{X, U, W, {}, std::move(prov)};
    RowContext ctx(model, X, U, W, opts.quadrature_rel_tol);
    MdpWriter writer(path, shape);
    const std::size_t cols = shape.cols(), rows = shape.rows();
    const std::size_t block = std::max<std::size_t>(1, (std::size_t{1} << 22) / cols);
    std::vector<double> buf(block * cols);
    StreamStats st;
    for (std::size_t start = 0; start < rows; start += block) {
        const std::size_t count = std::min(block, rows - start);
        std::vector<double> errs(count);
        parallel_for(count, opts.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t r = b; r < e; ++r) {
                ctx.fill(start + r, buf.data() + r * cols);
                errs[r] = row_error(buf.data() + r * cols, cols);
            }
        });
        for (double e : errs) st.max_row_error = std::max(st.max_row_error, e);
        writer.write_rows(buf.data(), count);
        st.rows += count;
    }
    st.bytes = writer.finish();
    return st;
}

}  // namespace compabs
