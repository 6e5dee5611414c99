#include "compabs/msample.hpp"

#include "compabs/error.hpp"

#include <cmath>

namespace compabs {

namespace {

std::vector<int> input_offsets(const Network& net) {
    std::vector<int> off(net.size() + 1, 0);
    for (int i = 0; i < net.size(); ++i) off[i + 1] = off[i] + net.subsystems[i].m();
    return off;
}

void require_linear(const Network& net, const char* what) {
    if (!net.is_linear()) throw UnsupportedModel(std::string(what) + ": network has a nonlinear subsystem");
    auto rep = validate_network(net);
    if (!rep.dimensions_ok) throw DimensionError(std::string(what) + ": " + rep.errors.front());
}

}  // namespace

std::vector<int> AuxiliaryNetwork::state_offsets() const {
    std::vector<int> off(subsystems.size() + 1, 0);
    for (std::size_t i = 0; i < subsystems.size(); ++i) off[i + 1] = off[i] + subsystems[i].n();
    return off;
}

std::vector<int> AuxiliaryNetwork::internal_offsets() const {
    std::vector<int> off(subsystems.size() + 1, 0);
    for (std::size_t i = 0; i < subsystems.size(); ++i) off[i + 1] = off[i] + subsystems[i].p();
    return off;
}

Matrix closed_matrix(const Network& net) {
    require_linear(net, "closed_matrix");
    std::vector<Matrix> as, ds;
    for (const auto& s : net.subsystems) {
        as.push_back(s.A);
        ds.push_back(s.D);
    }
    return block_diagonal(as) + block_diagonal(ds) * net.G;
}

AuxiliaryNetwork msample_network(const Network& net, int M) {
    if (M < 1) throw InvalidArgument("msample: M must be at least 1");
    Matrix phi = closed_matrix(net);
    const int total = net.total_states();
    const auto xo = net.state_offsets();
    const auto qo = net.noise_offsets();

    std::vector<Matrix> rs;
    for (const auto& s : net.subsystems) rs.push_back(s.R);
    const Matrix Rbar = block_diagonal(rs);

    // powers[t] = phi^t, t = 0..M
    std::vector<Matrix> powers(M + 1);
    powers[0] = Matrix::Identity(total, total);
    for (int t = 1; t <= M; ++t) powers[t] = phi * powers[t - 1];

    AuxiliaryNetwork out;
    out.steps = M;
    out.propagated = powers[M];
    out.Ga = powers[M];

    std::vector<IntervalBox> xs;
    for (const auto& s : net.subsystems) xs.push_back(s.state_box);
    const IntervalBox xprod = product(xs);

    for (int i = 0; i < net.size(); ++i) {
        const auto& s = net.subsystems[i];
        const int n = s.n();
        AuxiliarySubsystem a;
        a.steps = M;
        a.A = powers[M].block(xo[i], xo[i], n, n);
        a.B = s.B;
        a.D = Matrix::Identity(n, n);
        a.state_box = s.state_box;
        a.ext_input_box = s.ext_input_box;
        out.Ga.block(xo[i], xo[i], n, n).setZero();

        // Coefficient of noise_j(k+t) in x_i(k+M) is block (i,j) of phi^(M-1-t) R_bar.
        std::vector<Vector> cols;
        std::vector<double> stds;
        for (int j = 0; j < net.size(); ++j) {
            const auto& sj = net.subsystems[j];
            for (int t = 0; t < M; ++t) {
                Matrix gain = (powers[M - 1 - t] * Rbar).block(xo[i], qo[j], n, sj.q());
                for (int c = 0; c < sj.q(); ++c) {
                    Vector col = gain.col(c);
                    if (j != i && col.cwiseAbs().maxCoeff() == 0.0) continue;
                    cols.push_back(col);
                    stds.push_back(sj.noise.std[c]);
                    a.noise_layout.push_back({j, t, c});
                }
            }
        }
        a.R = Matrix(n, static_cast<Eigen::Index>(cols.size()));
        a.noise_std = Vector(static_cast<Eigen::Index>(stds.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            a.R.col(c) = cols[c];
            a.noise_std[c] = stds[c];
        }
        out.subsystems.push_back(std::move(a));
    }

    const auto off = out.state_offsets();
    for (int i = 0; i < out.size(); ++i) {
        const int n = out.subsystems[i].n();
        out.subsystems[i].int_input_box = interval_image(out.Ga.middleRows(off[i], n), xprod);
    }
    return out;
}

AuxiliaryNetwork one_step_view(const Network& net) {
    auto rep = validate_network(net);
    if (!rep.dimensions_ok) throw DimensionError("one_step_view: " + rep.errors.front());
    AuxiliaryNetwork out;
    out.steps = 1;
    out.Ga = net.G;
    for (int i = 0; i < net.size(); ++i) {
        const auto& s = net.subsystems[i];
        AuxiliarySubsystem a;
        a.A = s.A;
        a.B = s.B;
        a.D = s.D;
        a.R = s.R;
        a.noise_std = s.noise.std;
        for (int c = 0; c < s.q(); ++c) a.noise_layout.push_back({i, 0, c});
        a.state_box = s.state_box;
        a.ext_input_box = s.ext_input_box;
        a.int_input_box = s.int_input_box;
        a.steps = 1;
        a.nonlinearity = s.nonlinearity;
        out.subsystems.push_back(std::move(a));
    }
    return out;
}

AuxiliaryNetwork auxiliary_view(const Network& net, int M) {
    return M == 1 ? one_step_view(net) : msample_network(net, M);
}

Matrix aux_noise_covariance(const AuxiliarySubsystem& aux) {
    if (aux.noise_std.size() != aux.R.cols()) throw DimensionError("aux_noise_covariance: layout and R~ disagree");
    Vector var = aux.noise_std.array().square();
    return aux.R * var.asDiagonal() * aux.R.transpose();
}

Matrix aux_noise_covariance(const AuxiliarySubsystem& aux, const std::vector<Vector>& subsystem_std) {
    if (aux.noise_layout.size() != static_cast<std::size_t>(aux.R.cols()))
        throw DimensionError("aux_noise_covariance: layout and R~ disagree");
    Vector var(aux.R.cols());
    for (std::size_t c = 0; c < aux.noise_layout.size(); ++c) {
        const auto& t = aux.noise_layout[c];
        if (t.subsystem < 0 || t.subsystem >= static_cast<int>(subsystem_std.size()) ||
            t.component >= subsystem_std[t.subsystem].size())
            throw DimensionError("aux_noise_covariance: layout refers to a missing noise component");
        double s = subsystem_std[t.subsystem][t.component];
        var[c] = s * s;
    }
    return aux.R * var.asDiagonal() * aux.R.transpose();
}

std::vector<double> block_spectral_radii(const AuxiliaryNetwork& aux) {
    std::vector<double> out;
    for (const auto& s : aux.subsystems) out.push_back(spectral_radius(s.A));
    return out;
}

Vector gather_noise(const AuxiliarySubsystem& aux, const std::vector<Vector>& window,
                    const std::vector<int>& noise_offsets) {
    Vector v(static_cast<Eigen::Index>(aux.noise_layout.size()));
    for (std::size_t c = 0; c < aux.noise_layout.size(); ++c) {
        const auto& t = aux.noise_layout[c];
        v[c] = window.at(t.offset)[noise_offsets.at(t.subsystem) + t.component];
    }
    return v;
}

OracleTrace oracle_simulate(const Network& net, const AuxiliaryNetwork& aux, const Vector& x0,
                            const std::vector<Vector>& inputs, const std::vector<Vector>& noise, int J) {
    const int M = aux.steps;
    const auto xo = net.state_offsets();
    const auto wo = net.internal_offsets();
    const auto qo = net.noise_offsets();
    const auto uo = input_offsets(net);
    const auto ao = aux.internal_offsets();
    if (x0.size() != net.total_states()) throw DimensionError("oracle_simulate: x0 has the wrong size");
    if (aux.size() != net.size()) throw DimensionError("oracle_simulate: network sizes differ");
    const std::size_t K = static_cast<std::size_t>(J) * M;
    if (inputs.size() < K || noise.size() < K) throw DimensionError("oracle_simulate: too few input/noise samples");
    for (std::size_t k = 0; k < K; ++k) {
        if (inputs[k].size() != uo.back() || noise[k].size() != qo.back())
            throw DimensionError("oracle_simulate: input or noise sample has the wrong size");
        if (static_cast<int>(k % M) != M - 1 && inputs[k].size() > 0 && inputs[k].cwiseAbs().maxCoeff() != 0.0)
            throw InvalidArgument("oracle_simulate: external input must vanish except at k = jM+M-1");
    }

    OracleTrace tr;
    Vector x = x0, xa = x0;
    tr.original.push_back(x);
    tr.auxiliary.push_back(xa);
    for (int j = 0; j < J; ++j) {
        for (int t = 0; t < M; ++t) {
            const std::size_t k = static_cast<std::size_t>(j) * M + t;
            Vector w = net.G * x;
            Vector next(x.size());
            for (int i = 0; i < net.size(); ++i) {
                const auto& s = net.subsystems[i];
                next.segment(xo[i], s.n()) =
                    eval_dynamics(s, x.segment(xo[i], s.n()), inputs[k].segment(uo[i], s.m()),
                                  w.segment(wo[i], s.p()), noise[k].segment(qo[i], s.q()));
            }
            x = next;
        }
        std::vector<Vector> window(noise.begin() + static_cast<long>(j) * M, noise.begin() + static_cast<long>(j + 1) * M);
        const Vector& u = inputs[static_cast<std::size_t>(j) * M + M - 1];
        Vector wa = aux.Ga * xa;
        Vector next(xa.size());
        for (int i = 0; i < aux.size(); ++i) {
            const auto& a = aux.subsystems[i];
            Vector v = a.A * xa.segment(xo[i], a.n()) + a.D * wa.segment(ao[i], a.p()) +
                       a.R * gather_noise(a, window, qo);
            if (a.m() > 0) v += a.B * u.segment(uo[i], a.m());
            next.segment(xo[i], a.n()) = v;
        }
        xa = next;
        tr.original.push_back(x);
        tr.auxiliary.push_back(xa);
        tr.max_deviation = std::max(tr.max_deviation, (x - xa).cwiseAbs().maxCoeff());
    }
    return tr;
}

}  // namespace compabs
