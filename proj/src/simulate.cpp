#include "compabs/simulate.hpp"

#include "compabs/error.hpp"
#include "compabs/parallel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace compabs {

WilsonInterval wilson_interval(std::size_t k, std::size_t n, double z) {
    if (n == 0) throw InvalidArgument("wilson_interval: no trials");
    const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn, z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    // the closed form leaves rounding residue at the ends
    return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t run) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (run + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

struct RunResult {
    bool exceeded = false;
    std::vector<char> safe;
    std::vector<TrajectoryRow> rows;
};

RunResult simulate_run(const SimulationSetup& s, std::size_t run, bool record) {
    const Network& net = *s.net;
    const AuxiliaryNetwork& aux = *s.aux;
    const int N = net.size(), M = aux.steps;
    const auto xo = net.state_offsets(), wo = net.internal_offsets(), qo = net.noise_offsets();
    const auto ao = aux.internal_offsets();
    const int nq = qo.back();

    std::mt19937_64 rng(run_seed(s.seed, run));
    std::normal_distribution<double> normal(0.0, 1.0);

    RunResult out;
    out.safe.assign(N, 1);
    Vector x = s.x0, xh(x.size());
    for (int i = 0; i < N; ++i) {
        const int n = net.subsystems[i].n();
        xh.segment(xo[i], n) = quantize_lattice(s.parts[i].states, x.segment(xo[i], n));
    }

    auto observe = [&](int j, const std::vector<Vector>& nus) {
        if ((x - xh).norm() >= s.eps) out.exceeded = true;
        for (int i = 0; i < N; ++i) {
            const int n = net.subsystems[i].n();
            const auto& sb = s.parts[i].safe_box;
            if (sb && !sb->contains(Vector(x.segment(xo[i], n)))) out.safe[i] = 0;
            if (record)
                out.rows.push_back({run, j * M, i, x.segment(xo[i], n), xh.segment(xo[i], n), nus[i]});
        }
    };

    std::vector<Vector> nuhat(N), nu(N);
    for (int i = 0; i < N; ++i) nu[i] = Vector::Zero(net.subsystems[i].m());

    for (int j = 0; j < s.horizon; ++j) {
        for (int i = 0; i < N; ++i) {
            const auto& sub = net.subsystems[i];
            const auto& ctl = s.parts[i].controller;
            if (ctl) {
                nuhat[i] = ctl->abstract_input(j, xh.segment(xo[i], sub.n()));
                nu[i] = ctl->interface(x.segment(xo[i], sub.n()), xh.segment(xo[i], sub.n()), nuhat[i]);
            } else {
                nuhat[i] = Vector::Zero(sub.m());
                nu[i] = nuhat[i];
            }
        }
        observe(j, nu);

        std::vector<Vector> window(M, Vector(nq));
        for (int t = 0; t < M; ++t)
            for (int i = 0; i < N; ++i) {
                const auto& sd = net.subsystems[i].noise.std;
                for (int c = 0; c < sd.size(); ++c) window[t][qo[i] + c] = sd[c] * normal(rng);
            }

        for (int t = 0; t < M; ++t) {
            Vector w = net.G * x;
            Vector next(x.size());
            for (int i = 0; i < N; ++i) {
                const auto& sub = net.subsystems[i];
                Vector u = t == M - 1 ? nu[i] : Vector::Zero(sub.m());
                next.segment(xo[i], sub.n()) = eval_dynamics(sub, x.segment(xo[i], sub.n()), u,
                                                             w.segment(wo[i], sub.p()),
                                                             window[t].segment(qo[i], sub.q()));
            }
            x = next;
        }

        Vector wa = aux.Ga * xh;
        Vector nh(xh.size());
        for (int i = 0; i < N; ++i) {
            const auto& a = aux.subsystems[i];
            Vector what = quantize_lattice(s.parts[i].int_inputs, wa.segment(ao[i], a.p()));
            Vector xi = xh.segment(xo[i], a.n());
            Vector m = a.A * xi + a.D * what + a.R * gather_noise(a, window, qo);
            if (a.m() > 0) m += a.B * nuhat[i];
            if (a.nonlinearity) m += a.nonlinearity->E.col(0) * a.nonlinearity->eval_phi((a.nonlinearity->F * xi)(0));
            nh.segment(xo[i], a.n()) = quantize_lattice(s.parts[i].states, m);
        }
        xh = nh;
    }
    for (int i = 0; i < N; ++i) nu[i] = Vector::Zero(net.subsystems[i].m());
    observe(s.horizon, nu);
    return out;
}

}  // namespace

MCReport coupled_simulate(const SimulationSetup& s) {
    if (s.runs == 0) throw InvalidArgument("coupled_simulate: runs must be positive");
    if (!s.net || !s.aux) throw InvalidArgument("coupled_simulate: network and auxiliary network are required");
    if (s.aux->size() != s.net->size() || static_cast<int>(s.parts.size()) != s.net->size())
        throw DimensionError("coupled_simulate: abstraction list does not match the network");
    if (s.x0.size() != s.net->total_states()) throw DimensionError("coupled_simulate: x0 has the wrong size");
    if (s.horizon < 0) throw InvalidArgument("coupled_simulate: horizon must be nonnegative");
    for (const auto& p : s.parts)
        if (p.controller && p.controller->stride() != s.aux->steps)
            throw InvalidArgument("coupled_simulate: controller stride differs from M");

    const int N = s.net->size();
    std::vector<char> exceeded(s.runs, 0);
    std::vector<std::vector<char>> safe(s.runs);
    std::vector<std::vector<TrajectoryRow>> rows(std::min(s.runs, s.recorded_runs));
    parallel_for(s.runs, s.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            bool rec = r < s.recorded_runs;
            auto res = simulate_run(s, r, rec);
            exceeded[r] = res.exceeded;
            safe[r] = std::move(res.safe);
            if (rec) rows[r] = std::move(res.rows);
        }
    });

    MCReport rep;
    rep.runs = s.runs;
    rep.seed = s.seed;
    for (char c : exceeded) rep.exceedances += c ? 1 : 0;
    rep.frequency = static_cast<double>(rep.exceedances) / static_cast<double>(s.runs);
    rep.wilson = wilson_interval(rep.exceedances, s.runs);
    rep.theoretical_bound = s.theoretical_bound;
    rep.slack = s.slack;
    rep.verdict = rep.wilson.upper <= s.theoretical_bound + s.slack;
    rep.safe_counts.assign(N, 0);
    for (const auto& v : safe)
        for (int i = 0; i < N; ++i) rep.safe_counts[i] += v[i] ? 1 : 0;
    for (int i = 0; i < N; ++i)
        rep.safety_frequency.push_back(static_cast<double>(rep.safe_counts[i]) / static_cast<double>(s.runs));
    for (auto& r : rows) rep.trajectories.insert(rep.trajectories.end(), r.begin(), r.end());
    return rep;
}

void emit_trajectories(const std::vector<TrajectoryRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    auto join = [](const Vector& v) {
        std::ostringstream os;
        os << std::setprecision(17);
        for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
        return os.str();
    };
    out << "run,k,subsystem,x,x_hat,nu\n";
    for (const auto& r : rows)
        out << r.run << ',' << r.k << ',' << r.subsystem << ',' << join(r.x) << ',' << join(r.xhat) << ','
            << join(r.nu) << '\n';
}

}  // namespace compabs
