#include "compabs/synthesis.hpp"

#include "compabs/error.hpp"
#include "compabs/parallel.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace compabs {

std::size_t Policy::input(int j, std::size_t x) const {
    if (j < 0 || j >= horizon || x >= n_states) return 0;
    return table[static_cast<std::size_t>(j) * n_states + x];
}

std::vector<bool> safe_cells(const Partition& states, const IntervalBox& safe_box) {
    if (safe_box.dim() != states.dim()) throw DimensionError("safe box dimension differs from the state partition");
    std::vector<bool> s(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) s[i] = safe_box.contains(states.cell_box(i), 1e-12);
    return s;
}

SafetyResult safety_value_iteration(const FiniteMDP& mdp, const SafetySpec& spec, unsigned threads) {
    if (spec.horizon < 0) throw InvalidArgument("horizon must be nonnegative");
    return safety_value_iteration(mdp, safe_cells(mdp.states, spec.safe_box), spec.horizon, threads);
}

SafetyResult safety_value_iteration(const FiniteMDP& mdp, const std::vector<bool>& safe, int horizon,
                                    unsigned threads, std::optional<std::size_t> fixed_w) {
    const std::size_t nx = mdp.n_x(), nu = mdp.n_nu(), nw = mdp.n_w();
    if (safe.size() != nx) throw DimensionError("safe flags differ from the number of states");
    if (horizon < 0) throw InvalidArgument("horizon must be nonnegative");
    if (fixed_w && *fixed_w >= nw) throw InvalidArgument("fixed adversary index out of range");
    if (mdp.T.size() != mdp.rows() * mdp.cols()) throw DimensionError("MDP tensor is not loaded");

    SafetyResult res;
    res.safe = safe;
    res.policy.n_states = nx;
    res.policy.horizon = horizon;
    res.policy.table.assign(static_cast<std::size_t>(horizon) * nx, 0);
    res.values.assign(static_cast<std::size_t>(horizon) + 1, std::vector<double>(nx, 0.0));
    for (std::size_t x = 0; x < nx; ++x) res.values[horizon][x] = safe[x] ? 1.0 : 0.0;

    for (int j = horizon - 1; j >= 0; --j) {
        const auto& next = res.values[j + 1];
        auto& cur = res.values[j];
        auto* pol = res.policy.table.data() + static_cast<std::size_t>(j) * nx;
        parallel_for(nx, threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t x = b; x < e; ++x) {
                if (!safe[x]) continue;
                double best = -1.0;
                std::uint32_t arg = 0;
                for (std::size_t u = 0; u < nu; ++u) {
                    double worst = std::numeric_limits<double>::infinity();
                    std::size_t w0 = fixed_w ? *fixed_w : 0, w1 = fixed_w ? *fixed_w + 1 : nw;
                    for (std::size_t w = w0; w < w1; ++w) {
                        const double* row = mdp.row(x, u, w);
                        double s = 0.0;
                        for (std::size_t c = 0; c < nx; ++c) s += row[c] * next[c];
                        if (s < worst) worst = s;
                    }
                    if (worst > best) {
                        best = worst;
                        arg = static_cast<std::uint32_t>(u);
                    }
                }
                cur[x] = std::clamp(best, 0.0, 1.0);
                pol[x] = arg;
            }
        });
    }
    return res;
}

RefinedController::RefinedController(Policy policy, Matrix K, Partition states, Partition inputs, int stride)
    : policy_(std::move(policy)), K_(std::move(K)), states_(std::move(states)), inputs_(std::move(inputs)),
      stride_(stride) {
    if (stride_ < 1) throw InvalidArgument("stride must be at least 1");
    if (K_.size() == 0) K_ = Matrix::Zero(inputs_.dim(), states_.dim());
    if (K_.rows() != inputs_.dim() || K_.cols() != states_.dim())
        throw DimensionError("refine_policy: K does not match the state/input partitions");
}

Vector RefinedController::abstract_input(int j, const Vector& xhat) const {
    auto cell = pi_map(states_, xhat);
    std::size_t idx = cell.in_box() ? policy_.input(j, cell.index) : 0;
    return inputs_.representative(idx);
}

Vector RefinedController::interface(const Vector& x, const Vector& xhat, const Vector& nuhat) const {
    return K_ * (x - xhat) + nuhat;
}

Vector RefinedController::operator()(int k, const Vector& x, const Vector& xhat) const {
    if (!input_time(k)) return Vector::Zero(inputs_.dim());
    return interface(x, xhat, abstract_input(k / stride_, xhat));
}

RefinedController refine_policy(const Policy& policy, const StorageCertificate& cert, const Partition& states,
                                const Partition& inputs, int stride) {
    return RefinedController(policy, cert.K, states, inputs, stride);
}

namespace {

std::string join(const Vector& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
    return os.str();
}

}  // namespace

void write_policy_csv(const SafetyResult& res, const Partition& inputs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "j,cell,input_index,input_value,value\n";
    out << std::setprecision(17);
    const auto& p = res.policy;
    for (int j = 0; j < p.horizon; ++j)
        for (std::size_t x = 0; x < p.n_states; ++x) {
            auto u = p.input(j, x);
            out << j << ',' << x << ',' << u << ',' << join(inputs.representative(u)) << ',' << res.values[j][x]
                << '\n';
        }
}

Policy read_policy_csv(const std::string& path, std::size_t n_states) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read policy " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("j,cell,input_index", 0) != 0) throw ConfigError("policy file has an unexpected header: " + path);
    struct Entry {
        int j;
        std::size_t x;
        std::uint32_t u;
    };
    std::vector<Entry> rows;
    int horizon = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        Entry e{std::stoi(a), std::stoul(b), static_cast<std::uint32_t>(std::stoul(c))};
        if (e.x >= n_states) throw ConfigError("policy refers to a state outside the partition");
        horizon = std::max(horizon, e.j + 1);
        rows.push_back(e);
    }
    Policy p;
    p.n_states = n_states;
    p.horizon = horizon;
    p.table.assign(static_cast<std::size_t>(horizon) * n_states, 0);
    for (const auto& e : rows) p.table[static_cast<std::size_t>(e.j) * n_states + e.x] = e.u;
    return p;
}

}  // namespace compabs
