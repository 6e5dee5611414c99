#include "commands.hpp"

#include "compabs/abstraction.hpp"
#include "compabs/config.hpp"
#include "compabs/error.hpp"
#include "compabs/hash.hpp"
#include "compabs/mdp_io.hpp"
#include "compabs/parallel.hpp"
#include "compabs/report.hpp"
#include "compabs/simulate.hpp"
#include "compabs/synthesis.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace compabs::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kInfeasible = 1;
constexpr int kUsage = 2;

std::string g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string g6(const Vector& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + g6(v[i]);
    return s + "]";
}

struct Common {
    std::string config;
    std::string out_dir;
    unsigned threads = 1;
    double tol = kDefaultPsdTol;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "Network, auxiliary or report config (JSON)");
    sub->add_option("--out-dir", c.out_dir, "Directory for artifacts and the run manifest");
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tol", c.tol, "PSD tolerance");
    sub->add_option("--seed", c.seed, "Random seed");
}

std::string timestamp() {
    std::time_t t;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
    else
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Manifest id covers version, command, parameters and input contents, never the timestamps.
class Manifest {
public:
    Manifest(std::string command, Json params) : command_(std::move(command)), params_(std::move(params)) {
        started_ = timestamp();
    }

    void input(const std::string& path) {
        if (path.empty()) return;
        inputs_.push_back({{"path", path}, {"hash", hex64(file_hash(path))}});
    }
    void artifact(const std::string& path) { artifacts_.push_back(path); }

    std::uint64_t id() const {
        std::uint64_t h = fnv1a64(COMPABS_VERSION);
        h = fnv1a64(command_, h);
        h = fnv1a64(params_.dump(), h);
        for (const auto& in : inputs_) h = fnv1a64(in.at("hash").get<std::string>(), h);
        return h;
    }
    std::string id_hex() const { return hex64(id()); }

    void write(const std::string& out_dir) const {
        if (out_dir.empty()) return;
        Json arts = Json::array();
        for (const auto& a : artifacts_)
            arts.push_back({{"path", fs::path(a).filename().string()}, {"hash", hex64(file_hash(a))}});
        Json j{{"tool_version", COMPABS_VERSION},
               {"manifest_id", id_hex()},
               {"command", command_},
               {"inputs", inputs_},
               {"parameters", params_},
               {"artifacts", arts},
               {"timestamps", {{"started", started_}, {"finished", timestamp()}}}};
        write_json_file(j, (fs::path(out_dir) / "manifest.json").string());
    }

private:
    std::string command_;
    Json params_;
    Json inputs_ = Json::array();
    std::vector<std::string> artifacts_;
    std::string started_;
};

std::string out_path(const Common& c, const std::string& name) {
    if (c.out_dir.empty()) return {};
    fs::create_directories(c.out_dir);
    return (fs::path(c.out_dir) / name).string();
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + " is required");
    if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

struct View {
    std::optional<Network> net;
    AuxiliaryNetwork aux;
};

Network checked_network(const Json& j) {
    Network net = network_from_json(j);
    auto rep = validate_network(net);
    if (!rep.dimensions_ok || !rep.errors.empty()) {
        std::string msg = "invalid network";
        for (const auto& e : rep.errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return net;
}

View load_view(const std::string& path, int steps) {
    require_file(path, "--config");
    Json j = read_json_file(path);
    View v;
    if (is_aux_config(j)) {
        v.aux = aux_from_json(j);
    } else {
        v.net = checked_network(j);
        v.aux = auxiliary_view(*v.net, steps);
    }
    return v;
}

Json params_json(std::initializer_list<std::pair<const char*, Json>> kv) {
    Json j = Json::object();
    for (const auto& [k, v] : kv) j[k] = v;
    return j;
}

// ---- net validate ----

int cmd_net_validate(const Common& c) {
    require_file(c.config, "--config");
    Network net = network_from_json(read_json_file(c.config));
    auto rep = validate_network(net);
    std::cout << "subsystems " << net.size() << "\n";
    std::cout << "dimensions " << (rep.dimensions_ok ? "ok" : "inconsistent") << "\n";
    for (const auto& e : rep.errors) std::cout << "error: " << e << "\n";
    if (rep.image.dim() > 0) {
        std::cout << "G*prod(X) lower " << g6(rep.image.lower) << "\n";
        std::cout << "G*prod(X) upper " << g6(rep.image.upper) << "\n";
        std::cout << "prod(W) lower " << g6(rep.target.lower) << "\n";
        std::cout << "prod(W) upper " << g6(rep.target.upper) << "\n";
    }
    std::cout << "well-posed " << (rep.well_posed ? "yes" : "no") << "\n";
    if (!rep.dimensions_ok || !rep.errors.empty()) return kUsage;
    return rep.well_posed ? kOk : kInfeasible;
}

// ---- msample ----

int cmd_msample(const Common& c, int steps) {
    require_file(c.config, "--config");
    Json j = read_json_file(c.config);
    Network net = checked_network(j);
    AuxiliaryNetwork aux = auxiliary_view(net, steps);
    Manifest man("msample", params_json({{"M", steps}}));
    man.input(c.config);
    auto radii = block_spectral_radii(aux);
    for (int i = 0; i < aux.size(); ++i) {
        const auto& a = aux.subsystems[i];
        std::cout << "subsystem " << i << ": A~ diag " << g6(Vector(a.A.diagonal())) << ", spectral radius "
                  << g6(radii[i]) << ", W~ [" << g6(a.int_input_box.lower) << ", " << g6(a.int_input_box.upper)
                  << "], noise terms " << a.q() << "\n";
    }
    std::cout << "Ga\n";
    for (Eigen::Index r = 0; r < aux.Ga.rows(); ++r) std::cout << "  " << g6(Vector(aux.Ga.row(r).transpose())) << "\n";
    if (auto p = out_path(c, "aux.json"); !p.empty()) {
        Json out = aux_to_json(aux, {hex64(file_hash(c.config)), steps});
        out["manifest_id"] = man.id_hex();
        write_json_file(out, p);
        man.artifact(p);
        man.write(c.out_dir);
        std::cout << "wrote " << p << "\n";
    }
    return kOk;
}

// ---- certificates ----

struct CertRun {
    View view;
    CertificateFile file;
    std::vector<CertificateReport> reports;
};

CertRun run_certificates(const Common& c, const std::string& certs_path, std::optional<int> steps_flag,
                         std::optional<double> delta) {
    require_file(certs_path, "--certs");
    require_file(c.config, "--config");
    Json j = read_json_file(c.config);
    CertRun run;
    // subsystem count comes from the config before the certificate file is parsed
    int n_sub = 0;
    if (is_aux_config(j))
        n_sub = static_cast<int>(j.at("subsystems").size());
    else
        n_sub = checked_network(j).size();
    run.file = load_certificates(certs_path, n_sub);
    int steps = steps_flag ? *steps_flag : run.file.steps.value_or(1);
    if (run.file.aux_path) {
        run.view.aux = aux_from_json(read_json_file(*run.file.aux_path));
        if (!is_aux_config(j)) run.view.net = checked_network(j);
    } else {
        run.view = load_view(c.config, steps);
    }
    if (run.view.aux.size() != n_sub) throw ConfigError("auxiliary model and config disagree on the subsystem count");
    for (int i = 0; i < n_sub; ++i) {
        StorageCertificate cand = run.file.certs[i];
        if (delta) cand.delta = *delta;
        const auto& a = run.view.aux.subsystems[i];
        CertificateReport rep;
        if (cand.kind == CertificateKind::NonlinearClassic)
            rep = check_nonlinear_stf(a, cand, c.tol);
        else
            rep = check_linear_fstf(a, cand, c.tol);
        run.reports.push_back(std::move(rep));
    }
    return run;
}

void print_cert_reports(const std::vector<CertificateReport>& reps) {
    constexpr std::size_t kShown = 10;
    std::size_t hidden = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const auto& r = reps[i];
        if (i >= kShown) {
            ++hidden;
            continue;
        }
        const auto& cert = r.certificate;
        std::cout << "subsystem " << i << " (" << to_string(cert.kind) << "): "
                  << (r.feasible ? "feasible" : "infeasible") << ", lambda_min residual " << g6(r.min_eigenvalue)
                  << ", psi " << g6(cert.psi) << ", kappa coefficient " << g6(cert.kappa_coeff) << "\n";
        for (const auto& issue : r.issues) std::cout << "  " << issue << "\n";
    }
    if (hidden) {
        std::size_t bad = 0;
        for (std::size_t i = kShown; i < reps.size(); ++i) bad += reps[i].feasible ? 0 : 1;
        std::cout << "... " << hidden << " more subsystems, " << bad << " of them infeasible\n";
    }
}

int cmd_cert_check(const Common& c, const std::string& certs_path, std::optional<int> steps,
                   std::optional<double> delta) {
    auto run = run_certificates(c, certs_path, steps, delta);
    print_cert_reports(run.reports);
    bool all = true;
    for (const auto& r : run.reports) all = all && r.feasible;
    std::cout << (all ? "all certificates feasible" : "some certificates are infeasible") << "\n";
    if (auto p = out_path(c, "cert_report.csv"); !p.empty()) {
        Manifest man("cert check", params_json({{"tol", c.tol}, {"delta", delta ? Json(*delta) : Json()}}));
        man.input(c.config);
        man.input(certs_path);
        std::ofstream out(p);
        out << "subsystem,kind,feasible,lambda_min,psi,psi_multiplier,kappa_coeff,alpha_coeff\n";
        out.precision(17);
        for (std::size_t i = 0; i < run.reports.size(); ++i) {
            const auto& r = run.reports[i];
            out << i << ',' << to_string(r.certificate.kind) << ',' << (r.feasible ? 1 : 0) << ','
                << r.min_eigenvalue << ',' << r.certificate.psi << ',' << r.certificate.psi_multiplier << ','
                << r.certificate.kappa_coeff << ',' << r.certificate.alpha_coeff << '\n';
        }
        out.close();
        man.artifact(p);
        man.write(c.out_dir);
    }
    return all ? kOk : kInfeasible;
}

// ---- compose check ----

struct ComposeFlags {
    std::optional<double> mu_bar, beta, alpha, eps, delta;
    std::optional<int> horizon, steps;
    double v0 = 0.0;
};

int cmd_compose_check(const Common& c, const std::string& certs_path, const ComposeFlags& f) {
    auto run = run_certificates(c, certs_path, f.steps, f.delta);
    const int n = run.view.aux.size();
    print_cert_reports(run.reports);
    ComposeParams p = run.file.compose.value_or(ComposeParams{Vector::Ones(n), 0.5, Vector::Zero(n), {}});
    if (f.mu_bar) p.mu_bar = *f.mu_bar;
    if (f.beta) p.beta = Vector::Constant(n, *f.beta);
    if (f.alpha) p.alpha_override = *f.alpha;
    if (p.mu.size() != n || p.beta.size() != n) throw ConfigError("compose: mu and beta need one entry per subsystem");

    std::vector<StorageCertificate> certs;
    bool all_feasible = true;
    for (const auto& r : run.reports) {
        certs.push_back(r.certificate);
        all_feasible = all_feasible && r.feasible;
    }
    auto cc = compose_fsf(certs, p.mu, p.mu_bar, p.beta, run.view.aux.Ga, run.view.aux.Ga, c.tol, p.alpha_override);
    std::cout << "lmi " << (cc.lmi_ok ? "holds" : "fails") << ", lambda_max(S) " << g6(cc.lmi_max_eigenvalue) << "\n";
    std::cout << "mu condition " << (cc.mu_cond_ok ? "holds" : "fails") << "\n";
    std::cout << "kappa_hat " << g6(cc.kappa_hat) << "\n";
    std::cout << "alpha coefficient " << g6(cc.alpha_coeff);
    if (cc.alpha_override) std::cout << " (override " << g6(*cc.alpha_override) << ")";
    std::cout << "\n";
    std::cout << "c_delta " << g6(cc.c_delta) << "\n";
    std::cout << "lambda_max(P) " << g6(cc.lambda_max_P) << ", rho(Xcmp) " << g6(cc.rho_xcmp)
              << (cc.rho_term_included ? " (included)" : " (not included)") << "\n";
    std::cout << "c_beta " << g6(cc.c_beta) << "\n";
    std::cout << "psi " << g6(cc.psi_candidate) << (cc.psi ? "" : " (candidate only)") << "\n";
    const bool certified = cc.certified() && all_feasible;
    if (f.eps && f.horizon) {
        auto b = closeness_bound(cc, f.v0, *f.eps, *f.horizon);
        std::cout << "bound " << g6(b.probability) << " (branch " << b.branch << ")"
                  << (certified ? "" : ", not certified") << "\n";
    }
    std::cout << (certified ? "certified" : "not certified") << "\n";
    if (auto path = out_path(c, "fsf.json"); !path.empty()) {
        Manifest man("compose check", params_json({{"mu", vector_to_json(p.mu)},
                                                   {"mu_bar", p.mu_bar},
                                                   {"beta", vector_to_json(p.beta)},
                                                   {"delta", f.delta ? Json(*f.delta) : Json()},
                                                   {"tol", c.tol}}));
        man.input(c.config);
        man.input(certs_path);
        FsfParameters fsf = fsf_from_composition(cc, "compose check");
        fsf.certified = certified;
        Json out = fsf_to_json(fsf);
        out["manifest_id"] = man.id_hex();
        write_json_file(out, path);
        man.artifact(path);
        man.write(c.out_dir);
    }
    return certified ? kOk : kInfeasible;
}

// ---- bound eval ----

int cmd_bound_eval(const std::string& fsf_path, double delta, double beta, double eps, int horizon, double v0) {
    require_file(fsf_path, "--fsf");
    auto fsf = fsf_from_json(read_json_file(fsf_path));
    auto b = fsf_bound(fsf, delta, beta, eps, v0, horizon);
    std::cout << "alpha(eps) " << g6(b.alpha_eps) << "\n";
    std::cout << "psi " << g6(b.psi_hat) << "\n";
    std::cout << "branch " << b.branch << "\n";
    std::cout << "bound " << g6(b.probability) << "\n";
    std::cout << "guarantee >= " << g6(1.0 - b.probability) << "\n";
    if (!fsf.certified) std::cout << "note: constants are not certified\n";
    return kOk;
}

// ---- abstraction ----

struct GridFlags {
    std::optional<double> delta, beta, theta;
    std::optional<std::size_t> cells_x, cells_u, cells_w;
};

Partition grid_for(const IntervalBox& box, std::optional<std::size_t> cells, std::optional<double> diam,
                   const char* what) {
    if (box.dim() == 0) return build_partition(box, std::vector<std::size_t>{});
    if (cells) return build_partition(box, std::vector<std::size_t>(box.dim(), *cells));
    if (diam) return build_partition(box, *diam);
    throw ConfigError(std::string("give either the discretization parameter or a cell count for ") + what);
}

struct Grids {
    Partition X, U, W;
};

Grids grids_for(const AuxiliarySubsystem& a, const GridFlags& g) {
    return {grid_for(a.state_box, g.cells_x, g.delta, "the state box"),
            grid_for(a.ext_input_box, g.cells_u, g.theta, "the external input box"),
            grid_for(a.int_input_box, g.cells_w, g.beta, "the internal input box")};
}

int cmd_abstract_build(const Common& c, int steps, int subsystem, const GridFlags& g, const std::string& out,
                       bool stream, double budget_gb) {
    auto view = load_view(c.config, steps);
    if (subsystem < 0 || subsystem >= view.aux.size()) throw ConfigError("--subsystem out of range");
    if (out.empty()) throw ConfigError("--out is required");
    const auto& a = view.aux.subsystems[subsystem];
    auto grids = grids_for(a, g);
    auto est = memory_estimate(grids.X.size(), grids.U.size(), grids.W.size());
    std::cout << "n_x " << grids.X.size() << ", n_nu " << grids.U.size() << ", n_w " << grids.W.size() << "\n";
    std::cout << "memory estimate " << g6(est.gigabytes) << " GB\n";

    Manifest man("abstract build", params_json({{"M", view.aux.steps},
                                                {"subsystem", subsystem},
                                                {"delta", grids.X.delta()},
                                                {"beta", grids.W.delta()},
                                                {"theta", grids.U.delta()},
                                                {"n_x", grids.X.size()},
                                                {"n_nu", grids.U.size()},
                                                {"n_w", grids.W.size()}}));
    man.input(c.config);
    MdpProvenance prov;
    prov.source_hash = man.id();
    prov.delta = grids.X.delta();
    prov.beta = grids.W.delta();
    prov.theta = grids.U.delta();
    prov.steps = static_cast<std::uint32_t>(view.aux.steps);
    prov.sigma = a.noise_std;
    BuildOptions opts;
    opts.threads = c.threads;
    opts.budget_bytes = static_cast<std::uint64_t>(budget_gb * 1e9);
    if (!stream && est.bytes > static_cast<long double>(opts.budget_bytes)) {
        std::cerr << "error: dense construction needs " << g6(est.gigabytes) << " GB, budget is " << g6(budget_gb)
                  << " GB (use --stream or a coarser grid)\n";
        return kUsage;
    }
    auto model = kernel_model(a);
    double max_err = 0.0;
    if (stream) {
        auto st = build_mdp_to_file(model, grids.X, grids.U, grids.W, out, opts, prov);
        max_err = st.max_row_error;
        std::cout << "rows " << st.rows << ", bytes " << st.bytes << "\n";
    } else {
        auto mdp = build_mdp(model, grids.X, grids.U, grids.W, opts, prov);
        for (std::size_t r = 0; r < mdp.rows(); ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < mdp.cols(); ++k) s += mdp.T[r * mdp.cols() + k];
            max_err = std::max(max_err, std::abs(s - 1.0));
        }
        save_mdp(mdp, out);
        std::cout << "rows " << mdp.rows() << ", bytes " << fs::file_size(out) << "\n";
    }
    std::cout << "max row-sum error " << g6(max_err) << "\n";
    man.artifact(out);
    if (!c.out_dir.empty()) {
        fs::create_directories(c.out_dir);
        man.write(c.out_dir);
    }
    return kOk;
}

int cmd_memory_estimate(const std::vector<std::uint64_t>& nx, std::vector<std::uint64_t> nu,
                        std::vector<std::uint64_t> nw) {
    if (nx.empty()) throw ConfigError("--nx is required");
    if (nu.empty()) nu.assign(nx.size(), 1);
    if (nw.empty()) nw.assign(nx.size(), 1);
    if (nu.size() == 1) nu.resize(nx.size(), nu[0]);
    if (nw.size() == 1) nw.resize(nx.size(), nw[0]);
    if (nu.size() != nx.size() || nw.size() != nx.size()) throw ConfigError("--nx, --nu and --nw lengths differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < nx.size(); ++i) {
        auto e = memory_estimate(nx[i], nu[i], nw[i]);
        worst = std::max(worst, e.gigabytes);
        if (nx.size() > 1) std::cout << "subsystem " << i << ": " << g6(e.gigabytes) << " GB\n";
    }
    if (nx.size() == 1) {
        std::cout << g6(worst) << " GB\n";
    } else {
        auto mono = monolithic_memory_estimate(nx, nu);
        std::cout << "largest subsystem " << g6(worst) << " GB\n";
        std::cout << "monolithic " << g6(mono.gigabytes) << " GB" << (mono.exact ? "" : " (approximate)") << "\n";
    }
    return kOk;
}

// ---- synthesis ----

int cmd_synthesize(const Common& c, const std::vector<std::string>& mdps, const std::vector<double>& lo,
                   const std::vector<double>& hi, int horizon, int stride) {
    if (mdps.empty()) throw ConfigError("--mdp is required");
    if (c.out_dir.empty()) throw ConfigError("--out-dir is required");
    if (horizon < 0) throw ConfigError("--horizon must be nonnegative");
    for (const auto& m : mdps) require_file(m, "--mdp");
    Vector l = Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    Vector h = Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    SafetySpec spec{IntervalBox(l, h), horizon, stride};
    Manifest man("synthesize safety", params_json({{"horizon", horizon},
                                                   {"stride", stride},
                                                   {"safe_lower", lo},
                                                   {"safe_upper", hi}}));
    for (const auto& m : mdps) man.input(m);
    for (std::size_t i = 0; i < mdps.size(); ++i) {
        FiniteMDP mdp = load_mdp(mdps[i]);
        if (mdp.states.dim() != spec.safe_box.dim()) throw ConfigError("safe box dimension differs from the MDP state");
        auto res = safety_value_iteration(mdp, spec, c.threads);
        double vmax = 0.0, vmin = 1.0;
        std::size_t n_safe = 0;
        for (std::size_t x = 0; x < mdp.n_x(); ++x) {
            if (!res.safe[x]) continue;
            ++n_safe;
            vmax = std::max(vmax, res.values[0][x]);
            vmin = std::min(vmin, res.values[0][x]);
        }
        auto path = out_path(c, "policy_" + std::to_string(i) + ".csv");
        write_policy_csv(res, mdp.ext_inputs, path);
        man.artifact(path);
        std::cout << "subsystem " << i << ": safe cells " << n_safe << "/" << mdp.n_x();
        if (n_safe) std::cout << ", safety value in [" << g6(vmin) << ", " << g6(vmax) << "]";
        std::cout << "\n";
    }
    man.write(c.out_dir);
    return kOk;
}

// ---- simulation ----

struct SimFlags {
    int steps = 1;
    GridFlags grid;
    std::string certs, fsf, trajectories;
    std::vector<std::string> policies;
    std::vector<double> x0, safe_lo, safe_hi;
    double eps = 1.0, v0 = 0.0, slack = 0.0;
    std::optional<double> bound, bound_delta, bound_beta;
    int horizon = 10;
    std::size_t runs = 1000, recorded = 0;
};

int cmd_simulate(const Common& c, const SimFlags& f) {
    require_file(c.config, "--config");
    Json j = read_json_file(c.config);
    if (is_aux_config(j)) throw ConfigError("simulate mc needs the original network config");
    Network net = checked_network(j);
    AuxiliaryNetwork aux = auxiliary_view(net, f.steps);
    const int n = net.size();
    if (!f.policies.empty() && static_cast<int>(f.policies.size()) != n)
        throw ConfigError("--policy needs one file per subsystem");
    std::optional<CertificateFile> certs;
    if (!f.certs.empty()) {
        require_file(f.certs, "--certs");
        certs = load_certificates(f.certs, n);
    }
    Vector x0;
    if (!f.x0.empty()) {
        x0 = Eigen::Map<const Vector>(f.x0.data(), static_cast<Eigen::Index>(f.x0.size()));
    } else if (j.contains("x0")) {
        x0 = vector_from_json(j.at("x0"), "x0");
    } else {
        throw ConfigError("give --x0 or an x0 field in the network config");
    }
    if (x0.size() == 1 && net.total_states() > 1) x0 = Vector::Constant(net.total_states(), x0[0]);

    SimulationSetup s;
    s.net = &net;
    s.aux = &aux;
    s.x0 = x0;
    s.horizon = f.horizon;
    s.eps = f.eps;
    s.seed = c.seed;
    s.runs = f.runs;
    s.threads = c.threads;
    s.slack = f.slack;
    s.recorded_runs = f.recorded;
    if (f.bound) {
        s.theoretical_bound = *f.bound;
    } else if (!f.fsf.empty()) {
        require_file(f.fsf, "--fsf");
        auto fsf = fsf_from_json(read_json_file(f.fsf));
        double d = f.bound_delta.value_or(f.grid.delta.value_or(0.0));
        double b = f.bound_beta.value_or(f.grid.beta.value_or(0.0));
        s.theoretical_bound = fsf_bound(fsf, d, b, f.eps, f.v0, f.horizon).probability;
    }
    for (int i = 0; i < n; ++i) {
        const auto& a = aux.subsystems[i];
        auto grids = grids_for(a, f.grid);
        SubsystemAbstraction part{grids.X, grids.W, std::nullopt, std::nullopt};
        if (!f.policies.empty()) {
            require_file(f.policies[i], "--policy");
            Policy pol = read_policy_csv(f.policies[i], grids.X.size());
            Matrix K = Matrix::Zero(a.m(), a.n());
            if (certs && certs->certs[i].K.size()) K = certs->certs[i].K;
            part.controller = RefinedController(pol, K, grids.X, grids.U, aux.steps);
        }
        if (!f.safe_lo.empty()) {
            Vector l = Eigen::Map<const Vector>(f.safe_lo.data(), static_cast<Eigen::Index>(f.safe_lo.size()));
            Vector h = Eigen::Map<const Vector>(f.safe_hi.data(), static_cast<Eigen::Index>(f.safe_hi.size()));
            part.safe_box = IntervalBox(l, h);
        }
        s.parts.push_back(std::move(part));
    }
    auto rep = coupled_simulate(s);
    std::cout << "runs " << rep.runs << ", seed " << rep.seed << "\n";
    std::cout << "exceedances " << rep.exceedances << ", frequency " << g6(rep.frequency) << "\n";
    std::cout << "wilson 95% [" << g6(rep.wilson.lower) << ", " << g6(rep.wilson.upper) << "]\n";
    std::cout << "theoretical bound " << g6(rep.theoretical_bound) << "\n";
    for (std::size_t i = 0; i < rep.safety_frequency.size(); ++i)
        if (s.parts[i].safe_box)
            std::cout << "subsystem " << i << " safety frequency " << g6(rep.safety_frequency[i]) << "\n";
    std::cout << "verdict " << (rep.verdict ? "consistent" : "bound exceeded") << "\n";
    if (!f.trajectories.empty() || !c.out_dir.empty()) {
        Manifest man("simulate mc", params_json({{"M", f.steps},
                                                 {"eps", f.eps},
                                                 {"Td", f.horizon},
                                                 {"runs", f.runs},
                                                 {"seed", c.seed},
                                                 {"x0", f.x0}}));
        man.input(c.config);
        man.input(f.certs);
        for (const auto& p : f.policies) man.input(p);
        std::string tpath = f.trajectories.empty() ? out_path(c, "trajectories.csv") : f.trajectories;
        emit_trajectories(rep.trajectories, tpath);
        man.artifact(tpath);
        if (!c.out_dir.empty()) {
            Json summary{{"manifest_id", man.id_hex()},
                         {"runs", rep.runs},
                         {"seed", rep.seed},
                         {"exceedances", rep.exceedances},
                         {"frequency", rep.frequency},
                         {"wilson", {rep.wilson.lower, rep.wilson.upper}},
                         {"theoretical_bound", rep.theoretical_bound},
                         {"verdict", rep.verdict},
                         {"safety_frequency", rep.safety_frequency}};
            auto sp = out_path(c, "mc_report.json");
            write_json_file(summary, sp);
            man.artifact(sp);
            man.write(c.out_dir);
        }
    }
    return rep.verdict ? kOk : kInfeasible;
}

// ---- report ----

int cmd_report(const Common& c) {
    require_file(c.config, "--config");
    if (c.out_dir.empty()) throw ConfigError("--out-dir is required");
    auto spec = report_spec_from_json(read_json_file(c.config), fs::path(c.config).parent_path().string());
    Manifest man("report", params_json({}));
    man.input(c.config);
    auto table = out_path(c, "table.csv");
    auto surface = out_path(c, "surface.csv");
    write_table_csv(spec, table);
    write_surface_csv(spec, surface);
    std::cout << "delta, closeness, subsystem GB, monolithic GB\n";
    for (const auto& r : spec.rows) {
        auto m = memory_row(spec, r);
        std::cout << g6(m.delta) << ", " << g6(m.closeness) << ", " << g6(m.subsystem_gb) << ", "
                  << g6(m.monolithic_gb) << "\n";
    }
    man.artifact(table);
    man.artifact(surface);
    man.write(c.out_dir);
    return kOk;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Compositional finite abstractions of stochastic networks"};
    app.set_version_flag("--version", COMPABS_VERSION);
    app.require_subcommand(1);
    Common common;

    auto* net = app.add_subcommand("net", "Network configs");
    net->require_subcommand(1);
    auto* validate = net->add_subcommand("validate", "Check dimensions and well-posedness");
    add_common(validate, common);

    int steps = 1;
    std::optional<int> steps_opt;
    auto* msample = app.add_subcommand("msample", "Build the M-sampled auxiliary network");
    add_common(msample, common);
    msample->add_option("--steps", steps, "Sampling period M")->check(CLI::PositiveNumber);

    std::string certs_path;
    std::optional<double> delta_opt;
    auto* cert = app.add_subcommand("cert", "Storage-function certificates");
    cert->require_subcommand(1);
    auto* cert_check = cert->add_subcommand("check", "Check candidate certificates");
    add_common(cert_check, common);
    cert_check->add_option("--certs", certs_path, "Certificate file")->required();
    cert_check->add_option("--steps", steps_opt, "Sampling period M")->check(CLI::PositiveNumber);
    cert_check->add_option("--delta", delta_opt, "State discretization parameter");

    ComposeFlags cf;
    auto* compose = app.add_subcommand("compose", "Network-level composition");
    compose->require_subcommand(1);
    auto* compose_check = compose->add_subcommand("check", "Compose certificates into a simulation function");
    add_common(compose_check, common);
    compose_check->add_option("--certs", certs_path, "Certificate file")->required();
    compose_check->add_option("--steps", cf.steps, "Sampling period M")->check(CLI::PositiveNumber);
    compose_check->add_option("--delta", cf.delta, "State discretization parameter");
    compose_check->add_option("--beta", cf.beta, "Internal-input discretization parameter");
    compose_check->add_option("--mu-bar", cf.mu_bar, "Weight in (0,1)");
    compose_check->add_option("--alpha", cf.alpha, "alpha(s) = a s^2 override");
    compose_check->add_option("--eps", cf.eps, "Closeness threshold");
    compose_check->add_option("--horizon", cf.horizon, "Horizon Td");
    compose_check->add_option("--v0", cf.v0, "Initial simulation function value");

    std::string fsf_path;
    double b_delta = 0.0, b_beta = 0.0, b_eps = 0.0, b_v0 = 0.0;
    int b_horizon = 0;
    auto* bound = app.add_subcommand("bound", "Closeness bound");
    bound->require_subcommand(1);
    auto* bound_eval = bound->add_subcommand("eval", "Evaluate the closeness bound");
    bound_eval->add_option("--fsf", fsf_path, "Network simulation function constants")->required();
    bound_eval->add_option("--delta", b_delta, "State discretization parameter")->required();
    bound_eval->add_option("--beta", b_beta, "Internal-input discretization parameter");
    bound_eval->add_option("--eps", b_eps, "Closeness threshold")->required();
    bound_eval->add_option("--horizon", b_horizon, "Horizon Td")->required();
    bound_eval->add_option("--v0", b_v0, "Initial simulation function value");

    GridFlags grid;
    int subsystem = 0;
    std::string mdp_out;
    bool stream = false;
    double budget_gb = static_cast<double>(kDefaultBudgetBytes) / 1e9;
    std::vector<std::uint64_t> nx, nu, nw;
    auto* abstract = app.add_subcommand("abstract", "Finite MDP abstractions");
    abstract->require_subcommand(1);
    auto* build = abstract->add_subcommand("build", "Build the finite MDP of one subsystem");
    add_common(build, common);
    build->add_option("--steps", steps, "Sampling period M")->check(CLI::PositiveNumber);
    build->add_option("--subsystem", subsystem, "Subsystem index");
    build->add_option("--delta", grid.delta, "State cell diameter");
    build->add_option("--beta", grid.beta, "Internal-input cell diameter");
    build->add_option("--theta", grid.theta, "External-input cell diameter");
    build->add_option("--cells-x", grid.cells_x, "State cells per dimension");
    build->add_option("--cells-u", grid.cells_u, "External-input cells per dimension");
    build->add_option("--cells-w", grid.cells_w, "Internal-input cells per dimension");
    build->add_option("--out", mdp_out, "MDP output file")->required();
    build->add_flag("--stream", stream, "Write rows to the file without holding the tensor");
    build->add_option("--budget-gb", budget_gb, "Dense construction budget in GB");
    auto* mem = abstract->add_subcommand("memory-estimate", "Memory needed for finite MDPs");
    mem->add_option("--nx", nx, "State cells per subsystem")->required();
    mem->add_option("--nu", nu, "External-input cells per subsystem");
    mem->add_option("--nw", nw, "Internal-input cells per subsystem");

    std::vector<std::string> mdps;
    std::vector<double> safe_lo, safe_hi;
    int horizon = 10, stride = 1;
    auto* synth = app.add_subcommand("synthesize", "Controller synthesis");
    synth->require_subcommand(1);
    auto* safety = synth->add_subcommand("safety", "Max-min safety value iteration");
    add_common(safety, common);
    safety->add_option("--mdp", mdps, "MDP files, one per subsystem")->required();
    safety->add_option("--safe-lower", safe_lo, "Safe box lower corner")->required();
    safety->add_option("--safe-upper", safe_hi, "Safe box upper corner")->required();
    safety->add_option("--horizon", horizon, "Horizon Td");
    safety->add_option("--stride", stride, "Sampling period M")->check(CLI::PositiveNumber);

    SimFlags sf;
    auto* sim = app.add_subcommand("simulate", "Simulation");
    sim->require_subcommand(1);
    auto* mc = sim->add_subcommand("mc", "Coupled Monte-Carlo simulation of the network and its abstraction");
    add_common(mc, common);
    mc->add_option("--steps", sf.steps, "Sampling period M")->check(CLI::PositiveNumber);
    mc->add_option("--delta", sf.grid.delta, "State cell diameter");
    mc->add_option("--beta", sf.grid.beta, "Internal-input cell diameter");
    mc->add_option("--theta", sf.grid.theta, "External-input cell diameter");
    mc->add_option("--cells-x", sf.grid.cells_x, "State cells per dimension");
    mc->add_option("--cells-u", sf.grid.cells_u, "External-input cells per dimension");
    mc->add_option("--cells-w", sf.grid.cells_w, "Internal-input cells per dimension");
    mc->add_option("--certs", sf.certs, "Certificate file (interface gains)");
    mc->add_option("--policy", sf.policies, "Policy CSV per subsystem");
    mc->add_option("--x0", sf.x0, "Initial state (stacked, or one value for all)");
    mc->add_option("--safe-lower", sf.safe_lo, "Safe box lower corner per subsystem");
    mc->add_option("--safe-upper", sf.safe_hi, "Safe box upper corner per subsystem");
    mc->add_option("--eps", sf.eps, "Closeness threshold");
    mc->add_option("--horizon", sf.horizon, "Horizon Td");
    mc->add_option("--runs", sf.runs, "Number of runs");
    mc->add_option("--v0", sf.v0, "Initial simulation function value");
    mc->add_option("--slack", sf.slack, "Slack added to the bound in the verdict");
    mc->add_option("--bound", sf.bound, "Theoretical bound");
    mc->add_option("--fsf", sf.fsf, "Simulation function constants for the theoretical bound");
    mc->add_option("--bound-delta", sf.bound_delta, "delta used in the theoretical bound");
    mc->add_option("--bound-beta", sf.bound_beta, "beta used in the theoretical bound");
    mc->add_option("--trajectories", sf.trajectories, "Trajectory CSV path");
    mc->add_option("--recorded-runs", sf.recorded, "Runs kept in the trajectory CSV");

    auto* report = app.add_subcommand("report", "Memory table and bound surface CSVs");
    add_common(report, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (validate->parsed()) return cmd_net_validate(common);
        if (msample->parsed()) return cmd_msample(common, steps);
        if (cert_check->parsed()) return cmd_cert_check(common, certs_path, steps_opt, delta_opt);
        if (compose_check->parsed()) return cmd_compose_check(common, certs_path, cf);
        if (bound_eval->parsed()) return cmd_bound_eval(fsf_path, b_delta, b_beta, b_eps, b_horizon, b_v0);
        if (build->parsed()) return cmd_abstract_build(common, steps, subsystem, grid, mdp_out, stream, budget_gb);
        if (mem->parsed()) return cmd_memory_estimate(nx, nu, nw);
        if (safety->parsed()) return cmd_synthesize(common, mdps, safe_lo, safe_hi, horizon, stride);
        if (mc->parsed()) return cmd_simulate(common, sf);
        if (report->parsed()) return cmd_report(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace compabs::cli
