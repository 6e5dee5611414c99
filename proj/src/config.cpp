#include "compabs/config.hpp"

#include "compabs/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace compabs {

namespace {

const Json& require(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    return j.at(key);
}

double number(const Json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + ": expected a number");
    return j.get<double>();
}

}  // namespace

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array()) throw ConfigError(what + ": expected a matrix (array of rows)");
    if (j.empty()) return Matrix(0, 0);
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array()) throw ConfigError(what + ": matrix rows must be arrays");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols)
            throw ConfigError(what + ": ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number(j[r][c], what);
    }
    return m;
}

Vector vector_from_json(const Json& j, const std::string& what) {
    if (j.is_number()) return Vector::Constant(1, j.get<double>());
    if (!j.is_array()) throw ConfigError(what + ": expected a number or an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what);
    return v;
}

Json matrix_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

IntervalBox box_from_json(const Json& j, const std::string& what) {
    try {
        return IntervalBox(vector_from_json(require(j, "lower", what), what + ".lower"),
                           vector_from_json(require(j, "upper", what), what + ".upper"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

Json box_to_json(const IntervalBox& b) { return Json{{"lower", vector_to_json(b.lower)}, {"upper", vector_to_json(b.upper)}}; }

Network make_traffic_ring(const TrafficRingParams& p) {
    if (p.cells < 2) throw ConfigError("traffic ring needs at least two cells");
    const double flow = p.tau_s / 3600.0 * p.speed_kmh / p.length_km;
    Network net;
    for (int i = 0; i < p.cells; ++i) {
        Subsystem s;
        s.A = Matrix::Constant(1, 1, 1.0 - flow - p.exit_ratio);
        s.B = Matrix::Constant(1, 1, p.entry_gain);
        s.D = Matrix::Constant(1, 1, flow);
        s.R = Matrix::Constant(1, 1, p.noise_gain);
        s.state_box = IntervalBox::uniform(1, 0.0, p.density_max);
        s.ext_input_box = IntervalBox::uniform(1, 0.0, 1.0);
        s.int_input_box = IntervalBox::uniform(1, 0.0, p.density_max);
        s.noise.std = Vector::Constant(1, p.noise_std);
        net.subsystems.push_back(std::move(s));
    }
    net.G = Matrix::Zero(p.cells, p.cells);
    for (int i = 1; i < p.cells; ++i) net.G(i, i - 1) = 1.0;
    net.G(0, p.cells - 1) = 1.0;
    return net;
}

Network make_complete_graph(const CompleteGraphParams& p) {
    if (p.nodes < 2) throw ConfigError("complete graph needs at least two nodes");
    const int n = p.nodes;
    const double tau = p.tau_bar ? *p.tau_bar : 0.4 / (n - 1);
    Network net;
    for (int i = 0; i < n; ++i) {
        Subsystem s;
        s.A = Matrix::Identity(1, 1);
        s.B = Matrix::Identity(1, 1);
        s.D = Matrix::Identity(1, 1);
        s.R = Matrix::Identity(1, 1);
        s.state_box = IntervalBox::uniform(1, -p.state_bound, p.state_bound);
        s.ext_input_box = IntervalBox::uniform(1, -p.input_bound, p.input_bound);
        s.int_input_box = IntervalBox::uniform(1, -p.state_bound, p.state_bound);
        s.noise.std = Vector::Constant(1, p.noise_std);
        s.nonlinearity = SlopeRestrictedTerm{Matrix::Constant(1, 1, p.E), Matrix::Constant(1, 1, p.F), p.slope_lo,
                                             p.slope_hi, p.phi};
        net.subsystems.push_back(std::move(s));
    }
    // G = -tau * L with L the complete-graph Laplacian
    net.G = Matrix::Constant(n, n, tau);
    net.G.diagonal().setConstant(-tau * (n - 1));
    return net;
}

namespace {

Subsystem subsystem_from_json(const Json& j, const std::string& where) {
    Subsystem s;
    s.A = matrix_from_json(require(j, "A", where), where + ".A");
    const auto n = s.A.rows();
    s.B = j.contains("B") ? matrix_from_json(j.at("B"), where + ".B") : Matrix(n, 0);
    if (s.B.size() == 0) s.B = Matrix(n, 0);
    s.D = matrix_from_json(require(j, "D", where), where + ".D");
    s.R = matrix_from_json(require(j, "R", where), where + ".R");
    s.state_box = box_from_json(require(j, "state_box", where), where + ".state_box");
    s.ext_input_box = j.contains("ext_input_box") ? box_from_json(j.at("ext_input_box"), where + ".ext_input_box")
                                                  : IntervalBox::empty_dim();
    s.int_input_box = box_from_json(require(j, "int_input_box", where), where + ".int_input_box");
    s.noise.std = vector_from_json(require(j, "noise_std", where), where + ".noise_std");
    if (j.contains("nonlinearity") && !j.at("nonlinearity").is_null()) {
        const auto& nl = j.at("nonlinearity");
        SlopeRestrictedTerm t;
        t.E = matrix_from_json(require(nl, "E", where), where + ".E");
        t.F = matrix_from_json(require(nl, "F", where), where + ".F");
        t.slope_lo = number(require(nl, "slope_lo", where), where + ".slope_lo");
        t.slope_hi = number(require(nl, "slope_hi", where), where + ".slope_hi");
        t.phi = require(nl, "phi", where).get<std::string>();
        s.nonlinearity = t;
    }
    return s;
}

Json subsystem_fields(const Matrix& A, const Matrix& B, const Matrix& D, const Matrix& R, const IntervalBox& X,
                      const IntervalBox& U, const IntervalBox& W, const Vector& std_,
                      const std::optional<SlopeRestrictedTerm>& nl) {
    Json s;
    s["A"] = matrix_to_json(A);
    if (B.cols() > 0) {
        s["B"] = matrix_to_json(B);
        s["ext_input_box"] = box_to_json(U);
    }
    s["D"] = matrix_to_json(D);
    s["R"] = matrix_to_json(R);
    s["state_box"] = box_to_json(X);
    s["int_input_box"] = box_to_json(W);
    s["noise_std"] = vector_to_json(std_);
    if (nl)
        s["nonlinearity"] = {{"E", matrix_to_json(nl->E)}, {"F", matrix_to_json(nl->F)}, {"slope_lo", nl->slope_lo},
                             {"slope_hi", nl->slope_hi}, {"phi", nl->phi}};
    return s;
}

template <class T>
void maybe(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Network network_from_json(const Json& j) {
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        const std::string type = require(g, "type", "generator").get<std::string>();
        if (type == "traffic_ring") {
            TrafficRingParams p;
            maybe(g, "cells", p.cells);
            maybe(g, "tau_s", p.tau_s);
            maybe(g, "speed_kmh", p.speed_kmh);
            maybe(g, "length_km", p.length_km);
            maybe(g, "exit_ratio", p.exit_ratio);
            maybe(g, "entry_gain", p.entry_gain);
            maybe(g, "noise_gain", p.noise_gain);
            maybe(g, "noise_std", p.noise_std);
            maybe(g, "density_max", p.density_max);
            return make_traffic_ring(p);
        }
        if (type == "complete_graph") {
            CompleteGraphParams p;
            maybe(g, "nodes", p.nodes);
            if (g.contains("tau_bar")) p.tau_bar = g.at("tau_bar").get<double>();
            maybe(g, "E", p.E);
            maybe(g, "F", p.F);
            maybe(g, "slope_lo", p.slope_lo);
            maybe(g, "slope_hi", p.slope_hi);
            maybe(g, "phi", p.phi);
            maybe(g, "state_bound", p.state_bound);
            maybe(g, "input_bound", p.input_bound);
            maybe(g, "noise_std", p.noise_std);
            return make_complete_graph(p);
        }
        throw ConfigError("unknown generator type '" + type + "'");
    }
    if (is_aux_config(j)) throw ConfigError("expected a network config, got an auxiliary network");
    const auto& subs = require(j, "subsystems", "network");
    if (!subs.is_array()) throw ConfigError("network.subsystems must be an array");
    Network net;
    for (std::size_t i = 0; i < subs.size(); ++i)
        net.subsystems.push_back(subsystem_from_json(subs[i], "subsystem " + std::to_string(i)));
    net.G = matrix_from_json(require(j, "G", "network"), "network.G");
    if (net.G.size() == 0) net.G = Matrix::Zero(net.total_internal(), net.total_states());
    return net;
}

Json network_to_json(const Network& net) {
    Json j;
    j["subsystems"] = Json::array();
    for (const auto& s : net.subsystems)
        j["subsystems"].push_back(subsystem_fields(s.A, s.B, s.D, s.R, s.state_box, s.ext_input_box,
                                                   s.int_input_box, s.noise.std, s.nonlinearity));
    j["G"] = matrix_to_json(net.G);
    return j;
}

Network load_network(const std::string& path) { return network_from_json(read_json_file(path)); }

bool is_aux_config(const Json& j) { return j.is_object() && j.value("kind", std::string()) == "auxiliary"; }

Json aux_to_json(const AuxiliaryNetwork& aux, const AuxProvenance& prov) {
    Json j;
    j["kind"] = "auxiliary";
    j["steps"] = aux.steps;
    j["subsystems"] = Json::array();
    for (const auto& a : aux.subsystems) {
        Json s = subsystem_fields(a.A, a.B, a.D, a.R, a.state_box, a.ext_input_box, a.int_input_box, a.noise_std,
                                  a.nonlinearity);
        Json layout = Json::array();
        for (const auto& t : a.noise_layout) layout.push_back({t.subsystem, t.offset, t.component});
        s["noise_layout"] = layout;
        j["subsystems"].push_back(s);
    }
    j["G"] = matrix_to_json(aux.Ga);
    j["provenance"] = {{"source_hash", prov.source_hash}, {"steps", prov.steps}};
    return j;
}

AuxiliaryNetwork aux_from_json(const Json& j) {
    if (!is_aux_config(j)) throw ConfigError("expected an auxiliary network config (kind: auxiliary)");
    AuxiliaryNetwork aux;
    aux.steps = require(j, "steps", "auxiliary").get<int>();
    const auto& subs = require(j, "subsystems", "auxiliary");
    for (std::size_t i = 0; i < subs.size(); ++i) {
        const std::string where = "auxiliary subsystem " + std::to_string(i);
        Subsystem s = subsystem_from_json(subs[i], where);
        AuxiliarySubsystem a;
        a.A = s.A;
        a.B = s.B;
        a.D = s.D;
        a.R = s.R;
        a.noise_std = s.noise.std;
        a.state_box = s.state_box;
        a.ext_input_box = s.ext_input_box;
        a.int_input_box = s.int_input_box;
        a.nonlinearity = s.nonlinearity;
        a.steps = aux.steps;
        if (subs[i].contains("noise_layout")) {
            for (const auto& t : subs[i].at("noise_layout")) a.noise_layout.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
        } else {
            for (int c = 0; c < a.q(); ++c) a.noise_layout.push_back({static_cast<int>(i), 0, c});
        }
        auto errs = subsystem_errors(s, where);
        if (!errs.empty()) throw ConfigError(errs.front());
        if (static_cast<Eigen::Index>(a.noise_layout.size()) != a.R.cols())
            throw ConfigError(where + ": noise_layout length differs from columns of R");
        aux.subsystems.push_back(std::move(a));
    }
    aux.Ga = matrix_from_json(require(j, "G", "auxiliary"), "auxiliary.G");
    return aux;
}

StorageCertificate certificate_from_json(const Json& j) {
    const std::string w = "certificate";
    StorageCertificate c;
    if (j.contains("kind")) c.kind = certificate_kind_from_string(j.at("kind").get<std::string>());
    c.M = matrix_from_json(require(j, "M", w), w + ".M");
    if (j.contains("K")) c.K = matrix_from_json(j.at("K"), w + ".K");
    c.kappa_hat = number(require(j, "kappa_hat", w), w + ".kappa_hat");
    c.pi = number(require(j, "pi", w), w + ".pi");
    c.X11 = matrix_from_json(require(j, "X11", w), w + ".X11");
    c.X12 = matrix_from_json(require(j, "X12", w), w + ".X12");
    if (j.contains("X21")) c.X21 = matrix_from_json(j.at("X21"), w + ".X21");
    c.X22 = matrix_from_json(require(j, "X22", w), w + ".X22");
    if (j.contains("delta")) c.delta = number(j.at("delta"), w + ".delta");
    if (j.contains("kappa")) c.reported_kappa = number(j.at("kappa"), w + ".kappa");
    return c;
}

CertificateFile certificates_from_json(const Json& j, int subsystems) {
    CertificateFile f;
    Json defaults = j.contains("defaults") ? j.at("defaults") : Json::object();
    if (j.contains("certificates")) {
        const auto& list = j.at("certificates");
        if (!list.is_array() || static_cast<int>(list.size()) != subsystems)
            throw ConfigError("certificates: expected " + std::to_string(subsystems) + " entries");
        for (const auto& c : list) {
            Json merged = defaults;
            merged.update(c);
            f.certs.push_back(certificate_from_json(merged));
        }
    } else {
        if (defaults.empty()) throw ConfigError("certificates: neither 'certificates' nor 'defaults' given");
        for (int i = 0; i < subsystems; ++i) f.certs.push_back(certificate_from_json(defaults));
    }
    if (j.contains("compose")) {
        const auto& c = j.at("compose");
        ComposeParams p;
        auto expand = [&](const Json& v, const char* what) {
            Vector x = vector_from_json(v, what);
            if (x.size() == 1 && subsystems > 1) x = Vector::Constant(subsystems, x[0]);
            return x;
        };
        p.mu = c.contains("mu") ? expand(c.at("mu"), "compose.mu") : Vector::Ones(subsystems);
        p.mu_bar = number(require(c, "mu_bar", "compose"), "compose.mu_bar");
        p.beta = c.contains("beta") ? expand(c.at("beta"), "compose.beta") : Vector::Zero(subsystems);
        if (c.contains("alpha_override")) p.alpha_override = number(c.at("alpha_override"), "compose.alpha_override");
        if (p.mu.size() != subsystems) throw ConfigError("compose.mu: wrong length");
        f.compose = p;
    }
    if (j.contains("aux")) f.aux_path = j.at("aux").get<std::string>();
    if (j.contains("steps")) f.steps = j.at("steps").get<int>();
    return f;
}

CertificateFile load_certificates(const std::string& path, int subsystems) {
    auto f = certificates_from_json(read_json_file(path), subsystems);
    if (f.aux_path && std::filesystem::path(*f.aux_path).is_relative())
        f.aux_path = (std::filesystem::path(path).parent_path() / *f.aux_path).string();
    return f;
}

FsfParameters fsf_from_json(const Json& j) {
    FsfParameters f;
    const std::string w = "fsf";
    f.alpha_coeff = number(require(j, "alpha_coeff", w), w + ".alpha_coeff");
    f.kappa_hat = number(require(j, "kappa_hat", w), w + ".kappa_hat");
    f.c_delta = number(require(j, "c_delta", w), w + ".c_delta");
    f.c_beta = number(require(j, "c_beta", w), w + ".c_beta");
    f.beta_dim = j.value("beta_dim", 1);
    f.rho_ext = j.value("rho_ext", 0.0);
    f.certified = j.value("certified", false);
    f.source = j.value("source", std::string());
    return f;
}

Json fsf_to_json(const FsfParameters& f) {
    return Json{{"kind", "fsf"},          {"alpha_coeff", f.alpha_coeff}, {"kappa_hat", f.kappa_hat},
                {"c_delta", f.c_delta},   {"c_beta", f.c_beta},           {"beta_dim", f.beta_dim},
                {"rho_ext", f.rho_ext},   {"certified", f.certified},     {"source", f.source}};
}

FsfParameters fsf_from_composition(const CompositionCertificate& cc, const std::string& source) {
    FsfParameters f;
    f.alpha_coeff = cc.alpha_scale();
    f.kappa_hat = cc.kappa_hat;
    f.c_delta = cc.c_delta;
    f.c_beta = cc.c_beta;
    f.beta_dim = static_cast<int>(std::max<Eigen::Index>(1, cc.beta.size()));
    f.certified = cc.certified();
    f.source = source;
    return f;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_json_file(const Json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace compabs
