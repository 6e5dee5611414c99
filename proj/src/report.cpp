#include "compabs/report.hpp"

#include "compabs/abstraction.hpp"
#include "compabs/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace compabs {

BoundResult fsf_bound(const FsfParameters& fsf, double delta, double beta, double eps, double V0, int Td) {
    if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
    auto r = closeness_bound(fsf.alpha_coeff * eps * eps, fsf.psi(delta, beta), fsf.kappa_hat, V0, Td);
    r.certified = fsf.certified;
    return r;
}

std::uint64_t cells_for(double span, double width) {
    if (!(span > 0.0)) return 1;
    if (!(width > 0.0)) throw InvalidArgument("cell width must be positive");
    double c = std::floor(span / width + 1e-9);
    return static_cast<std::uint64_t>(std::max(1.0, c));
}

ReportSpec report_spec_from_json(const Json& j, const std::string& base_dir) {
    ReportSpec s;
    if (!j.contains("fsf")) throw ConfigError("report: missing field 'fsf'");
    const auto& f = j.at("fsf");
    if (f.is_string()) {
        std::filesystem::path p(f.get<std::string>());
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        s.fsf = fsf_from_json(read_json_file(p.string()));
    } else {
        s.fsf = fsf_from_json(f);
    }
    s.eps = j.value("eps", s.eps);
    s.horizon = j.value("horizon", s.horizon);
    s.V0 = j.value("V0", s.V0);
    s.beta = j.value("beta", s.beta);
    if (j.contains("state_span")) s.state_span = j.at("state_span").get<std::vector<double>>();
    if (j.contains("input_span")) s.input_span = j.at("input_span").get<std::vector<double>>();
    if (j.contains("n_w")) s.n_w = j.at("n_w").get<std::vector<std::uint64_t>>();
    if (s.input_span.size() != s.state_span.size() || s.n_w.size() != s.state_span.size())
        throw ConfigError("report: state_span, input_span and n_w must have one entry per subsystem");
    if (j.contains("rows"))
        for (const auto& r : j.at("rows")) s.rows.push_back({r.at("delta").get<double>(), r.value("theta", 0.0)});
    if (j.contains("surface")) {
        const auto& g = j.at("surface");
        if (g.contains("delta")) s.surface_delta = g.at("delta").get<std::vector<double>>();
        if (g.contains("eps")) s.surface_eps = g.at("eps").get<std::vector<double>>();
    }
    return s;
}

MemoryRow memory_row(const ReportSpec& spec, const TableRow& row) {
    MemoryRow m;
    m.delta = row.delta;
    m.closeness = 1.0 - fsf_bound(spec.fsf, row.delta, spec.beta, spec.eps, spec.V0, spec.horizon).probability;
    for (std::size_t i = 0; i < spec.state_span.size(); ++i) {
        auto nx = cells_for(spec.state_span[i], row.delta);
        auto nu = spec.input_span[i] > 0.0 ? cells_for(spec.input_span[i], row.theta) : 1;
        m.n_x.push_back(nx);
        m.n_nu.push_back(nu);
        m.subsystem_gb = std::max(m.subsystem_gb, memory_estimate(nx, nu, spec.n_w[i]).gigabytes);
    }
    m.monolithic_gb = monolithic_memory_estimate(m.n_x, m.n_nu).gigabytes;
    return m;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    return out;
}

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_table_csv(const ReportSpec& spec, const std::string& path) {
    auto out = open_out(path);
    out << "delta,closeness,subsystem_gb,monolithic_gb\n";
    for (const auto& r : spec.rows) {
        auto m = memory_row(spec, r);
        out << full(m.delta) << ',' << full(m.closeness) << ',' << full(m.subsystem_gb) << ','
            << full(m.monolithic_gb) << '\n';
    }
}

void write_surface_csv(const ReportSpec& spec, const std::string& path) {
    auto out = open_out(path);
    out << "delta,eps,bound,guarantee,branch\n";
    for (double d : spec.surface_delta)
        for (double e : spec.surface_eps) {
            auto b = fsf_bound(spec.fsf, d, spec.beta, e, spec.V0, spec.horizon);
            out << full(d) << ',' << full(e) << ',' << full(b.probability) << ',' << full(1.0 - b.probability)
                << ',' << b.branch << '\n';
        }
}

}  // namespace compabs
