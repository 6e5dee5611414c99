#include "compabs/abstraction.hpp"
#include "compabs/compose.hpp"
#include "compabs/config.hpp"
#include "compabs/error.hpp"
#include "compabs/msample.hpp"
#include "compabs/simulate.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace compabs;

namespace {

py::dict msample_summary(const std::string& config, int steps) {
    auto net = load_network(config);
    auto aux = steps == 1 ? one_step_view(net) : msample_network(net, steps);
    py::list blocks;
    for (const auto& s : aux.subsystems) {
        py::dict b;
        b["A"] = Matrix(s.A);
        b["D"] = Matrix(s.D);
        b["R"] = Matrix(s.R);
        b["W_lower"] = Vector(s.int_input_box.lower);
        b["W_upper"] = Vector(s.int_input_box.upper);
        blocks.append(b);
    }
    py::dict out;
    out["steps"] = aux.steps;
    out["Ga"] = Matrix(aux.Ga);
    out["subsystems"] = blocks;
    out["spectral_radii"] = block_spectral_radii(aux);
    return out;
}

py::list check_certificates(const std::string& network, const std::string& certs, int steps) {
    auto net = load_network(network);
    auto file = load_certificates(certs, net.size());
    AuxiliaryNetwork aux = file.aux_path ? aux_from_json(read_json_file(*file.aux_path)) : auxiliary_view(net, steps);
    py::list out;
    for (int i = 0; i < net.size(); ++i) {
        const auto& c = file.certs[i];
        auto rep = c.kind == CertificateKind::LinearMStep ? check_linear_fstf(aux.subsystems[i], c)
                                                          : check_nonlinear_stf(net.subsystems[i], c);
        py::dict d;
        d["feasible"] = rep.feasible;
        d["min_eigenvalue"] = rep.min_eigenvalue;
        d["psi"] = rep.certificate.psi;
        d["kappa"] = rep.certificate.kappa_coeff;
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_compabs, m) {
    m.attr("__version__") = COMPABS_VERSION;

    m.def("validate", [](const std::string& config) { return validate_network(load_network(config)).valid(); },
          py::arg("config"));
    m.def("msample", &msample_summary, py::arg("config"), py::arg("steps"));
    m.def("check_certificates", &check_certificates, py::arg("network"), py::arg("certs"), py::arg("steps") = 1);

    m.def(
        "closeness_bound",
        [](double alpha_eps, double psi, double kappa_hat, double v0, int horizon) {
            auto r = closeness_bound(alpha_eps, psi, kappa_hat, v0, horizon);
            py::dict d;
            d["probability"] = r.probability;
            d["branch"] = r.branch;
            d["unclamped"] = r.unclamped;
            return d;
        },
        py::arg("alpha_eps"), py::arg("psi"), py::arg("kappa_hat"), py::arg("v0"), py::arg("horizon"));

    m.def("memory_estimate", [](std::uint64_t nx, std::uint64_t nu, std::uint64_t nw) {
        return memory_estimate(nx, nu, nw).gigabytes;
    });
    m.def("monolithic_memory_estimate", [](const std::vector<std::uint64_t>& nx, const std::vector<std::uint64_t>& nu) {
        return monolithic_memory_estimate(nx, nu).gigabytes;
    });
    m.def("wilson_interval", [](std::size_t k, std::size_t n) {
        auto w = wilson_interval(k, n);
        return py::make_tuple(w.lower, w.upper);
    });

    py::register_exception<Error>(m, "CompabsError", PyExc_RuntimeError);
}
