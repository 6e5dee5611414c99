#include "compabs/error.hpp"
#include "compabs/report.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <filesystem>
#include <fstream>
#include <string>

using namespace compabs;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines_of(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::string tmp(const std::string& name) {
    auto dir = fs::temp_directory_path() / "compabs_config_tests";
    fs::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("case1 network file") {
    auto net = compabs::test::case1_network();
    REQUIRE(net.size() == 4);
    CHECK(net.subsystems[0].A(0, 0) == 1.02);
    CHECK(net.subsystems[3].D(0, 0) == 0.05);
    CHECK(net.subsystems[2].m() == 1);
    CHECK(net.subsystems[0].m() == 0);
    CHECK(net.subsystems[2].noise.std[0] == 0.6);
    CHECK(net.G(2, 1) == 1.0);
    CHECK(validate_network(net).valid());
}

TEST_CASE("generators through JSON") {
    auto ring = load_network(compabs::test::config_path("traffic/ring5.json"));
    CHECK(ring.size() == 5);
    CHECK(ring.subsystems[0].A(0, 0) == doctest::Approx(0.39));
    auto cg = network_from_json(Json::parse(R"({"generator": {"type": "complete_graph", "nodes": 4}})"));
    CHECK(cg.size() == 4);
    CHECK(cg.G(0, 1) == doctest::Approx(0.4 / 3));
    CHECK_THROWS_AS(network_from_json(Json::parse(R"({"generator": {"type": "mesh"}})")), ConfigError);
}

TEST_CASE("network JSON round trip and errors") {
    auto net = compabs::test::case1_network();
    auto back = network_from_json(network_to_json(net));
    CHECK(back.G == net.G);
    for (int i = 0; i < 4; ++i) {
        CHECK(back.subsystems[i].A == net.subsystems[i].A);
        CHECK(back.subsystems[i].state_box.upper == net.subsystems[i].state_box.upper);
    }
    CHECK_THROWS_AS(network_from_json(Json::parse(R"({"subsystems": [{"A": "x"}]})")), ConfigError);
    CHECK_THROWS_AS(network_from_json(Json::parse(R"({"subsystems": []})")), ConfigError);
    CHECK_THROWS(network_from_json(read_json_file(compabs::test::config_path("case1/aux_printed.json"))));
    CHECK_THROWS_AS(read_json_file(tmp("nope.json")), ConfigError);
}

TEST_CASE("auxiliary JSON round trip") {
    auto aux = msample_network(compabs::test::case1_network(), 2);
    auto back = aux_from_json(aux_to_json(aux, {"abc", 2}));
    CHECK(back.steps == 2);
    CHECK(back.Ga.isApprox(aux.Ga));
    for (int i = 0; i < 4; ++i) {
        CHECK(back.subsystems[i].R.isApprox(aux.subsystems[i].R));
        CHECK(back.subsystems[i].noise_layout == aux.subsystems[i].noise_layout);
    }
    auto printed = compabs::test::case1_printed_aux();
    CHECK(printed.subsystems[2].noise_layout.size() == 4);
    CHECK(printed.subsystems[2].noise_layout[3] == NoiseTerm{2, 1, 0});
}

TEST_CASE("certificate files") {
    auto f = load_certificates(compabs::test::config_path("case1/certs.json"), 4);
    REQUIRE(f.certs.size() == 4);
    CHECK(f.certs[0].delta == 0.004);
    CHECK(f.certs[0].X11(0, 0) == 1.1);
    CHECK(f.certs[3].kind == CertificateKind::LinearMStep);
    REQUIRE(f.compose);
    CHECK(f.compose->mu_bar == 0.005);
    CHECK(f.compose->mu.size() == 4);
    CHECK(f.compose->alpha_override == 1.0);
    REQUIRE(f.aux_path);
    CHECK(fs::path(*f.aux_path).is_absolute());

    auto rep = certificates_from_json(Json::parse(R"({"defaults": {"kind": "linear", "M": 2, "kappa_hat": 0.5,
        "pi": 1, "X11": 1, "X12": 0, "X22": 0}})"), 3);
    CHECK(rep.certs.size() == 3);
    CHECK(rep.certs[2].M(0, 0) == 2.0);
    CHECK_THROWS_AS(certificate_from_json(Json::parse(R"({"kind": "quadratic"})")), ConfigError);
    CHECK_THROWS(certificates_from_json(Json::parse(R"({"certificates": [{}, {}]})"), 3));
}

TEST_CASE("fsf parameters") {
    auto f = fsf_from_json(read_json_file(compabs::test::config_path("case1/fsf_reported.json")));
    CHECK(f.c_delta == 68.04);
    CHECK(f.c_beta == 160000);
    CHECK_FALSE(f.certified);
    CHECK(f.psi(0.004, 1e-4) == doctest::Approx(68.04 * 1.6e-5 + 1.6e-3));
    auto back = fsf_from_json(fsf_to_json(f));
    CHECK(back.c_delta == f.c_delta);
    CHECK(back.kappa_hat == f.kappa_hat);
    auto b = fsf_bound(f, 0.004, 1e-4, 0.5, 0.0, 7);
    CHECK(b.probability == doctest::Approx(0.0742).epsilon(5e-4));
}

TEST_CASE("memory rows reproduce the table") {
    auto spec = report_spec_from_json(read_json_file(compabs::test::config_path("case1/report.json")),
                                      compabs::test::config_path("case1"));
    REQUIRE(spec.rows.size() == 7);
    const double sub[] = {44.6875, 6.7031, 1.6156, 0.6816, 0.3575, 0.0429, 0.0049};
    const double mono[] = {1.9073e15, 2.6822e12, 3.0289e10, 1.6786e9, 195312500, 175780, 123.8347};
    for (int r = 0; r < 7; ++r) {
        auto row = memory_row(spec, spec.rows[r]);
        CHECK(row.subsystem_gb == doctest::Approx(sub[r]).epsilon(r == 6 ? 1e-2 : 1e-3));
        CHECK(row.monolithic_gb == doctest::Approx(mono[r]).epsilon(1e-3));
    }
    CHECK(cells_for(0.5, 0.004) == 125);
    CHECK(cells_for(0.0, 0.1) == 1);
    CHECK(cells_for(0.45, 0.006) == 75);
}

TEST_CASE("report CSV files") {
    auto spec = report_spec_from_json(read_json_file(compabs::test::config_path("case1/report.json")),
                                      compabs::test::config_path("case1"));
    auto t = tmp("table.csv"), s = tmp("surface.csv");
    write_table_csv(spec, t);
    auto lines = lines_of(t);
    CHECK(lines.front() == "delta,closeness,subsystem_gb,monolithic_gb");
    CHECK(lines.size() == 8);

    spec.rows.resize(1);
    write_table_csv(spec, t);
    CHECK(lines_of(t).size() == 2);

    spec.surface_delta.clear();
    write_surface_csv(spec, s);
    auto sl = lines_of(s);
    REQUIRE(sl.size() == 1);
    CHECK(sl[0] == "delta,eps,bound,guarantee,branch");
    spec.surface_delta = {0.004};
    spec.surface_eps = {0.5};
    write_surface_csv(spec, s);
    CHECK(lines_of(s).size() == 2);
}

}
