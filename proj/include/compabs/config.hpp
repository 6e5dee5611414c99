#pragma once

#include "compabs/compose.hpp"
#include "compabs/msample.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace compabs {

using Json = nlohmann::json;

Matrix matrix_from_json(const Json& j, const std::string& what);
Vector vector_from_json(const Json& j, const std::string& what);
Json matrix_to_json(const Matrix& m);
Json vector_to_json(const Vector& v);
IntervalBox box_from_json(const Json& j, const std::string& what);
Json box_to_json(const IntervalBox& b);

struct TrafficRingParams {
    int cells = 50;
    double tau_s = 6.48;
    double speed_kmh = 100.0;
    double length_km = 0.5;
    double exit_ratio = 0.25;
    double entry_gain = 6.0;
    double noise_gain = 0.83;
    double noise_std = 1.0;
    double density_max = 20.0;
};

struct CompleteGraphParams {
    int nodes = 500;
    std::optional<double> tau_bar;  // default 0.4/(nodes-1)
    double E = 0.1, F = 0.1;
    double slope_lo = -1.0, slope_hi = 1.0;
    std::string phi = "sin";
    double state_bound = 2.0;
    double input_bound = 1.0;
    double noise_std = 0.2;
};

Network make_traffic_ring(const TrafficRingParams& p);
Network make_complete_graph(const CompleteGraphParams& p);

Network network_from_json(const Json& j);
Json network_to_json(const Network& net);
Network load_network(const std::string& path);

struct AuxProvenance {
    std::string source_hash;
    int steps = 1;
};

Json aux_to_json(const AuxiliaryNetwork& aux, const AuxProvenance& prov);
AuxiliaryNetwork aux_from_json(const Json& j);
bool is_aux_config(const Json& j);

struct ComposeParams {
    Vector mu;
    double mu_bar = 0.5;
    Vector beta;
    std::optional<double> alpha_override;
};

struct CertificateFile {
    std::vector<StorageCertificate> certs;
    std::optional<ComposeParams> compose;
    std::optional<std::string> aux_path;  // certificates are checked against this auxiliary model
    std::optional<int> steps;
};

CertificateFile certificates_from_json(const Json& j, int subsystems);
CertificateFile load_certificates(const std::string& path, int subsystems);
StorageCertificate certificate_from_json(const Json& j);

/// Network-level FSF constants; psi = c_delta delta^2 + c_beta * beta_dim * beta^2 for a common scalar beta.
struct FsfParameters {
    double alpha_coeff = 1.0;
    double kappa_hat = 0.5;
    double c_delta = 0.0;
    double c_beta = 0.0;
    int beta_dim = 1;
    double rho_ext = 0.0;
    bool certified = false;
    std::string source;

    double psi(double delta, double beta) const { return c_delta * delta * delta + c_beta * beta_dim * beta * beta; }
};

FsfParameters fsf_from_json(const Json& j);
Json fsf_to_json(const FsfParameters& f);
FsfParameters fsf_from_composition(const CompositionCertificate& cc, const std::string& source);

Json read_json_file(const std::string& path);
void write_json_file(const Json& j, const std::string& path);

}  // namespace compabs
