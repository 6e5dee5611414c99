#pragma once

#include "compabs/config.hpp"

#include <string>

namespace compabs::test {

inline std::string config_path(const std::string& rel) { return std::string(COMPABS_SOURCE_DIR) + "/configs/" + rel; }

inline Network case1_network() { return load_network(config_path("case1/network.json")); }

inline AuxiliaryNetwork case1_printed_aux() { return aux_from_json(read_json_file(config_path("case1/aux_printed.json"))); }

inline std::vector<StorageCertificate> case1_certs() {
    return load_certificates(config_path("case1/certs.json"), 4).certs;
}

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace compabs::test
