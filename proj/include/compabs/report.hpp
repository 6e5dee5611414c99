#pragma once

#include "compabs/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace compabs {

BoundResult fsf_bound(const FsfParameters& fsf, double delta, double beta, double eps, double V0, int Td);

struct TableRow {
    double delta = 0.0;
    double theta = 0.0;
};

struct ReportSpec {
    FsfParameters fsf;
    double eps = 0.5;
    int horizon = 7;
    double V0 = 0.0;
    double beta = 0.0;
    std::vector<double> state_span;  // per subsystem, scalar state boxes
    std::vector<double> input_span;  // 0 means no external input
    std::vector<std::uint64_t> n_w;
    std::vector<TableRow> rows;
    std::vector<double> surface_delta;
    std::vector<double> surface_eps;
};

struct MemoryRow {
    double delta = 0.0;
    double closeness = 0.0;
    double subsystem_gb = 0.0;  // largest subsystem
    double monolithic_gb = 0.0;
    std::vector<std::uint64_t> n_x, n_nu;
};

/// Cells per axis for a span and cell width; at least one.
std::uint64_t cells_for(double span, double width);

ReportSpec report_spec_from_json(const Json& j, const std::string& base_dir);
MemoryRow memory_row(const ReportSpec& spec, const TableRow& row);

void write_table_csv(const ReportSpec& spec, const std::string& path);
void write_surface_csv(const ReportSpec& spec, const std::string& path);

}  // namespace compabs
