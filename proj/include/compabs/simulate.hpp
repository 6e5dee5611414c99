#pragma once

#include "compabs/msample.hpp"
#include "compabs/partition.hpp"
#include "compabs/synthesis.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace compabs {

struct SubsystemAbstraction {
    Partition states;
    Partition int_inputs;
    std::optional<RefinedController> controller;  // absent: zero external input
    std::optional<IntervalBox> safe_box;          // tracked for the safety frequency
};

struct SimulationSetup {
    const Network* net = nullptr;
    const AuxiliaryNetwork* aux = nullptr;
    std::vector<SubsystemAbstraction> parts;
    Vector x0;
    int horizon = 0;  // Td sampling steps
    double eps = 1.0;
    std::uint64_t seed = 0;
    std::size_t runs = 0;
    unsigned threads = 1;
    double theoretical_bound = 1.0;
    double slack = 0.0;
    std::size_t recorded_runs = 0;  // trajectories kept for the first runs
};

struct TrajectoryRow {
    std::size_t run = 0;
    int k = 0;
    int subsystem = 0;
    Vector x, xhat, nu;
};

struct WilsonInterval {
    double lower = 0.0, upper = 0.0;
    double half_width() const { return 0.5 * (upper - lower); }
};

WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct MCReport {
    std::size_t runs = 0;
    std::uint64_t seed = 0;
    std::size_t exceedances = 0;
    double frequency = 0.0;
    WilsonInterval wilson;
    double theoretical_bound = 1.0;
    double slack = 0.0;
    bool verdict = false;  // wilson.upper <= theoretical_bound + slack
    std::vector<std::size_t> safe_counts;
    std::vector<double> safety_frequency;
    std::vector<TrajectoryRow> trajectories;
};

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t run);

MCReport coupled_simulate(const SimulationSetup& setup);

void emit_trajectories(const std::vector<TrajectoryRow>& rows, const std::string& path);

}  // namespace compabs
