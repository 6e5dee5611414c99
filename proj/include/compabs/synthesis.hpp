#pragma once

#include "compabs/abstraction.hpp"
#include "compabs/certificates.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace compabs {

struct SafetySpec {
    IntervalBox safe_box;
    int horizon = 0;  // Td
    int stride = 1;   // M
};

/// table[j * n_states + x] = external-input index at step j.
struct Policy {
    std::size_t n_states = 0;
    int horizon = 0;
    std::vector<std::uint32_t> table;

    std::size_t input(int j, std::size_t x) const;
};

struct SafetyResult {
    Policy policy;
    std::vector<std::vector<double>> values;  // values[j][x], j = 0..Td
    std::vector<bool> safe;
};

/// Cells lying entirely inside the safe box.
std::vector<bool> safe_cells(const Partition& states, const IntervalBox& safe_box);

SafetyResult safety_value_iteration(const FiniteMDP& mdp, const SafetySpec& spec, unsigned threads = 1);

/// Max-min recursion on explicit safe flags; `fixed_w` replaces the minimum by one adversary choice.
SafetyResult safety_value_iteration(const FiniteMDP& mdp, const std::vector<bool>& safe, int horizon,
                                    unsigned threads = 1, std::optional<std::size_t> fixed_w = {});

/// nu = K (x - x^) + nu^ at k = jM + M - 1, zero input at other times.
class RefinedController {
public:
    RefinedController(Policy policy, Matrix K, Partition states, Partition inputs, int stride);

    /// nu^ for abstract state x^ at sampling step j (input index 0 outside the box or past the horizon).
    Vector abstract_input(int j, const Vector& xhat) const;
    bool input_time(int k) const { return k % stride_ == stride_ - 1; }
    /// x and x^ are the states at the last sampling instant jM <= k.
    Vector operator()(int k, const Vector& x, const Vector& xhat) const;
    Vector interface(const Vector& x, const Vector& xhat, const Vector& nuhat) const;

    int stride() const { return stride_; }
    const Partition& inputs() const { return inputs_; }

private:
    Policy policy_;
    Matrix K_;
    Partition states_, inputs_;
    int stride_;
};

RefinedController refine_policy(const Policy& policy, const StorageCertificate& cert, const Partition& states,
                                const Partition& inputs, int stride);

void write_policy_csv(const SafetyResult& res, const Partition& inputs, const std::string& path);
Policy read_policy_csv(const std::string& path, std::size_t n_states);

}  // namespace compabs
