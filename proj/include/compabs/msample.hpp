#pragma once

#include "compabs/model.hpp"

#include <optional>
#include <vector>

namespace compabs {

/// Column of R~: the original noise component `component` of subsystem `subsystem` at time k+offset.
struct NoiseTerm {
    int subsystem = 0;
    int offset = 0;
    int component = 0;
    bool operator==(const NoiseTerm&) const = default;
};

/// M-step dynamics x(k+M) = A~ x(k) + B nu(k+M-1) + D~ w~(k) + R~ noise~(k).
struct AuxiliarySubsystem {
    Matrix A, B, D, R;
    std::vector<NoiseTerm> noise_layout;
    Vector noise_std;  // one entry per column of R
    IntervalBox state_box, ext_input_box, int_input_box;
    int steps = 1;
    std::optional<SlopeRestrictedTerm> nonlinearity;  // only for the one-step view

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(D.cols()); }
    int q() const { return static_cast<int>(R.cols()); }
};

struct AuxiliaryNetwork {
    std::vector<AuxiliarySubsystem> subsystems;
    Matrix Ga;
    int steps = 1;
    Matrix propagated;  // (A_bar + D_bar G)^M, empty for the one-step view

    int size() const { return static_cast<int>(subsystems.size()); }
    std::vector<int> state_offsets() const;
    std::vector<int> internal_offsets() const;
};

/// A_bar + D_bar G for a linear network.
Matrix closed_matrix(const Network& net);

AuxiliaryNetwork msample_network(const Network& net, int M);

/// Classic M=1 view keeping the original D and G (A~=A, D~=D, G_a=G, R~=R).
AuxiliaryNetwork one_step_view(const Network& net);

/// one_step_view for M = 1, msample_network otherwise.
AuxiliaryNetwork auxiliary_view(const Network& net, int M);

/// R~ diag(std^2) R~^T with the noise~ entries treated as independent.
Matrix aux_noise_covariance(const AuxiliarySubsystem& aux);
Matrix aux_noise_covariance(const AuxiliarySubsystem& aux, const std::vector<Vector>& subsystem_std);

std::vector<double> block_spectral_radii(const AuxiliaryNetwork& aux);

/// Picks the noise~ vector of one auxiliary subsystem out of the M stacked draws noise(k..k+M-1).
Vector gather_noise(const AuxiliarySubsystem& aux, const std::vector<Vector>& window,
                    const std::vector<int>& noise_offsets);

struct OracleTrace {
    std::vector<Vector> original;   // x(jM), j = 0..J
    std::vector<Vector> auxiliary;  // aux trajectory at j = 0..J
    double max_deviation = 0.0;
};

/// Steps the original network one step at a time and the auxiliary network M steps at a time
/// with the same noise. inputs[k] and noise[k] are stacked over subsystems, k = 0..J*M-1.
OracleTrace oracle_simulate(const Network& net, const AuxiliaryNetwork& aux, const Vector& x0,
                            const std::vector<Vector>& inputs, const std::vector<Vector>& noise, int J);

}  // namespace compabs
