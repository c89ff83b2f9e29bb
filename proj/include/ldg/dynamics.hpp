#ifndef LDG_DYNAMICS_HPP
#define LDG_DYNAMICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ldg/energy.hpp"
#include "ldg/fields.hpp"
#include "ldg/tensor.hpp"

// Volume-preserving L2 gradient flow for the reduced energy. The variational
// derivatives are the exact differentials of the discrete sums in energy.hpp,
// so backtracking descent is monotone by construction and the flow never
// leaves the constraint set (Dirichlet values bitwise fixed, trapezoid volume
// re-projected exactly each step).

namespace ldg {

struct SolverConfig {
    long max_iter = 200000;
    double tol = 2e-2;          // max-norm of the combined projected gradient
    double dt_init = 1e-4;
    double backtrack = 0.5;     // dt shrink factor in (0,1)
    double min_dt = 1e-13;
    std::uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument
};

struct SolverState {
    PTensorField P;
    ScalarField phi;
    long iteration = 0;
    EnergyBreakdown energy;
    double xi = 0;  // last volume multiplier

    SolverState(const Grid2D& g) : P(g), phi(g) {}
};

// Functional derivative of the energy with respect to P under the Frobenius
// pairing dE = int dE/dP : dP. The partial derivative with respect to the
// nodal value p11 (or p12) equals 2 * component * quadrature weight.
PTensorField var_derivative_P(const PTensorField& P, const ScalarField& phi,
                              const ModelParams& params);

// Unconstrained L2 derivative with respect to phi plus the multiplier xi
// whose subtraction gives the derivative projected onto the volume
// constraint (zero discrete interior integral). Boundary entries are 0.
struct PhiDerivative {
    ScalarField field;
    double xi;
};
PhiDerivative var_derivative_phi(const PTensorField& P, const ScalarField& phi,
                                 const ModelParams& params);

enum class StepStatus { accepted, stagnated };

struct StepResult {
    StepStatus status;
    double dt;              // accepted step size
    double grad_norm;       // max-norm of the combined projected gradient at entry
    double volume_error;    // |int phi - v0| after the step
};

// One explicit descent step with backtracking: halve dt until the energy is
// non-increasing, then re-project the volume exactly. `dt_hint` carries the
// last accepted dt between calls (pass dt_init initially).
StepResult step(SolverState& state, const SolverConfig& config, const ModelParams& params,
                double& dt_hint);

enum class StopReason { converged, max_iter, stagnated };

struct MinimizeReport {
    StopReason stop = StopReason::max_iter;
    long iterations = 0;
    std::vector<double> energy_history;  // energy at init, then after each step
    double max_volume_drift = 0;         // max |int phi - v0| over accepted steps
    double max_energy_increase = 0;      // max positive jump along the history
    double final_grad_norm = 0;
};

MinimizeReport minimize(SolverState& state, const SolverConfig& config,
                        const ModelParams& params);

enum class InitKind { disc_tanh, random, ellipse_tanh };
InitKind init_kind_from_string(const std::string& s);  // throws on unknown kind

struct InitOptions {
    double director_angle = 0.0;  // uniform director direction (disc/ellipse)
    double order_factor = 0.5;    // eigenvalue = order_factor * s_plus / 2
    double noise_amplitude = 0.01;
    double aspect = 2.0;          // ellipse_tanh major/minor axis ratio
};

// disc_tanh: phi = (1 - tanh(d / (sqrt(2) eps_bar))) / 2 with d the signed
// distance to the centered circle of area v0_bar, volume-projected; P is a
// uniform director inside {phi > 1/2}. random: same phi, P is seeded noise.
// ellipse_tanh: same-area centered ellipse with the major axis along the
// director angle (a seed able to reach elongated droplet branches).
SolverState init_state(InitKind kind, const ModelParams& params, const Grid2D& grid,
                       std::uint64_t seed, const InitOptions& opts = {});

// Shift interior nodes by a constant so the trapezoid integral equals v0.
void project_volume(ScalarField& phi, double v0);

// Max-norm of (2 dE/dP, dE/dphi - xi) over interior nodes: the nodal
// steepest-descent direction the step uses.
double projected_gradient_norm(const PTensorField& dP, const PhiDerivative& dphi);

}  // namespace ldg

#endif
