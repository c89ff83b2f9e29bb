#ifndef LDG_RUN_CONFIG_HPP
#define LDG_RUN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ldg/analysis.hpp"
#include "ldg/dynamics.hpp"
#include "ldg/sharp_interface.hpp"

// Run configuration (JSON), single-run and sweep drivers, and the numeric
// check drivers behind the CLI subcommands. Exit codes are the machine
// contract: 0 success, 1 config error, 2 numerical-criterion failure,
// 3 I/O failure.

namespace ldg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitCriterion = 2;
inline constexpr int kExitIo = 3;

struct RunConfig {
    int grid_n = 128;
    MaterialConstants material = MaterialConstants::mbba();
    double lambda = 1e-6;           // meters
    double eps_bar = 0.005;
    double v0_bar = 0.09;
    double omega_p_over_L = 3e7;    // 1/m
    double omega_a_over_L = 1e7;    // 1/m
    double omega_v_over_L = 6e14;   // 1/m^2
    SolverConfig solver;
    std::string init_kind = "disc_tanh";
    InitOptions init;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    void validate() const;  // throws std::invalid_argument
};

RunConfig load_run_config(const std::string& path);
ModelParams params_from(const RunConfig& config);

struct RunResult {
    SolverState state;
    MinimizeReport report;
    StateSummary summary;
};

// Minimize from the configured initial state; does not touch the filesystem.
RunResult run_minimize(const RunConfig& config);

// Writes fields.csv, analysis.json and energy_history.csv into dir.
void write_run_artifacts(const std::string& dir, const RunResult& result,
                         const ModelParams& params);

struct SweepCell {
    double lambda;
    double omega_a_over_L;
    std::string label;  // classification or "failed"
    int n_defects = 0;
    double aspect_ratio = 0;
    double sup_abs_P = 0;
    double total_energy = 0;
    bool failed = false;
};

// Full (lambda, omega_a) grid, up to `jobs` cells in parallel, one artifact
// subdirectory per cell plus phase_diagram.csv in out_dir. Deterministic for
// a fixed base config regardless of jobs.
std::vector<SweepCell> run_sweep(const RunConfig& base, const std::vector<double>& lambdas,
                                 const std::vector<double>& omega_as, int jobs,
                                 const std::string& out_dir);
void save_phase_diagram_csv(const std::string& path, const std::vector<SweepCell>& cells);

struct GradCheckResult {
    double max_rel_err_terms;   // per-term and full-energy nodal checks
    double max_rel_err_bulk3d;  // 3D bulk gradient vs finite differences
    bool pass;                  // all < 1e-6
};
// Finite-difference audit of the analytic variational derivatives on a
// 16x16 grid. `corrupt_sign` flips the anchoring contribution to prove the
// check can fail.
GradCheckResult run_gradcheck(std::uint64_t seed, bool corrupt_sign = false);

struct SdfCheckResult {
    double max_abs_err_circle;   // identity form vs analytic signed distance
    double hamiltonian_drift;
    double max_aniso_axis_err;   // diag(4,1): h = distance/2 along the x normal
    bool sandwich_ok;            // ellipticity distance bounds at sampled points
    bool pass;
};
SdfCheckResult run_sdf_check();

struct GammaCheckResult {
    std::vector<GammaGapRow> rows;
    bool monotone;
    bool final_under_5pct;
    bool pass;
};
GammaCheckResult run_gamma_check(const RunConfig& config, const std::vector<double>& eps_list,
                                 const std::string& csv_path, int max_grid_n = 1025);

}  // namespace ldg

#endif
