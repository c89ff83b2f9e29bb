// ldg: minimize | sweep | gamma-check | sdf-check | gradcheck
//
// Exit codes: 0 success, 1 config error, 2 numerical-criterion failure,
// 3 I/O failure.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldg/run_config.hpp"

namespace {

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        const std::string tok = csv.substr(pos, next - pos);
        if (!tok.empty()) {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument("bad number: " + tok);
            out.push_back(v);
        }
        pos = next + 1;
    }
    return out;
}

int effective_jobs(int jobs) {
    if (const char* env = std::getenv("LDG_NUM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0 && cap < jobs) jobs = cap;
    }
    return jobs < 1 ? 1 : jobs;
}

ldg::RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) {
        ldg::RunConfig c;
        c.validate();
        return c;
    }
    return ldg::load_run_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffuse-interface Landau-de Gennes droplet toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, eps_csv, lambda_csv, omega_a_csv;
    int jobs = 1;
    long long seed = -1;
    bool corrupt_sign = false;

    CLI::App* minimize = app.add_subcommand("minimize", "run one energy minimization");
    minimize->add_option("--config", config_path, "JSON config path");
    minimize->add_option("--out", out_dir, "output directory (overrides config)");
    minimize->add_option("--seed", seed, "seed override");

    CLI::App* sweep = app.add_subcommand("sweep", "(lambda, omega_a) parameter sweep");
    sweep->add_option("--config", config_path, "JSON config path");
    sweep->add_option("--out", out_dir, "output directory (overrides config)");
    sweep->add_option("--seed", seed, "seed override");
    sweep->add_option("--jobs", jobs, "parallel cells");
    sweep->add_option("--lambda-list", lambda_csv, "comma-separated lambdas (m)");
    sweep->add_option("--omega-a-list", omega_a_csv, "comma-separated omega_a/L (1/m)");

    int max_grid_n = 1025;
    CLI::App* gamma = app.add_subcommand("gamma-check", "diffuse-vs-sharp gap check");
    gamma->add_option("--config", config_path, "JSON config path");
    gamma->add_option("--out", out_dir, "output directory");
    gamma->add_option("--eps-list", eps_csv, "comma-separated eps values");
    gamma->add_option("--max-grid-n", max_grid_n,
                      "cap on the internal grid (uncapped runs pick h <= eps/4)");

    CLI::App* sdf = app.add_subcommand("sdf-check", "generalized signed-distance checks");

    CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference derivative audit");
    grad->add_option("--seed", seed, "seed");
    grad->add_flag("--corrupt-sign", corrupt_sign)->group("");  // test fixture, hidden

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(minimize)) {
            ldg::RunConfig cfg;
            try {
                cfg = load_config_or_default(config_path);
                if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
                if (!out_dir.empty()) cfg.out_dir = out_dir;
            } catch (const std::invalid_argument& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return ldg::kExitConfig;
            }
            const ldg::RunResult result = ldg::run_minimize(cfg);
            try {
                ldg::write_run_artifacts(cfg.out_dir, result, ldg::params_from(cfg));
            } catch (const std::exception& e) {
                std::fprintf(stderr, "i/o error: %s\n", e.what());
                return ldg::kExitIo;
            }
            const bool converged = result.report.stop == ldg::StopReason::converged;
            std::printf("label=%s defects=%zu aspect=%.4g energy=%.8g %s\n",
                        ldg::to_string(result.summary.label).c_str(),
                        result.summary.defects.size(), result.summary.stats.aspect_ratio,
                        result.summary.energy.total,
                        converged ? "converged" : "not-converged");
            return converged ? ldg::kExitOk : ldg::kExitCriterion;
        }

        if (app.got_subcommand(sweep)) {
            ldg::RunConfig cfg;
            std::vector<double> lambdas, omega_as;
            try {
                cfg = load_config_or_default(config_path);
                if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
                if (!out_dir.empty()) cfg.out_dir = out_dir;
                lambdas = lambda_csv.empty()
                              ? std::vector<double>{0.8e-6, 1e-6, 2e-6, 5e-6, 7.5e-6}
                              : parse_list(lambda_csv);
                omega_as = omega_a_csv.empty()
                               ? std::vector<double>{1e7, 3e7, 6e7, 9e7, 15e7, 30e7}
                               : parse_list(omega_a_csv);
            } catch (const std::invalid_argument& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return ldg::kExitConfig;
            }
            const auto cells =
                ldg::run_sweep(cfg, lambdas, omega_as, effective_jobs(jobs), cfg.out_dir);
            bool any_failed = false;
            for (const auto& c : cells) {
                std::printf("lam=%g oa=%g -> %s\n", c.lambda, c.omega_a_over_L,
                            c.label.c_str());
                any_failed |= c.failed;
            }
            return any_failed ? ldg::kExitCriterion : ldg::kExitOk;
        }

        if (app.got_subcommand(gamma)) {
            ldg::RunConfig cfg;
            std::vector<double> eps_list;
            try {
                cfg = load_config_or_default(config_path);
                eps_list = eps_csv.empty() ? std::vector<double>{0.04, 0.02, 0.01, 0.005}
                                           : parse_list(eps_csv);
            } catch (const std::invalid_argument& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return ldg::kExitConfig;
            }
            const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
            std::filesystem::create_directories(dir);
            const auto r =
                ldg::run_gamma_check(cfg, eps_list, dir + "/gamma_gap.csv", max_grid_n);
            for (const auto& row : r.rows)
                std::printf("eps=%.4g diffuse=%.6g target=%.6g gap=%.3f%% equip=%.4g\n",
                            row.eps, row.diffuse, row.sharp_target, 100.0 * row.rel_gap,
                            row.equipartition_ratio);
            std::printf("monotone=%s final_gap_ok=%s\n", r.monotone ? "yes" : "no",
                        r.final_under_5pct ? "yes" : "no");
            return r.pass ? ldg::kExitOk : ldg::kExitCriterion;
        }

        if (app.got_subcommand(sdf)) {
            const auto r = ldg::run_sdf_check();
            std::printf("circle_err=%.3g drift=%.3g aniso_axis_err=%.3g sandwich=%s\n",
                        r.max_abs_err_circle, r.hamiltonian_drift, r.max_aniso_axis_err,
                        r.sandwich_ok ? "ok" : "violated");
            return r.pass ? ldg::kExitOk : ldg::kExitCriterion;
        }

        if (app.got_subcommand(grad)) {
            const auto r =
                ldg::run_gradcheck(seed >= 0 ? static_cast<std::uint64_t>(seed) : 42,
                                   corrupt_sign);
            std::printf("max_rel_err=%.3g bulk3d=%.3g\n", r.max_rel_err_terms,
                        r.max_rel_err_bulk3d);
            return r.pass ? ldg::kExitOk : ldg::kExitCriterion;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ldg::kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ldg::kExitIo;
    }
    return ldg::kExitConfig;
}
