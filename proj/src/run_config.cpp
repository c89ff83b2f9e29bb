#include "ldg/run_config.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace ldg {

void RunConfig::validate() const {
    if (grid_n < 16) throw std::invalid_argument("config: grid_n must be >= 16");
    material.validate();
    if (!(lambda > 0)) throw std::invalid_argument("config: lambda must be > 0");
    if (!(eps_bar > 0)) throw std::invalid_argument("config: eps_bar must be > 0");
    if (!(v0_bar > 0) || !(v0_bar < 1))
        throw std::invalid_argument("config: v0_bar must lie in (0,1)");
    if (omega_p_over_L < 0 || omega_a_over_L < 0 || omega_v_over_L < 0)
        throw std::invalid_argument("config: weights must be >= 0");
    solver.validate();
    init_kind_from_string(init_kind);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
    }
    RunConfig c;
    try {
        if (j.contains("grid_n")) c.grid_n = j["grid_n"].get<int>();
        if (j.contains("material")) {
            const auto& m = j["material"];
            if (m.contains("B")) c.material.B = m["B"].get<double>();
            if (m.contains("C")) c.material.C = m["C"].get<double>();
            if (m.contains("L")) c.material.L = m["L"].get<double>();
            c.material.A = m.contains("A") ? m["A"].get<double>()
                                           : -c.material.B * c.material.B / (3.0 * c.material.C);
        }
        if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
        if (j.contains("eps_bar")) c.eps_bar = j["eps_bar"].get<double>();
        if (j.contains("v0_bar")) c.v0_bar = j["v0_bar"].get<double>();
        if (j.contains("omega_p_over_L")) c.omega_p_over_L = j["omega_p_over_L"].get<double>();
        if (j.contains("omega_a_over_L")) c.omega_a_over_L = j["omega_a_over_L"].get<double>();
        if (j.contains("omega_v_over_L")) c.omega_v_over_L = j["omega_v_over_L"].get<double>();
        if (j.contains("solver")) {
            const auto& s = j["solver"];
            if (s.contains("max_iter")) c.solver.max_iter = s["max_iter"].get<long>();
            if (s.contains("tol")) c.solver.tol = s["tol"].get<double>();
            if (s.contains("dt_init")) c.solver.dt_init = s["dt_init"].get<double>();
            if (s.contains("backtrack")) c.solver.backtrack = s["backtrack"].get<double>();
            if (s.contains("min_dt")) c.solver.min_dt = s["min_dt"].get<double>();
        }
        if (j.contains("init")) {
            const auto& s = j["init"];
            if (s.contains("kind")) c.init_kind = s["kind"].get<std::string>();
            if (s.contains("director_angle"))
                c.init.director_angle = s["director_angle"].get<double>();
            if (s.contains("order_factor")) c.init.order_factor = s["order_factor"].get<double>();
            if (s.contains("noise_amplitude"))
                c.init.noise_amplitude = s["noise_amplitude"].get<double>();
            if (s.contains("aspect")) c.init.aspect = s["aspect"].get<double>();
        }
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config: bad field in " + path + ": " + e.what());
    }
    c.validate();
    return c;
}

ModelParams params_from(const RunConfig& config) {
    const double L = config.material.L;
    return ModelParams::from_physical(config.material, config.lambda,
                                      config.eps_bar * config.lambda,
                                      config.omega_p_over_L * L, config.omega_a_over_L * L,
                                      config.omega_v_over_L * L, config.v0_bar);
}

RunResult run_minimize(const RunConfig& config) {
    config.validate();
    const ModelParams params = params_from(config);
    const Grid2D grid(config.grid_n);
    SolverState state =
        init_state(init_kind_from_string(config.init_kind), params, grid, config.seed,
                   config.init);
    SolverConfig solver = config.solver;
    solver.seed = config.seed;
    MinimizeReport report = minimize(state, solver, params);
    StateSummary summary = summarize_state(state.P, state.phi, params);
    return RunResult{std::move(state), std::move(report), std::move(summary)};
}

void write_run_artifacts(const std::string& dir, const RunResult& result,
                         const ModelParams& params) {
    (void)params;
    std::filesystem::create_directories(dir);
    save_fields_csv(dir + "/fields.csv", result.state.phi, result.state.P);
    save_summary_json(dir + "/analysis.json", result.summary);
    const std::string tmp = dir + "/energy_history.csv.tmp";
    FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw std::runtime_error("write_run_artifacts: cannot open " + tmp);
    std::fprintf(f, "iter,total\n");
    for (std::size_t k = 0; k < result.report.energy_history.size(); ++k)
        std::fprintf(f, "%zu,%.17g\n", k, result.report.energy_history[k]);
    if (std::fclose(f) != 0)
        throw std::runtime_error("write_run_artifacts: write failed");
    std::filesystem::rename(tmp, dir + "/energy_history.csv");
}

// ---------------------------------------------------------------------------

namespace {

std::string cell_dir_name(double lambda, double omega_a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "lam%g_oa%g", lambda, omega_a);
    return buf;
}

}  // namespace

std::vector<SweepCell> run_sweep(const RunConfig& base, const std::vector<double>& lambdas,
                                 const std::vector<double>& omega_as, int jobs,
                                 const std::string& out_dir) {
    if (lambdas.empty() || omega_as.empty())
        throw std::invalid_argument("sweep: lambda and omega_a lists must be nonempty");
    std::filesystem::create_directories(out_dir);

    struct Job {
        double lambda, omega_a;
        std::size_t index;
    };
    std::vector<Job> jobs_list;
    for (std::size_t a = 0; a < lambdas.size(); ++a)
        for (std::size_t b = 0; b < omega_as.size(); ++b)
            jobs_list.push_back({lambdas[a], omega_as[b], jobs_list.size()});

    std::vector<SweepCell> cells(jobs_list.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= jobs_list.size()) return;
            const Job& job = jobs_list[k];
            SweepCell cell;
            cell.lambda = job.lambda;
            cell.omega_a_over_L = job.omega_a;
            try {
                RunConfig cfg = base;
                cfg.lambda = job.lambda;
                cfg.omega_a_over_L = job.omega_a;
                cfg.seed = base.seed + job.index;  // schedule-independent
                const RunResult result = run_minimize(cfg);
                write_run_artifacts(out_dir + "/" + cell_dir_name(job.lambda, job.omega_a),
                                    result, params_from(cfg));
                cell.label = to_string(result.summary.label);
                cell.n_defects = static_cast<int>(result.summary.defects.size());
                cell.aspect_ratio = result.summary.stats.aspect_ratio;
                cell.sup_abs_P = result.summary.sup_abs_P;
                cell.total_energy = result.summary.energy.total;
            } catch (const std::exception&) {
                cell.label = "failed";
                cell.failed = true;
            }
            cells[k] = std::move(cell);
        }
    };

    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(jobs_list.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    save_phase_diagram_csv(out_dir + "/phase_diagram.csv", cells);
    return cells;
}

void save_phase_diagram_csv(const std::string& path, const std::vector<SweepCell>& cells) {
    const std::string tmp = path + ".tmp";
    FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw std::runtime_error("save_phase_diagram_csv: cannot open " + tmp);
    std::fprintf(f, "lambda,omega_a_over_L,label,n_defects,aspect_ratio,sup_abs_P,total_energy\n");
    for (const SweepCell& c : cells)
        std::fprintf(f, "%.17g,%.17g,%s,%d,%.17g,%.17g,%.17g\n", c.lambda, c.omega_a_over_L,
                     c.label.c_str(), c.n_defects, c.aspect_ratio, c.sup_abs_P,
                     c.total_energy);
    if (std::fclose(f) != 0) throw std::runtime_error("save_phase_diagram_csv: write failed");
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Finite-difference gradient audit.

namespace {

// Independent long-double re-evaluation of the discrete energy (own stencil
// code); keeps the finite-difference oracle below roundoff-clean even after
// dividing by h^2-sized quadrature weights.
long double energy_total_ld(const PTensorField& P, const ScalarField& phi,
                            const ModelParams& params) {
    const Grid2D& g = P.grid;
    const int n = g.n;
    const long double h = 1.0L / (n - 1);
    const long double eps = params.eps_bar;
    const long double lb2 = static_cast<long double>(params.lambda_bar) * params.lambda_bar;
    const long double boc2 = static_cast<long double>(params.b_over_c) * params.b_over_c;
    const long double cm = params.coeff_mix();
    const long double ca = params.coeff_anch();
    const long double cv = params.coeff_void();
    const long double half_s = 0.5L * params.s_plus;

    auto deriv = [&](const std::vector<double>& v, int i, int j, bool along_x) {
        auto val = [&](int a, int b) { return static_cast<long double>(v[g.idx(a, b)]); };
        if (along_x) {
            if (i > 0 && i < n - 1) return (val(i + 1, j) - val(i - 1, j)) / (2.0L * h);
            if (i == 0) return (-3.0L * val(0, j) + 4.0L * val(1, j) - val(2, j)) / (2.0L * h);
            return (3.0L * val(n - 1, j) - 4.0L * val(n - 2, j) + val(n - 3, j)) / (2.0L * h);
        }
        if (j > 0 && j < n - 1) return (val(i, j + 1) - val(i, j - 1)) / (2.0L * h);
        if (j == 0) return (-3.0L * val(i, 0) + 4.0L * val(i, 1) - val(i, 2)) / (2.0L * h);
        return (3.0L * val(i, n - 1) - 4.0L * val(i, n - 2) + val(i, n - 3)) / (2.0L * h);
    };

    long double total = 0.0L;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            long double w = h * h;
            if (i == 0 || i == n - 1) w *= 0.5L;
            if (j == 0 || j == n - 1) w *= 0.5L;
            const int k = g.idx(i, j);
            const long double p11 = P.p11[k], p12 = P.p12[k];
            const long double f = phi.values[k];
            const long double gx11 = deriv(P.p11, i, j, true), gy11 = deriv(P.p11, i, j, false);
            const long double gx12 = deriv(P.p12, i, j, true), gy12 = deriv(P.p12, i, j, false);
            const long double gx = deriv(phi.values, i, j, true),
                              gy = deriv(phi.values, i, j, false);
            const long double t = 2.0L * (p11 * p11 + p12 * p12);
            const long double elastic =
                gx11 * gx11 + gy11 * gy11 + gx12 * gx12 + gy12 * gy12;
            const long double bulk = -0.25L * boc2 * t + 0.25L * t * t;
            const long double wf = f * f * (1.0L - f) * (1.0L - f);
            const long double m11 = p11 + half_s, m22 = -p11 + half_s, m12 = p12;
            const long double vx = m11 * gx + m12 * gy, vy = m12 * gx + m22 * gy;
            const long double om = 1.0L - f;
            total += w * (elastic + lb2 * bulk + cm * (eps * (gx * gx + gy * gy) + wf / eps) +
                          ca * eps * (vx * vx + vy * vy) + cv * 0.5L * om * om * t);
        }
    }
    return total;
}

// central finite difference of the total energy with respect to one nodal dof
double fd_energy(const PTensorField& P, const ScalarField& phi, const ModelParams& params,
                 std::vector<double>& dof, int k) {
    const double h = 1e-6;
    const double saved = dof[k];
    dof[k] = saved + h;
    const long double ep = energy_total_ld(P, phi, params);
    dof[k] = saved - h;
    const long double em = energy_total_ld(P, phi, params);
    dof[k] = saved;
    return static_cast<double>((ep - em) / (2.0L * h));
}

}  // namespace

GradCheckResult run_gradcheck(std::uint64_t seed, bool corrupt_sign) {
    const MaterialConstants mat = MaterialConstants::mbba();
    const ModelParams full = ModelParams::from_physical(mat, 1e-6, 0.005e-6, 3e7 * mat.L,
                                                        1e7 * mat.L, 6e14 * mat.L, 0.09);
    // one variant per energy term, then everything at once
    std::vector<ModelParams> variants(5, full);
    variants[0].omega_p_bar = variants[0].omega_a_bar = variants[0].omega_v_bar = 0;  // ldg
    variants[1].omega_a_bar = variants[1].omega_v_bar = 0;                            // mix
    variants[2].omega_p_bar = variants[2].omega_v_bar = 0;                            // anch
    variants[3].omega_p_bar = variants[3].omega_a_bar = 0;                            // void

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-0.6, 0.6);
    const Grid2D grid(16);

    double worst = 0.0;
    for (const ModelParams& params : variants) {
        PTensorField P(grid);
        ScalarField phi(grid);
        for (int i = 1; i < grid.n - 1; ++i) {
            for (int j = 1; j < grid.n - 1; ++j) {
                const int k = grid.idx(i, j);
                P.p11[k] = amp(rng);
                P.p12[k] = amp(rng);
                phi.values[k] = 0.5 + 0.8 * amp(rng);
            }
        }
        PTensorField dP = var_derivative_P(P, phi, params);
        PhiDerivative dphi = var_derivative_phi(P, phi, params);
        // gradient scale of this variant; errors are measured against it so
        // accidentally tiny entries do not inflate the relative error
        double gmax = 0.0;
        for (int k = 0; k < grid.size(); ++k)
            gmax = std::max({gmax, std::abs(2.0 * dP.p11[k]), std::abs(2.0 * dP.p12[k]),
                             std::abs(dphi.field.values[k])});
        const double floor = std::max(1e-8, 0.01 * gmax);
        if (corrupt_sign) {
            // flip the anchoring contribution of the analytic P-derivative
            ModelParams no_anch = params;
            no_anch.omega_a_bar = 0;
            const PTensorField dP0 = var_derivative_P(P, phi, no_anch);
            for (int k = 0; k < grid.size(); ++k) {
                dP.p11[k] = 2.0 * dP0.p11[k] - dP.p11[k];
                dP.p12[k] = 2.0 * dP0.p12[k] - dP.p12[k];
            }
        }

        std::uniform_int_distribution<int> pick(1, grid.n - 2);
        std::uniform_int_distribution<int> which(0, 2);
        for (int trial = 0; trial < 20; ++trial) {
            const int i = pick(rng), j = pick(rng);
            const int k = grid.idx(i, j);
            const double w = grid.weight(i, j);
            double analytic = 0, fd = 0;
            switch (which(rng)) {
                case 0:
                    analytic = 2.0 * dP.p11[k];
                    fd = fd_energy(P, phi, params, P.p11, k) / w;
                    break;
                case 1:
                    analytic = 2.0 * dP.p12[k];
                    fd = fd_energy(P, phi, params, P.p12, k) / w;
                    break;
                default:
                    analytic = dphi.field.values[k];
                    fd = fd_energy(P, phi, params, phi.values, k) / w;
                    break;
            }
            worst = std::max(worst,
                             std::abs(fd - analytic) /
                                 std::max({std::abs(fd), std::abs(analytic), floor}));
        }
    }

    // 3D bulk gradient vs finite differences of bulk_density/C in 5-dof
    // coordinates: d/dq1 pairs with G11 - G33, off-diagonals with 2 G_ij.
    double worst3d = 0.0;
    std::uniform_real_distribution<double> qamp(-1.2, 1.2);
    for (int trial = 0; trial < 100; ++trial) {
        QTensor q{qamp(rng), qamp(rng), qamp(rng), qamp(rng), qamp(rng)};
        const QTensor grad = bulk_gradient(q, mat);
        const Mat3 gm = grad.matrix();
        const double analytic[5] = {gm[0][0] - gm[2][2], 2.0 * gm[0][1], 2.0 * gm[0][2],
                                    gm[1][1] - gm[2][2], 2.0 * gm[1][2]};
        double scale = 1e-8;
        for (double a : analytic) scale = std::max(scale, 1e-2 * std::abs(a));
        double* dofs[5] = {&q.q1, &q.q2, &q.q3, &q.q4, &q.q5};
        const double h = 1e-6;
        for (int d = 0; d < 5; ++d) {
            const double saved = *dofs[d];
            *dofs[d] = saved + h;
            const double fp = bulk_density(q, mat) / mat.C;
            *dofs[d] = saved - h;
            const double fm = bulk_density(q, mat) / mat.C;
            *dofs[d] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            worst3d = std::max(worst3d, std::abs(fd - analytic[d]) /
                                            std::max({std::abs(fd), std::abs(analytic[d]),
                                                      scale}));
        }
    }

    GradCheckResult r;
    r.max_rel_err_terms = worst;
    r.max_rel_err_bulk3d = worst3d;
    r.pass = worst < 1e-6 && worst3d < 1e-6;
    return r;
}

// ---------------------------------------------------------------------------

namespace {

double dist_to_curve(const BoundaryCurve& dense, const Vec2& x) {
    double best = 1e30;
    const int m = dense.size();
    for (int k = 0; k < m; ++k) {
        const Vec2& a = dense.pts[k];
        const Vec2& b = dense.pts[(k + 1) % m];
        const double ex = b[0] - a[0], ey = b[1] - a[1];
        const double len2 = ex * ex + ey * ey;
        double t = len2 > 0 ? ((x[0] - a[0]) * ex + (x[1] - a[1]) * ey) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, std::hypot(x[0] - a[0] - t * ex, x[1] - a[1] - t * ey));
    }
    return best;
}

}  // namespace

SdfCheckResult run_sdf_check() {
    SdfCheckResult r{};
    const double R = std::sqrt(0.09 / std::numbers::pi);
    const Vec2 c{0.5, 0.5};
    const BoundaryCurve circle = BoundaryCurve::circle(c, R, 512);

    {
        const GeneralizedSdf sdf =
            GeneralizedSdf::build(QuadraticFormField::identity(), circle, 0.05);
        r.hamiltonian_drift = sdf.hamiltonian_drift();
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
        std::uniform_real_distribution<double> rad(-0.9 * sdf.band(), 0.9 * sdf.band());
        double worst = 0.0;
        for (int k = 0; k < 2000; ++k) {
            const double d = rad(rng), th = ang(rng);
            const Vec2 x{c[0] + (R + d) * std::cos(th), c[1] + (R + d) * std::sin(th)};
            const auto q = sdf.query(x);
            if (!q) continue;
            worst = std::max(worst, std::abs(q->h - d));
        }
        r.max_abs_err_circle = worst;
    }

    {
        const QuadraticFormField aniso =
            QuadraticFormField::constant(Mat2{{{4.0, 0.0}, {0.0, 1.0}}});
        const GeneralizedSdf sdf = GeneralizedSdf::build(aniso, circle, 0.05);
        r.hamiltonian_drift = std::max(r.hamiltonian_drift, sdf.hamiltonian_drift());

        // along the x-axis normal the characteristics are straight and
        // a(nu) = 4, so |grad h| = 1/2 and h equals half the distance
        double worst = 0.0;
        for (double d = -0.4 * sdf.band(); d <= 0.4 * sdf.band(); d += 0.004) {
            const auto q = sdf.query(Vec2{c[0] + R + d, c[1]});
            if (!q) continue;
            worst = std::max(worst, std::abs(q->h - 0.5 * d));
        }
        r.max_aniso_axis_err = worst;

        // ellipticity sandwich Lam^-1/2 dist <= |h| <= lam^-1/2 dist
        const BoundaryCurve dense = circle.resample(2048);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
        std::uniform_real_distribution<double> rad(-0.4 * sdf.band(), 0.4 * sdf.band());
        r.sandwich_ok = true;
        for (int k = 0; k < 1000; ++k) {
            const double th = ang(rng);
            const Vec2 x{c[0] + (R + rad(rng)) * std::cos(th),
                         c[1] + (R + rad(rng)) * std::sin(th)};
            const auto q = sdf.query(x);
            if (!q) continue;
            const double dist = dist_to_curve(dense, x);
            const double lo = dist / std::sqrt(aniso.Lam);
            const double hi = dist / std::sqrt(aniso.lam);
            const double slack = 1e-5 + 1e-4 * dist;
            if (std::abs(q->h) < lo - slack || std::abs(q->h) > hi + slack)
                r.sandwich_ok = false;
        }
    }

    r.pass = r.max_abs_err_circle < 1e-4 && r.hamiltonian_drift < 1e-8 &&
             r.max_aniso_axis_err < 1e-4 && r.sandwich_ok;
    return r;
}

GammaCheckResult run_gamma_check(const RunConfig& config, const std::vector<double>& eps_list,
                                 const std::string& csv_path, int max_grid_n) {
    if (eps_list.empty()) throw std::invalid_argument("gamma-check: empty eps list");
    const ModelParams params = params_from(config);
    const double ratio =
        params.omega_p_bar > 0 ? params.omega_a_bar / params.omega_p_bar : 0.0;
    // constant-director field at the bulk-preferred order
    const PTensor p{0.5 * params.s_plus, 0.0};
    const QuadraticFormField form =
        QuadraticFormField::from_constant_P(p, ratio, params.s_plus);
    const double R = std::sqrt(params.v0_bar / std::numbers::pi);
    const BoundaryCurve circle = BoundaryCurve::circle(Vec2{0.5, 0.5}, R, 512);

    GammaGapOptions opts;
    opts.max_grid_n = std::max(max_grid_n, 9);
    opts.min_grid_n = std::min(opts.min_grid_n, opts.max_grid_n);
    GammaCheckResult r;
    r.rows = gamma_gap(form, circle, eps_list, opts);
    if (!csv_path.empty()) save_gamma_gap_csv(csv_path, r.rows);
    r.monotone = true;
    for (std::size_t k = 1; k < r.rows.size(); ++k)
        if (r.rows[k].rel_gap >= r.rows[k - 1].rel_gap) r.monotone = false;
    r.final_under_5pct = r.rows.back().rel_gap < 0.05;
    r.pass = r.monotone && r.final_under_5pct;
    return r;
}

}  // namespace ldg
