#include "ldg/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ldg {

void SolverConfig::validate() const {
    if (!(tol > 0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
    if (!(backtrack > 0) || !(backtrack < 1))
        throw std::invalid_argument("SolverConfig: backtrack factor must be in (0,1)");
    if (!(dt_init > min_dt) || !(min_dt > 0))
        throw std::invalid_argument("SolverConfig: need dt_init > min_dt > 0");
    if (max_iter < 0) throw std::invalid_argument("SolverConfig: max_iter must be >= 0");
}

namespace {

void zero_boundary(const Grid2D& g, std::vector<double>& v) {
    for (int i = 0; i < g.n; ++i) {
        v[g.idx(i, 0)] = 0.0;
        v[g.idx(i, g.n - 1)] = 0.0;
        v[g.idx(0, i)] = 0.0;
        v[g.idx(g.n - 1, i)] = 0.0;
    }
}

// Scratch buffers reused across steps; the flow runs hundreds of thousands
// of sweeps, so per-call allocation matters.
struct FlowWorkspace {
    int n = 0;
    std::vector<double> w;
    std::vector<double> gx11, gy11, gx12, gy12, gpx, gpy;
    std::vector<double> ax, ay, adj11, adj12, adjphi;
};

FlowWorkspace& workspace_for(const Grid2D& g) {
    thread_local FlowWorkspace ws;
    if (ws.n != g.n) {
        ws.n = g.n;
        ws.w.resize(g.size());
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) ws.w[g.idx(i, j)] = g.weight(i, j);
        ws.ax.resize(g.size());
        ws.ay.resize(g.size());
    }
    return ws;
}

// Exact differentials of the discrete energy, both fields in one pass.
void flow_derivatives(const PTensorField& P, const ScalarField& phi,
                      const ModelParams& params, FlowWorkspace& ws, PTensorField& dP,
                      ScalarField& dphi_field, double& xi) {
    const Grid2D& g = P.grid;
    const int sz = g.size();
    gradient_into(g, P.p11, ws.gx11, ws.gy11);
    gradient_into(g, P.p12, ws.gx12, ws.gy12);
    gradient_into(g, phi.values, ws.gpx, ws.gpy);

    const double lb2 = params.lambda_bar * params.lambda_bar;
    const double boc2 = params.b_over_c * params.b_over_c;
    const double half_s = 0.5 * params.s_plus;
    const double eps = params.eps_bar;
    const double cm = params.coeff_mix();
    const double ca = params.coeff_anch();
    const double caeps = ca * eps;
    const double cv = params.coeff_void();

    // elastic adjoints for both P components
    for (int k = 0; k < sz; ++k) {
        ws.ax[k] = ws.w[k] * ws.gx11[k];
        ws.ay[k] = ws.w[k] * ws.gy11[k];
    }
    gradient_adjoint_into(g, ws.ax, ws.ay, ws.adj11);
    for (int k = 0; k < sz; ++k) {
        ws.ax[k] = ws.w[k] * ws.gx12[k];
        ws.ay[k] = ws.w[k] * ws.gy12[k];
    }
    gradient_adjoint_into(g, ws.ax, ws.ay, ws.adj12);

    // flux adjoint of the phi gradient terms: 2 eps (cm g + ca M^2 g)
    for (int k = 0; k < sz; ++k) {
        const double m11 = P.p11[k] + half_s;
        const double m22 = -P.p11[k] + half_s;
        const double m12 = P.p12[k];
        const double gx = ws.gpx[k], gy = ws.gpy[k];
        const double vx = m11 * gx + m12 * gy;
        const double vy = m12 * gx + m22 * gy;
        ws.ax[k] = ws.w[k] * 2.0 * eps * (cm * gx + ca * (m11 * vx + m12 * vy));
        ws.ay[k] = ws.w[k] * 2.0 * eps * (cm * gy + ca * (m12 * vx + m22 * vy));
    }
    gradient_adjoint_into(g, ws.ax, ws.ay, ws.adjphi);

    for (int k = 0; k < sz; ++k) {
        const double p11 = P.p11[k], p12 = P.p12[k];
        const double f = phi.values[k];
        const double t = 2.0 * (p11 * p11 + p12 * p12);
        const double bulk = lb2 * (-0.5 * boc2 + t);
        const double om = 1.0 - f;
        const double voidc = cv * om * om;
        const double gx = ws.gpx[k], gy = ws.gpy[k];
        const double vx = (p11 + half_s) * gx + p12 * gy;
        const double vy = p12 * gx + (-p11 + half_s) * gy;
        const double invw = 1.0 / ws.w[k];
        dP.p11[k] = ws.adj11[k] * invw + (bulk + voidc) * p11 + caeps * (gx * vx - gy * vy);
        dP.p12[k] = ws.adj12[k] * invw + (bulk + voidc) * p12 + caeps * (gx * vy + gy * vx);
        const double wprime = 2.0 * f * (f - 1.0) * (2.0 * f - 1.0);
        dphi_field.values[k] = ws.adjphi[k] * invw + cm * wprime / eps + cv * (f - 1.0) * t;
    }
    zero_boundary(g, dP.p11);
    zero_boundary(g, dP.p12);
    zero_boundary(g, dphi_field.values);

    double num = 0.0, den = 0.0;
    for (int i = 1; i < g.n - 1; ++i) {
        for (int j = 1; j < g.n - 1; ++j) {
            const int k = g.idx(i, j);
            num += ws.w[k] * dphi_field.values[k];
            den += ws.w[k];
        }
    }
    xi = num / den;
}

}  // namespace

PTensorField var_derivative_P(const PTensorField& P, const ScalarField& phi,
                              const ModelParams& params) {
    FlowWorkspace& ws = workspace_for(P.grid);
    PTensorField dP(P.grid);
    ScalarField dphi(P.grid);
    double xi = 0;
    flow_derivatives(P, phi, params, ws, dP, dphi, xi);
    return dP;
}

PhiDerivative var_derivative_phi(const PTensorField& P, const ScalarField& phi,
                                 const ModelParams& params) {
    FlowWorkspace& ws = workspace_for(P.grid);
    PTensorField dP(P.grid);
    PhiDerivative out{ScalarField(P.grid), 0.0};
    flow_derivatives(P, phi, params, ws, dP, out.field, out.xi);
    return out;
}

double projected_gradient_norm(const PTensorField& dP, const PhiDerivative& dphi) {
    const Grid2D& g = dP.grid;
    double m = 0.0;
    for (int i = 1; i < g.n - 1; ++i) {
        for (int j = 1; j < g.n - 1; ++j) {
            const int k = g.idx(i, j);
            m = std::max(m, std::abs(2.0 * dP.p11[k]));
            m = std::max(m, std::abs(2.0 * dP.p12[k]));
            m = std::max(m, std::abs(dphi.field.values[k] - dphi.xi));
        }
    }
    return m;
}

void project_volume(ScalarField& phi, double v0) {
    const Grid2D& g = phi.grid;
    const double vol = integrate(phi);
    double wint = 0.0;
    for (int i = 1; i < g.n - 1; ++i)
        for (int j = 1; j < g.n - 1; ++j) wint += g.weight(i, j);
    const double shift = (v0 - vol) / wint;
    for (int i = 1; i < g.n - 1; ++i)
        for (int j = 1; j < g.n - 1; ++j) phi.values[g.idx(i, j)] += shift;
}

StepResult step(SolverState& state, const SolverConfig& config, const ModelParams& params,
                double& dt_hint) {
    const Grid2D& g = state.P.grid;
    FlowWorkspace& ws = workspace_for(g);
    thread_local PTensorField dP(Grid2D(8));
    thread_local ScalarField dphi(Grid2D(8));
    thread_local PTensorField trialP(Grid2D(8));
    thread_local ScalarField trialPhi(Grid2D(8));
    if (dP.grid.n != g.n) {
        dP = PTensorField(g);
        dphi = ScalarField(g);
        trialP = PTensorField(g);
        trialPhi = ScalarField(g);
    }
    double xi = 0;
    flow_derivatives(state.P, state.phi, params, ws, dP, dphi, xi);
    double gnorm = 0.0;
    for (int i = 1; i < g.n - 1; ++i) {
        for (int j = 1; j < g.n - 1; ++j) {
            const int k = g.idx(i, j);
            gnorm = std::max({gnorm, std::abs(2.0 * dP.p11[k]), std::abs(2.0 * dP.p12[k]),
                              std::abs(dphi.values[k] - xi)});
        }
    }

    const double e0 = state.energy.total;
    const double accept_tol = 1e-12 * std::max(1.0, std::abs(e0));

    double dt = dt_hint;
    while (true) {
        trialP = state.P;
        trialPhi = state.phi;
        for (int i = 1; i < g.n - 1; ++i) {
            for (int j = 1; j < g.n - 1; ++j) {
                const int k = g.idx(i, j);
                trialP.p11[k] -= dt * 2.0 * dP.p11[k];
                trialP.p12[k] -= dt * 2.0 * dP.p12[k];
                trialPhi.values[k] -= dt * (dphi.values[k] - xi);
            }
        }
        project_volume(trialPhi, params.v0_bar);
        const EnergyBreakdown e1 = energy_total(trialP, trialPhi, params);
        if (e1.total <= e0 + accept_tol) {
            std::swap(state.P, trialP);
            std::swap(state.phi, trialPhi);
            state.energy = e1;
            state.xi = xi;
            state.iteration += 1;
            dt_hint = dt;
            return {StepStatus::accepted, dt, gnorm,
                    std::abs(integrate(state.phi) - params.v0_bar)};
        }
        dt *= config.backtrack;
        if (dt < config.min_dt)
            return {StepStatus::stagnated, dt, gnorm, 0.0};
    }
}

MinimizeReport minimize(SolverState& state, const SolverConfig& config,
                        const ModelParams& params) {
    config.validate();
    MinimizeReport rep;
    state.energy = energy_total(state.P, state.phi, params);
    rep.energy_history.push_back(state.energy.total);

    double dt_hint = config.dt_init;
    for (long it = 0; it < config.max_iter; ++it) {
        // Retry a larger dt periodically so the accepted step can track the
        // stability limit from below.
        if (it % 25 == 0) dt_hint = std::min(config.dt_init, dt_hint / config.backtrack);

        const double before = state.energy.total;
        const StepResult r = step(state, config, params, dt_hint);
        rep.final_grad_norm = r.grad_norm;
        if (r.grad_norm < config.tol) {
            rep.stop = StopReason::converged;
            rep.iterations = it;
            return rep;
        }
        if (r.status == StepStatus::stagnated) {
            rep.stop = StopReason::stagnated;
            rep.iterations = it;
            return rep;
        }
        rep.energy_history.push_back(state.energy.total);
        rep.max_volume_drift = std::max(rep.max_volume_drift, r.volume_error);
        rep.max_energy_increase =
            std::max(rep.max_energy_increase, state.energy.total - before);
        rep.iterations = it + 1;
    }
    rep.stop = StopReason::max_iter;
    // Report the gradient norm at the final iterate.
    const PTensorField dP = var_derivative_P(state.P, state.phi, params);
    const PhiDerivative dphi = var_derivative_phi(state.P, state.phi, params);
    rep.final_grad_norm = projected_gradient_norm(dP, dphi);
    if (rep.final_grad_norm < config.tol) rep.stop = StopReason::converged;
    return rep;
}

InitKind init_kind_from_string(const std::string& s) {
    if (s == "disc_tanh") return InitKind::disc_tanh;
    if (s == "random") return InitKind::random;
    if (s == "ellipse_tanh") return InitKind::ellipse_tanh;
    throw std::invalid_argument("unknown init kind: " + s);
}

SolverState init_state(InitKind kind, const ModelParams& params, const Grid2D& grid,
                       std::uint64_t seed, const InitOptions& opts) {
    SolverState st(grid);
    const double r = std::sqrt(params.v0_bar / std::numbers::pi);
    const double cx = 0.5, cy = 0.5;
    const double width = std::numbers::sqrt2 * params.eps_bar;
    const bool ellipse = kind == InitKind::ellipse_tanh;
    const double a = ellipse ? r * std::sqrt(opts.aspect) : r;
    const double b = ellipse ? r / std::sqrt(opts.aspect) : r;
    const double ca = std::cos(opts.director_angle), sa = std::sin(opts.director_angle);
    for (int i = 0; i < grid.n; ++i) {
        for (int j = 0; j < grid.n; ++j) {
            const double dx = grid.x(i) - cx, dy = grid.y(j) - cy;
            // major axis along the director angle
            const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
            const double f = std::hypot(u / a, v / b);
            const double d = (f - 1.0) * b;  // approximate signed distance
            st.phi.values[grid.idx(i, j)] = 0.5 * (1.0 - std::tanh(d / width));
        }
    }
    st.phi.zero_boundary();
    project_volume(st.phi, params.v0_bar);

    if (kind == InitKind::disc_tanh || kind == InitKind::ellipse_tanh) {
        const double s = params.s_plus * opts.order_factor;  // eigenvalue s/2
        const double c2 = 0.5 * s * std::cos(2.0 * opts.director_angle);
        const double s2 = 0.5 * s * std::sin(2.0 * opts.director_angle);
        for (int i = 1; i < grid.n - 1; ++i) {
            for (int j = 1; j < grid.n - 1; ++j) {
                const int k = grid.idx(i, j);
                if (st.phi.values[k] > 0.5) {
                    st.P.p11[k] = c2;
                    st.P.p12[k] = s2;
                }
            }
        }
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-opts.noise_amplitude,
                                                    opts.noise_amplitude);
        for (int i = 1; i < grid.n - 1; ++i) {
            for (int j = 1; j < grid.n - 1; ++j) {
                const int k = grid.idx(i, j);
                st.P.p11[k] = dist(rng);
                st.P.p12[k] = dist(rng);
            }
        }
    }
    st.energy = energy_total(st.P, st.phi, params);
    return st;
}

}  // namespace ldg
