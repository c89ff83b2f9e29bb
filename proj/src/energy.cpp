#include "ldg/energy.hpp"

namespace ldg {

double energy_ldg_2d(const PTensorField& p, const ModelParams& params) {
    const Grid2D& g = p.grid;
    thread_local std::vector<double> gx11, gy11, gx12, gy12;
    gradient_into(g, p.p11, gx11, gy11);
    gradient_into(g, p.p12, gx12, gy12);
    const double lb2 = params.lambda_bar * params.lambda_bar;
    const double boc = params.b_over_c;
    double sum = 0.0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const int k = g.idx(i, j);
            // 1/2 |grad P|^2 = |grad p11|^2 + |grad p12|^2
            const double elastic = gx11[k] * gx11[k] + gy11[k] * gy11[k] +
                                   gx12[k] * gx12[k] + gy12[k] * gy12[k];
            const double bulk = reduced_bulk_density(PTensor{p.p11[k], p.p12[k]}, boc);
            sum += g.weight(i, j) * (elastic + lb2 * bulk);
        }
    }
    return sum;
}

double energy_mix(const ScalarField& phi, const ModelParams& params) {
    const Grid2D& g = phi.grid;
    thread_local std::vector<double> gx, gy;
    gradient_into(g, phi.values, gx, gy);
    const double eps = params.eps_bar;
    double sum = 0.0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const int k = g.idx(i, j);
            sum += g.weight(i, j) *
                   (eps * (gx[k] * gx[k] + gy[k] * gy[k]) + double_well(phi.values[k]) / eps);
        }
    }
    return sum;
}

double energy_anch_2d(const PTensorField& p, const ScalarField& phi,
                      const ModelParams& params) {
    const Grid2D& g = p.grid;
    thread_local std::vector<double> gx, gy;
    gradient_into(g, phi.values, gx, gy);
    const double half_s = 0.5 * params.s_plus;
    double sum = 0.0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const int k = g.idx(i, j);
            // M = P + s_plus/2 I2
            const double m11 = p.p11[k] + half_s;
            const double m22 = -p.p11[k] + half_s;
            const double m12 = p.p12[k];
            const double vx = m11 * gx[k] + m12 * gy[k];
            const double vy = m12 * gx[k] + m22 * gy[k];
            sum += g.weight(i, j) * (vx * vx + vy * vy);
        }
    }
    return params.eps_bar * sum;
}

double energy_void_2d(const PTensorField& p, const ScalarField& phi,
                      const ModelParams& params) {
    (void)params;
    const Grid2D& g = p.grid;
    double sum = 0.0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const int k = g.idx(i, j);
            const double om = 1.0 - phi.values[k];
            const double n2 = 2.0 * (p.p11[k] * p.p11[k] + p.p12[k] * p.p12[k]);
            sum += g.weight(i, j) * 0.5 * om * om * n2;
        }
    }
    return sum;
}

// Fused single-sweep evaluation; this is the energy the flow sees, so it is
// also the function the variational derivatives must differentiate exactly.
EnergyBreakdown energy_total(const PTensorField& p, const ScalarField& phi,
                             const ModelParams& params) {
    const Grid2D& g = p.grid;
    thread_local std::vector<double> gx11, gy11, gx12, gy12, gpx, gpy;
    gradient_into(g, p.p11, gx11, gy11);
    gradient_into(g, p.p12, gx12, gy12);
    gradient_into(g, phi.values, gpx, gpy);

    const double lb2 = params.lambda_bar * params.lambda_bar;
    const double boc2 = params.b_over_c * params.b_over_c;
    const double eps = params.eps_bar;
    const double half_s = 0.5 * params.s_plus;
    const int n = g.n;
    const double h2 = g.h * g.h;

    double e_ldg = 0, e_mix = 0, e_anch = 0, e_void = 0;
    for (int i = 0; i < n; ++i) {
        const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        double r_ldg = 0, r_mix = 0, r_anch = 0, r_void = 0;
        for (int j = 0; j < n; ++j) {
            const double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
            const int k = i * n + j;
            const double p11 = p.p11[k], p12 = p.p12[k];
            const double f = phi.values[k];
            const double t = 2.0 * (p11 * p11 + p12 * p12);
            const double elastic = gx11[k] * gx11[k] + gy11[k] * gy11[k] +
                                   gx12[k] * gx12[k] + gy12[k] * gy12[k];
            r_ldg += w * (elastic + lb2 * (-0.25 * boc2 * t + 0.25 * t * t));
            const double gx = gpx[k], gy = gpy[k];
            const double wf = f * (1.0 - f);
            r_mix += w * (eps * (gx * gx + gy * gy) + wf * wf / eps);
            const double vx = (p11 + half_s) * gx + p12 * gy;
            const double vy = p12 * gx + (-p11 + half_s) * gy;
            r_anch += w * eps * (vx * vx + vy * vy);
            const double om = 1.0 - f;
            r_void += w * 0.5 * om * om * t;
        }
        e_ldg += wi * r_ldg;
        e_mix += wi * r_mix;
        e_anch += wi * r_anch;
        e_void += wi * r_void;
    }

    EnergyBreakdown e;
    e.e_ldg = e_ldg * h2;
    e.e_mix = e_mix * h2;
    e.e_anch = e_anch * h2;
    e.e_void = e_void * h2;
    e.w_mix = params.coeff_mix();
    e.w_anch = params.coeff_anch();
    e.w_void = params.coeff_void();
    e.total = e.e_ldg + e.w_mix * e.e_mix + e.w_anch * e.e_anch + e.w_void * e.e_void;
    return e;
}

}  // namespace ldg
