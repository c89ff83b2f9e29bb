#ifndef LDG_ENERGY_HPP
#define LDG_ENERGY_HPP

#include "ldg/fields.hpp"
#include "ldg/tensor.hpp"

// Discrete evaluation of the nondimensional reduced free energy
//
//   E[P,phi] = int 1/2 |grad P|^2 + lambda_bar^2 f_bulk(P)
//            + wp lb  int eps |grad phi|^2 + eps^-1 W(phi)
//            + wa lb  int eps |(P + s_plus/2 I) grad phi|^2
//            + wv lb^2 int 1/2 (1-phi)^2 |P|^2,          W(s) = s^2 (1-s)^2,
//
// using the gradient operators and trapezoid quadrature from fields.hpp so
// that the variational derivatives in dynamics.hpp are exact discrete
// differentials of these sums.

namespace ldg {

struct EnergyBreakdown {
    double e_ldg = 0;   // elastic + bulk, weight 1
    double e_mix = 0;   // raw mixing integral, weighted by wp*lb in total
    double e_anch = 0;  // raw anchoring integral, weighted by wa*lb
    double e_void = 0;  // raw void integral, weighted by wv*lb^2
    double total = 0;
    double w_mix = 0, w_anch = 0, w_void = 0;  // the weights used
};

double energy_ldg_2d(const PTensorField& p, const ModelParams& params);
double energy_mix(const ScalarField& phi, const ModelParams& params);
double energy_anch_2d(const PTensorField& p, const ScalarField& phi,
                      const ModelParams& params);
double energy_void_2d(const PTensorField& p, const ScalarField& phi,
                      const ModelParams& params);
EnergyBreakdown energy_total(const PTensorField& p, const ScalarField& phi,
                             const ModelParams& params);

inline double double_well(double s) {
    const double t = s * (1.0 - s);
    return t * t;
}

}  // namespace ldg

#endif
