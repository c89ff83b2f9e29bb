#ifndef LDG_TENSOR_HPP
#define LDG_TENSOR_HPP

#include <array>
#include <cstddef>

// Pointwise Landau-de Gennes tensor algebra: the 3x3 symmetric traceless
// Q-tensor (5 dof), its 2x2 reduced counterpart P (2 dof), material
// constants and the nondimensional parameter group.

namespace ldg {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using Vec2 = std::array<double, 2>;

// Symmetric traceless 3x3 tensor stored by its five independent components:
// q1=Q11, q2=Q12, q3=Q13, q4=Q22, q5=Q23, Q33=-Q11-Q22. Tracelessness and
// symmetry hold by construction, so gradients never leave the constraint set.
struct QTensor {
    double q1 = 0, q2 = 0, q3 = 0, q4 = 0, q5 = 0;

    Mat3 matrix() const;
    double norm2() const;      // |Q|^2 = sum of all 9 squared entries
    double tr_sq() const;      // tr Q^2 (== norm2 for symmetric Q)
    double tr_cube() const;    // tr Q^3

    QTensor& operator+=(const QTensor& o);
    QTensor operator+(const QTensor& o) const;
    QTensor operator-(const QTensor& o) const;
    QTensor operator*(double c) const;
};

// Reduced 2x2 symmetric traceless tensor [[p11,p12],[p12,-p11]].
struct PTensor {
    double p11 = 0, p12 = 0;

    double tr_sq() const { return 2.0 * (p11 * p11 + p12 * p12); }
    double norm2() const { return tr_sq(); }
    // positive eigenvalue
    double order() const;
};

// Landau-de Gennes material constants. A is a re-scaled temperature and may
// be negative; B, C, L are strictly positive. Units: A,B,C in N.m^-2, L in N.
struct MaterialConstants {
    double A, B, C, L;

    static MaterialConstants mbba();  // B=0.64e4, C=0.35e4, L=4e-11, A=-B^2/(3C)
    void validate() const;            // throws std::invalid_argument
};

// Nondimensional parameter group of the rescaled energy:
//   lambda_bar^2 = lambda^2 C / L,  eps_bar = eps / lambda,
//   omega_p_bar = omega_p / sqrt(CL), omega_a_bar = omega_a / sqrt(CL),
//   omega_v_bar = omega_v / C.
// Also carries s_plus and B/C, which the reduced 2D energy needs pointwise.
struct ModelParams {
    double lambda_bar = 0;
    double eps_bar = 0;
    double omega_p_bar = 0;
    double omega_a_bar = 0;
    double omega_v_bar = 0;
    double v0_bar = 0;
    double s_plus = 0;
    double b_over_c = 0;

    // Coefficients of the three penalty integrals in the rescaled energy.
    double coeff_mix() const { return omega_p_bar * lambda_bar; }
    double coeff_anch() const { return omega_a_bar * lambda_bar; }
    double coeff_void() const { return omega_v_bar * lambda_bar * lambda_bar; }

    static ModelParams from_physical(const MaterialConstants& mat,
                                     double lambda, double eps,
                                     double omega_p, double omega_a,
                                     double omega_v, double v0_bar);
};

// s_+ = (B + sqrt(B^2 - 24AC)) / (4C).  Requires B^2 - 24AC >= 0.
double s_plus(const MaterialConstants& mat);

// Bulk density A/2 tr Q^2 - B/3 tr Q^3 + C/4 (tr Q^2)^2.
double bulk_density(const QTensor& q, const MaterialConstants& mat);

// Minimum of the scaled bulk density F_b/C over symmetric traceless tensors.
// For A < 0 this is attained at the uniaxial state with s = s_plus; for
// A >= 0 the minimum is 0 at Q = 0 and `at_zero` is set.
struct BulkMin {
    double value;
    bool at_zero;
};
BulkMin bulk_min_bound(const MaterialConstants& mat);

// P0(A) = A - tr(A)/3 I restricted to symmetric input; exact and idempotent.
QTensor project_traceless(const Mat3& m);

// Gradient of the scaled bulk F_b/C on the traceless-symmetric space:
//   (A/C + tr Q^2) Q - B/C (Q^2 - tr Q^2 / 3 I).
QTensor bulk_gradient(const QTensor& q, const MaterialConstants& mat);

// |(Q + s_plus/3 I) g|^2 for a gradient direction g (the eps factor is
// applied by the energy assembly, not here).
double anchoring_density_3d(const QTensor& q, const Vec3& gphi, double s_plus);

// Block embedding of the reduced tensor: [[P + s_plus/6 I2, 0], [0, -s_plus/3]].
QTensor embed_P_to_Q(const PTensor& p, double s_plus);

// Reduced 2D bulk density -B^2/(4C^2) tr P^2 + (tr P^2)^2 / 4.
double reduced_bulk_density(const PTensor& p, const MaterialConstants& mat);
double reduced_bulk_density(const PTensor& p, double b_over_c);

// Eigen-decomposition of P: order = positive eigenvalue, angle = director
// angle in [0, pi). A zero tensor has no director; `degenerate` flags it.
struct Director {
    double angle;
    double order;
    bool degenerate;
};
Director director_of_P(const PTensor& p);

}  // namespace ldg

#endif
