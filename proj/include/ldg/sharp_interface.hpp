#ifndef LDG_SHARP_INTERFACE_HPP
#define LDG_SHARP_INTERFACE_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ldg/fields.hpp"
#include "ldg/tensor.hpp"

// Sharp-interface limit toolkit: the boundary quadratic form a_Q, the sharp
// energy, the standing-wave profile, generalized signed distance functions
// built by characteristics, recovery sequences with exact volume matching,
// and the diffuse-vs-sharp gap diagnostic.

namespace ldg {

// a_Q(xi) = |xi|^2 + ratio |(Q + s_plus/3 I) xi|^2 and its 2D counterpart
// with (P + s_plus/2 I2).
double a_Q(const QTensor& q, const Vec3& xi, double ratio, double s_plus);
double a_Q(const PTensor& p, const Vec2& xi, double ratio, double s_plus);

// Closed counterclockwise curve sampled at (x_k, y_k) with derived unit
// outward normals and arclength weights.
struct BoundaryCurve {
    std::vector<Vec2> pts;
    std::vector<Vec2> normals;
    std::vector<double> ds;

    static BoundaryCurve circle(const Vec2& center, double radius, int m);
    // Normals and weights come from a periodic cubic spline through the
    // samples; m >= 32 and counterclockwise orientation are required.
    static BoundaryCurve from_samples(std::vector<Vec2> samples);

    int size() const { return static_cast<int>(pts.size()); }
    double perimeter() const;
    double area() const;  // shoelace, positive for counterclockwise
    bool inside(const Vec2& x) const;
    bool is_simple() const;  // pairwise segment intersection scan
    bool in_unit_square() const;
    // Periodic cubic-spline resampling to m points uniform in chord length.
    BoundaryCurve resample(int m) const;
};

// Spatially varying symmetric positive definite quadratic form
// a(x, xi) = xi^T A(x) xi with ellipticity bounds lam |xi|^2 <= a <= Lam |xi|^2.
// dA returns {dA/dx, dA/dy}; when absent, central differences are used.
struct QuadraticFormField {
    std::function<Mat2(const Vec2&)> A;
    std::function<std::array<Mat2, 2>(const Vec2&)> dA;
    double lam = 1.0;
    double Lam = 1.0;

    double eval(const Vec2& x, const Vec2& xi) const;
    std::array<Mat2, 2> grad_A(const Vec2& x) const;

    static QuadraticFormField identity();
    static QuadraticFormField constant(const Mat2& m);
    // A = I + ratio (P + s_plus/2 I)^2 for a uniform director field.
    static QuadraticFormField from_constant_P(const PTensor& p, double ratio,
                                              double s_plus);
};

// Boundary term and total of the sharp-interface energy for a 2D reduced
// state: (wp lb / 3) closed-int sqrt(a_P(nu)) ds plus the elastic+bulk
// integral and the void integral over the exterior of the curve.
struct SharpEnergy {
    double boundary_term;
    double e0_total;
};
SharpEnergy sharp_energy(const PTensorField& p, const BoundaryCurve& curve,
                         const ModelParams& params);

// Solution of eps chi' = sqrt(W(chi) + eps), chi(0) = alpha, tabulated until
// chi(eta) = beta (alpha < beta). Strictly increasing with finite eta.
struct StandingWave {
    double eps = 0;
    double eta = 0;
    std::vector<double> ts;
    std::vector<double> chis;

    // Truncated profile: alpha below 0, beta above eta, interpolation between.
    double eval(double t) const;
};
StandingWave solve_chi(double eps, const std::function<double(double)>& W, double alpha,
                       double beta);

// Phi(s) = int_0^s sqrt(W); closed form s^2/2 - s^3/3 for the standard well.
double Phi_of(double s);
double Phi_of(double s, const std::function<double(double)>& W);
// c0 = int_alpha^beta sqrt(W(s)) ds (signed).
double c0(double alpha, double beta, const std::function<double(double)>& W);

// Generalized signed distance to the curve under the form a: the solution of
// a(x, grad h) = 1, h|_curve = 0, h < 0 inside, built by integrating the
// characteristic system
//   X' = 2 A(X) P,   U' = 2 P^T A(X) P,   P' = -grad_x (P^T A P),
// from X(0) on the curve, U(0) = 0, P(0) = nu / sqrt(a(y, nu)), so that
// U = 2s along each curve. Queries off the characteristic band report miss.
class GeneralizedSdf {
  public:
    struct Options {
        int boundary_samples = 1024;
        double store_spacing = 1e-3;  // spacing of stored samples in h units
        int max_band_retries = 6;
    };

    struct Query {
        double h;
        Vec2 grad;
    };

    static GeneralizedSdf build(const QuadraticFormField& form, const BoundaryCurve& curve,
                                double band_halfwidth, const Options& opts);
    static GeneralizedSdf build(const QuadraticFormField& form, const BoundaryCurve& curve,
                                double band_halfwidth);

    std::optional<Query> query(const Vec2& x) const;
    bool inside(const Vec2& x) const { return curve_.inside(x); }
    // Row-by-row scanline classification of grid nodes (1 = inside).
    std::vector<unsigned char> inside_mask(const Grid2D& grid) const;

    double band() const { return band_; }                      // halfwidth actually used
    double hamiltonian_drift() const { return max_drift_; }    // max |a(X,P) - 1|
    double max_u_minus_2s() const { return max_u_err_; }       // |U - 2s| check
    const BoundaryCurve& curve() const { return curve_; }

  private:
    BoundaryCurve curve_;
    double band_ = 0;
    double max_drift_ = 0;
    double max_u_err_ = 0;
    // Stored characteristic samples, one strand per boundary sample.
    struct Node {
        Vec2 x;
        Vec2 p;
        double u;
        double s;
    };
    std::vector<std::vector<Node>> strands_;
    // Uniform-bucket index over all stored nodes.
    double cell_ = 0;
    int bx_ = 0, by_ = 0;
    double ox_ = 0, oy_ = 0;
    std::vector<std::vector<std::pair<int, int>>> buckets_;

    void index_nodes();
};

enum class RecoveryProfile { ode, tanh_wave };

// Phase-transition field: profile of the generalized signed distance,
// shifted by delta; pure phase values off the band.
ScalarField recovery_phi_at_delta(const GeneralizedSdf& sdf, const Grid2D& grid,
                                  RecoveryProfile profile, const StandingWave& wave,
                                  double delta);
// Bisects delta so the trapezoid integral matches target_volume (monotone in
// delta). Throws if the target is not attainable.
ScalarField recovery_phi(const GeneralizedSdf& sdf, const Grid2D& grid,
                         RecoveryProfile profile, const StandingWave& wave,
                         double target_volume, double* delta_out = nullptr);

struct GammaGapRow {
    double eps;
    double diffuse;
    double sharp_target;
    double rel_gap;
    double equipartition_ratio;
};

struct GammaGapOptions {
    RecoveryProfile profile = RecoveryProfile::tanh_wave;
    int boundary_samples = 1024;
    int max_grid_n = 1025;
    int min_grid_n = 65;
};

// For each eps: build the recovery field on a grid with h <= eps/4, evaluate
// the discrete functional int [eps a(x, grad phi) + W(phi)/eps], the sharp
// target 2 c0 closed-int sqrt(a(x,nu)) ds, their relative gap and the
// gradient-to-potential equipartition ratio.
std::vector<GammaGapRow> gamma_gap(const QuadraticFormField& form,
                                   const BoundaryCurve& curve,
                                   const std::vector<double>& eps_list,
                                   const GammaGapOptions& opts = {});

void save_gamma_gap_csv(const std::string& path, const std::vector<GammaGapRow>& rows);

}  // namespace ldg

#endif
