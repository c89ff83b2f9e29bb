#include "ldg/tensor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ldg {

Mat3 QTensor::matrix() const {
    return Mat3{{{q1, q2, q3}, {q2, q4, q5}, {q3, q5, -q1 - q4}}};
}

double QTensor::norm2() const {
    const double q33 = -q1 - q4;
    return q1 * q1 + q4 * q4 + q33 * q33 + 2.0 * (q2 * q2 + q3 * q3 + q5 * q5);
}

double QTensor::tr_sq() const { return norm2(); }

double QTensor::tr_cube() const {
    // tr Q^3 = sum_{ijk} Q_ij Q_jk Q_ki, expanded on the 5-dof storage.
    const Mat3 m = matrix();
    double t = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) t += m[i][j] * m[j][k] * m[k][i];
    return t;
}

QTensor& QTensor::operator+=(const QTensor& o) {
    q1 += o.q1;
    q2 += o.q2;
    q3 += o.q3;
    q4 += o.q4;
    q5 += o.q5;
    return *this;
}

QTensor QTensor::operator+(const QTensor& o) const {
    QTensor r = *this;
    r += o;
    return r;
}

QTensor QTensor::operator-(const QTensor& o) const {
    return QTensor{q1 - o.q1, q2 - o.q2, q3 - o.q3, q4 - o.q4, q5 - o.q5};
}

QTensor QTensor::operator*(double c) const {
    return QTensor{q1 * c, q2 * c, q3 * c, q4 * c, q5 * c};
}

double PTensor::order() const { return std::sqrt(p11 * p11 + p12 * p12); }

MaterialConstants MaterialConstants::mbba() {
    const double B = 0.64e4, C = 0.35e4;
    return MaterialConstants{-B * B / (3.0 * C), B, C, 4e-11};
}

void MaterialConstants::validate() const {
    if (!(B > 0) || !(C > 0) || !(L > 0))
        throw std::invalid_argument("material constants require B, C, L > 0");
    if (B * B - 24.0 * A * C < 0)
        throw std::invalid_argument("material constants require B^2 - 24AC >= 0");
}

ModelParams ModelParams::from_physical(const MaterialConstants& mat, double lambda,
                                       double eps, double omega_p, double omega_a,
                                       double omega_v, double v0_bar) {
    mat.validate();
    if (!(lambda > 0) || !(eps > 0))
        throw std::invalid_argument("lambda and eps must be positive");
    if (!(v0_bar > 0) || !(v0_bar < 1))
        throw std::invalid_argument("v0_bar must lie in (0,1) on the unit square");
    ModelParams p;
    const double cl = std::sqrt(mat.C * mat.L);
    p.lambda_bar = lambda * std::sqrt(mat.C / mat.L);
    p.eps_bar = eps / lambda;
    p.omega_p_bar = omega_p / cl;
    p.omega_a_bar = omega_a / cl;
    p.omega_v_bar = omega_v / mat.C;
    p.v0_bar = v0_bar;
    p.s_plus = ldg::s_plus(mat);
    p.b_over_c = mat.B / mat.C;
    return p;
}

double s_plus(const MaterialConstants& mat) {
    const double disc = mat.B * mat.B - 24.0 * mat.A * mat.C;
    if (disc < 0)
        throw std::domain_error("s_plus: B^2 - 24AC < 0 (no real uniaxial minimum)");
    if (!(mat.C > 0)) throw std::domain_error("s_plus: C must be positive");
    return (mat.B + std::sqrt(disc)) / (4.0 * mat.C);
}

double bulk_density(const QTensor& q, const MaterialConstants& mat) {
    const double t2 = q.tr_sq();
    const double t3 = q.tr_cube();
    return 0.5 * mat.A * t2 - mat.B / 3.0 * t3 + 0.25 * mat.C * t2 * t2;
}

BulkMin bulk_min_bound(const MaterialConstants& mat) {
    if (mat.A >= 0) return {0.0, true};
    // Uniaxial Q = s(n x n - I/3) has tr Q^2 = 2s^2/3 and tr Q^3 = 2s^3/9,
    // so F_b/C at s = s_plus gives the global minimum for A < 0.
    const double s = s_plus(mat);
    const double t2 = 2.0 * s * s / 3.0;
    const double t3 = 2.0 * s * s * s / 9.0;
    const double fb = 0.5 * mat.A * t2 - mat.B / 3.0 * t3 + 0.25 * mat.C * t2 * t2;
    return {fb / mat.C, false};
}

QTensor project_traceless(const Mat3& m) {
    const double shift = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    return QTensor{m[0][0] - shift, m[0][1], m[0][2], m[1][1] - shift, m[1][2]};
}

QTensor bulk_gradient(const QTensor& q, const MaterialConstants& mat) {
    const double t2 = q.tr_sq();
    const double a = mat.A / mat.C + t2;
    const double b = mat.B / mat.C;
    const Mat3 m = q.matrix();
    Mat3 sq{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += m[i][k] * m[k][j];
            sq[i][j] = s;
        }
    // (A/C + tr Q^2) Q - B/C (Q^2 - tr Q^2/3 I)
    Mat3 g{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g[i][j] = a * m[i][j] - b * sq[i][j];
    for (int i = 0; i < 3; ++i) g[i][i] += b * t2 / 3.0;
    return project_traceless(g);
}

double anchoring_density_3d(const QTensor& q, const Vec3& gphi, double s_plus) {
    const Mat3 m = q.matrix();
    const double c = s_plus / 3.0;
    double out = 0.0;
    for (int i = 0; i < 3; ++i) {
        double vi = c * gphi[i];
        for (int j = 0; j < 3; ++j) vi += m[i][j] * gphi[j];
        out += vi * vi;
    }
    return out;
}

QTensor embed_P_to_Q(const PTensor& p, double s_plus) {
    // [[P + s_plus/6 I2, 0], [0, -s_plus/3]]: trace = 2 s_plus/6 - s_plus/3 = 0.
    const double d = s_plus / 6.0;
    return QTensor{p.p11 + d, p.p12, 0.0, -p.p11 + d, 0.0};
}

double reduced_bulk_density(const PTensor& p, double b_over_c) {
    const double t = p.tr_sq();
    return -0.25 * b_over_c * b_over_c * t + 0.25 * t * t;
}

double reduced_bulk_density(const PTensor& p, const MaterialConstants& mat) {
    return reduced_bulk_density(p, mat.B / mat.C);
}

Director director_of_P(const PTensor& p) {
    const double order = p.order();
    if (order == 0.0) return {0.0, 0.0, true};
    double angle = 0.5 * std::atan2(p.p12, p.p11);
    if (angle < 0) angle += std::numbers::pi;
    if (angle >= std::numbers::pi) angle -= std::numbers::pi;
    return {angle, order, false};
}

}  // namespace ldg
