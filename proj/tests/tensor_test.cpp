#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ldg/tensor.hpp"

using namespace ldg;

namespace {

QTensor random_q(std::mt19937_64& rng, double amp) {
    std::uniform_real_distribution<double> d(-amp, amp);
    return QTensor{d(rng), d(rng), d(rng), d(rng), d(rng)};
}

QTensor uniaxial(double s, const Vec3& n) {
    Mat3 m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = s * (n[i] * n[j] - (i == j ? 1.0 / 3.0 : 0.0));
    return project_traceless(m);
}

Mat3 random_rotation(std::mt19937_64& rng) {
    // rotation from a normalized quaternion
    std::normal_distribution<double> g(0.0, 1.0);
    double q[4] = {g(rng), g(rng), g(rng), g(rng)};
    double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    for (double& v : q) v /= n;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return Mat3{{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                 {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                 {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

QTensor rotate(const QTensor& q, const Mat3& r) {
    const Mat3 m = q.matrix();
    Mat3 rm{}, rmrt{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += r[i][k] * m[k][j];
            rm[i][j] = s;
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += rm[i][k] * r[j][k];
            rmrt[i][j] = s;
        }
    return project_traceless(rmrt);
}

double frob_inner(const QTensor& a, const QTensor& b) {
    const Mat3 ma = a.matrix(), mb = b.matrix();
    double s = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += ma[i][j] * mb[i][j];
    return s;
}

}  // namespace

TEST_CASE("s_plus closed form") {
    // A = -B^2/(3C) makes the discriminant 9B^2, so s_plus = B/C
    MaterialConstants mbba = MaterialConstants::mbba();
    CHECK(s_plus(mbba) == doctest::Approx(mbba.B / mbba.C).epsilon(1e-14));
    CHECK(s_plus(mbba) == doctest::Approx(1.8285714285714285).epsilon(1e-12));

    CHECK(s_plus(MaterialConstants{0, 4, 1, 1}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s_plus(MaterialConstants{0, 0, 1, 1}) == doctest::Approx(0.0));

    CHECK_THROWS_AS(s_plus(MaterialConstants{1e4, 1, 1, 1}), std::domain_error);
}

TEST_CASE("bulk density values") {
    const MaterialConstants mat{-1, 3, 1, 1};
    CHECK(bulk_density(QTensor{}, mat) == 0.0);

    // uniaxial s=1: tr Q^2 = 2/3, tr Q^3 = 2/9 -> A/3 - 2B/27 + C/9 = -4/9
    const QTensor q = uniaxial(1.0, Vec3{0, 0, 1});
    CHECK(q.tr_sq() == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(q.tr_cube() == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
    CHECK(bulk_density(q, mat) == doctest::Approx(-4.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("bulk density frame invariance") {
    const MaterialConstants mat = MaterialConstants::mbba();
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
        const QTensor q = random_q(rng, 1.5);
        const QTensor qr = rotate(q, random_rotation(rng));
        const double a = bulk_density(q, mat), b = bulk_density(qr, mat);
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("bulk_min_bound") {
    const MaterialConstants mat = MaterialConstants::mbba();
    const BulkMin mb = bulk_min_bound(mat);
    CHECK_FALSE(mb.at_zero);

    // equals the scaled density at the uniaxial minimizer
    const QTensor qstar = uniaxial(s_plus(mat), Vec3{1, 0, 0});
    CHECK(bulk_density(qstar, mat) / mat.C == doctest::Approx(mb.value).epsilon(1e-13));

    // scan a uniaxial s grid: nothing lower
    for (double s = -3.0; s <= 3.0; s += 0.01) {
        const QTensor q = uniaxial(s, Vec3{0, 1, 0});
        CHECK(bulk_density(q, mat) / mat.C >= mb.value - 1e-12);
    }

    // random sampling never goes below the bound (A < 0)
    std::mt19937_64 rng(17);
    for (int k = 0; k < 1000000; ++k) {
        const QTensor q = random_q(rng, 2.0);
        CHECK_UNARY(bulk_density(q, mat) / mat.C >= mb.value - 1e-12);
    }

    // B = 0: quadratic vertex -A^2/(4C^2) after scaling
    const MaterialConstants nb{-2, 0, 1.5, 1};
    CHECK(bulk_min_bound(nb).value ==
          doctest::Approx(-nb.A * nb.A / (4.0 * nb.C * nb.C)).epsilon(1e-13));

    // numeric continuity as A -> 0^-
    const MaterialConstants near0{-1e-9, 4, 1, 1};
    const MaterialConstants at0{0, 4, 1, 1};
    CHECK(std::abs(bulk_min_bound(near0).value -
                   bulk_density(uniaxial(s_plus(at0), Vec3{1, 0, 0}), at0) / at0.C) < 1e-6);

    CHECK(bulk_min_bound(MaterialConstants{1, 1, 1, 1}).at_zero);
    CHECK(bulk_min_bound(MaterialConstants{1, 1, 1, 1}).value == 0.0);
}

TEST_CASE("project_traceless") {
    const Mat3 id{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    const QTensor z = project_traceless(id);
    CHECK(z.norm2() == 0.0);

    const Mat3 diag{{{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}};
    const QTensor d = project_traceless(diag);
    CHECK(d.q1 == doctest::Approx(-1.0));
    CHECK(d.q4 == doctest::Approx(0.0));
    CHECK(d.matrix()[2][2] == doctest::Approx(1.0));

    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
        const QTensor q = random_q(rng, 2.0);
        // traceless input maps to itself, and the projection is idempotent
        const QTensor p = project_traceless(q.matrix());
        CHECK(frob_inner(p - q, p - q) == 0.0);
    }
}

TEST_CASE("project_traceless is self-adjoint") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int k = 0; k < 30; ++k) {
        // symmetric, not traceless
        Mat3 a{}, b{};
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                a[i][j] = a[j][i] = d(rng);
                b[i][j] = b[j][i] = d(rng);
            }
        auto inner = [](const Mat3& x, const Mat3& y) {
            double s = 0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) s += x[i][j] * y[i][j];
            return s;
        };
        const double lhs = inner(project_traceless(a).matrix(), b);
        const double rhs = inner(a, project_traceless(b).matrix());
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("bulk_gradient matches finite differences") {
    const MaterialConstants mat = MaterialConstants::mbba();
    std::mt19937_64 rng(9);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        QTensor q = random_q(rng, 1.7);
        const Mat3 g = bulk_gradient(q, mat).matrix();
        const double analytic[5] = {g[0][0] - g[2][2], 2 * g[0][1], 2 * g[0][2],
                                    g[1][1] - g[2][2], 2 * g[1][2]};
        double* dofs[5] = {&q.q1, &q.q2, &q.q3, &q.q4, &q.q5};
        for (int d = 0; d < 5; ++d) {
            const double h = 1e-6;
            const double saved = *dofs[d];
            *dofs[d] = saved + h;
            const double fp = bulk_density(q, mat) / mat.C;
            *dofs[d] = saved - h;
            const double fm = bulk_density(q, mat) / mat.C;
            *dofs[d] = saved;
            const double fd = (fp - fm) / (2 * h);
            worst = std::max(worst,
                             std::abs(fd - analytic[d]) /
                                 std::max({std::abs(fd), std::abs(analytic[d]), 1e-8}));
        }
    }
    CHECK(worst < 1e-8);

    CHECK(bulk_gradient(QTensor{}, mat).norm2() == 0.0);

    // stationary at the uniaxial minimizer
    const QTensor qstar = uniaxial(s_plus(mat), Vec3{0, 1, 0});
    CHECK(std::sqrt(bulk_gradient(qstar, mat).norm2()) < 1e-10);
}

TEST_CASE("anchoring density 3d") {
    const MaterialConstants mat = MaterialConstants::mbba();
    const double sp = s_plus(mat);

    CHECK(anchoring_density_3d(uniaxial(1.0, Vec3{1, 0, 0}), Vec3{0, 0, 0}, sp) == 0.0);

    // Q = 0, s_plus = 3: |I gphi|^2 = 1
    CHECK(anchoring_density_3d(QTensor{}, Vec3{1, 0, 0}, 3.0) == doctest::Approx(1.0));

    // uniaxial at s_plus with gphi along an eigenvector of eigenvalue -s_plus/3
    // (any direction orthogonal to the director): perfect tangential anchoring
    const QTensor q = uniaxial(sp, Vec3{0, 0, 1});
    CHECK(anchoring_density_3d(q, Vec3{1, 0, 0}, sp) == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("embed_P_to_Q") {
    const double sp = 1.8285714285714285;
    const QTensor z = embed_P_to_Q(PTensor{0, 0}, sp);
    CHECK(z.q1 == doctest::Approx(0.304762).epsilon(1e-5));
    CHECK(z.q4 == doctest::Approx(0.304762).epsilon(1e-5));
    CHECK(z.matrix()[2][2] == doctest::Approx(-0.609524).epsilon(1e-5));

    CHECK(embed_P_to_Q(PTensor{0, 0}, 0.0).norm2() == 0.0);

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int k = 0; k < 25; ++k) {
        const PTensor p{d(rng), d(rng)};
        const QTensor q = embed_P_to_Q(p, sp);
        const Mat3 m = q.matrix();
        CHECK(m[0][0] + m[1][1] + m[2][2] == 0.0);  // exact by construction
        // |embed(P)|^2 = |P|^2 + s_plus^2/6
        CHECK(q.norm2() ==
              doctest::Approx(p.norm2() + sp * sp / 6.0).epsilon(1e-13));
    }
}

TEST_CASE("reduced bulk density") {
    const MaterialConstants mat = MaterialConstants::mbba();
    CHECK(reduced_bulk_density(PTensor{0, 0}, mat) == 0.0);

    // vertex in t = tr P^2 at t* = B^2/(2C^2), value -B^4/(16 C^4)
    const double boc = mat.B / mat.C;
    const double tstar = boc * boc / 2.0;
    CHECK(tstar == doctest::Approx(1.671836).epsilon(1e-6));
    const double pmag = std::sqrt(tstar / 2.0);
    CHECK(reduced_bulk_density(PTensor{pmag, 0}, mat) ==
          doctest::Approx(-std::pow(boc, 4) / 16.0).epsilon(1e-13));
    // and nothing nearby is lower
    for (double t = 0; t < 4; t += 0.01) {
        const PTensor p{std::sqrt(t / 2.0), 0};
        CHECK(reduced_bulk_density(p, mat) >= -std::pow(boc, 4) / 16.0 - 1e-12);
    }
}

TEST_CASE("director_of_P") {
    const Director d1 = director_of_P(PTensor{1, 0});
    CHECK(d1.angle == doctest::Approx(0.0));
    CHECK(d1.order == doctest::Approx(1.0));
    CHECK_FALSE(d1.degenerate);

    const Director d2 = director_of_P(PTensor{0, 1});
    CHECK(d2.angle == doctest::Approx(std::numbers::pi / 4));
    CHECK(d2.order == doctest::Approx(1.0));

    const Director d3 = director_of_P(PTensor{-1, 0});
    CHECK(d3.angle == doctest::Approx(std::numbers::pi / 2));
    CHECK(d3.order == doctest::Approx(1.0));

    const Director dz = director_of_P(PTensor{0, 0});
    CHECK(dz.degenerate);
    CHECK(dz.angle == 0.0);
    CHECK(dz.order == 0.0);
}

TEST_CASE("model params from physical inputs") {
    const MaterialConstants mat = MaterialConstants::mbba();
    const double lambda = 1e-6;
    const ModelParams p = ModelParams::from_physical(mat, lambda, 0.005 * lambda,
                                                     3e7 * mat.L, 1e7 * mat.L,
                                                     6e14 * mat.L, 0.09);
    CHECK(p.lambda_bar * p.lambda_bar ==
          doctest::Approx(lambda * lambda * mat.C / mat.L).epsilon(1e-12));
    CHECK(p.lambda_bar * p.lambda_bar == doctest::Approx(87.5).epsilon(1e-12));
    CHECK(p.eps_bar == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(p.omega_p_bar ==
          doctest::Approx(3e7 * mat.L / std::sqrt(mat.C * mat.L)).epsilon(1e-12));
    CHECK(p.omega_a_bar ==
          doctest::Approx(1e7 * mat.L / std::sqrt(mat.C * mat.L)).epsilon(1e-12));
    CHECK(p.omega_v_bar == doctest::Approx(6e14 * mat.L / mat.C).epsilon(1e-12));
    // coefficients of the trailing integrals: (omega/L) lambda and (omega/L) lambda^2
    CHECK(p.coeff_mix() == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(p.coeff_anch() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(p.coeff_void() == doctest::Approx(600.0).epsilon(1e-12));

    CHECK_THROWS_AS(ModelParams::from_physical(mat, lambda, 0.005 * lambda, 1, 1, 1, 1.5),
                    std::invalid_argument);
}
