#ifndef LDG_FIELDS_HPP
#define LDG_FIELDS_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ldg/tensor.hpp"

// Node-centered grids on the unit square with homogeneous Dirichlet
// boundaries, second-order finite-difference operators and trapezoidal
// quadrature. Index convention: node (i,j) sits at (x,y) = (i h, j h) with
// h = 1/(n-1) and flat index i*n + j (j fastest).

namespace ldg {

struct Grid2D {
    int n;
    double h;

    explicit Grid2D(int nodes_per_side);
    int size() const { return n * n; }
    int idx(int i, int j) const { return i * n + j; }
    double x(int i) const { return i * h; }
    double y(int j) const { return j * h; }
    bool is_boundary(int i, int j) const {
        return i == 0 || j == 0 || i == n - 1 || j == n - 1;
    }
    // Trapezoid weight includingable h^2 factor: h^2 * {1/4 corner, 1/2 edge, 1 interior}.
    double weight(int i, int j) const;
};

struct ScalarField {
    Grid2D grid;
    std::vector<double> values;

    explicit ScalarField(const Grid2D& g) : grid(g), values(g.size(), 0.0) {}
    double& at(int i, int j) { return values[grid.idx(i, j)]; }
    double at(int i, int j) const { return values[grid.idx(i, j)]; }
    void zero_boundary();
};

struct PTensorField {
    Grid2D grid;
    std::vector<double> p11, p12;

    explicit PTensorField(const Grid2D& g)
        : grid(g), p11(g.size(), 0.0), p12(g.size(), 0.0) {}
    PTensor at(int i, int j) const {
        const int k = grid.idx(i, j);
        return PTensor{p11[k], p12[k]};
    }
    void set(int i, int j, const PTensor& p) {
        const int k = grid.idx(i, j);
        p11[k] = p.p11;
        p12[k] = p.p12;
    }
    void zero_boundary();
};

struct VectorField {
    std::vector<double> x, y;
};

// Central differences at interior nodes, second-order one-sided stencils on
// the boundary.
VectorField gradient(const ScalarField& f);
void gradient_into(const Grid2D& g, const std::vector<double>& v, std::vector<double>& gx,
                   std::vector<double>& gy);

// Adjoint of the discrete gradient: accumulates sum_k a_k * d(grad f)_k/d f
// into `out`. Needed so energy differentials are exact at the stencil level.
void gradient_adjoint_into(const Grid2D& g, const std::vector<double>& ax,
                           const std::vector<double>& ay, std::vector<double>& out);

// 5-point stencil on interior nodes; boundary output is 0 (Dirichlet nodes
// are never updated).
ScalarField laplacian(const ScalarField& f);

// Central differences of each component summed, interior nodes only.
ScalarField divergence(const Grid2D& g, const std::vector<double>& vx,
                       const std::vector<double>& vy);

// Trapezoidal quadrature over the unit square.
double integrate(const ScalarField& f);
double integrate_values(const Grid2D& g, const std::vector<double>& v);

// Combined CSV serialization of a phase field and a P-tensor field.
// Header `i,j,x,y,phi,p11,p12`, n^2 rows with j fastest, 17 significant
// digits (value round trips are bitwise).
void save_fields_csv(const std::string& path, const ScalarField& phi,
                     const PTensorField& p);
std::pair<ScalarField, PTensorField> load_fields_csv(const std::string& path);

}  // namespace ldg

#endif
