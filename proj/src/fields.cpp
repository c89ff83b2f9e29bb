#include "ldg/fields.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace ldg {

Grid2D::Grid2D(int nodes_per_side) : n(nodes_per_side), h(1.0 / (nodes_per_side - 1)) {
    if (nodes_per_side < 8) throw std::invalid_argument("Grid2D requires n >= 8");
}

double Grid2D::weight(int i, int j) const {
    double w = h * h;
    if (i == 0 || i == n - 1) w *= 0.5;
    if (j == 0 || j == n - 1) w *= 0.5;
    return w;
}

void ScalarField::zero_boundary() {
    const int n = grid.n;
    for (int i = 0; i < n; ++i) {
        values[grid.idx(i, 0)] = 0.0;
        values[grid.idx(i, n - 1)] = 0.0;
        values[grid.idx(0, i)] = 0.0;
        values[grid.idx(n - 1, i)] = 0.0;
    }
}

void PTensorField::zero_boundary() {
    const int n = grid.n;
    for (int i = 0; i < n; ++i) {
        for (int k : {grid.idx(i, 0), grid.idx(i, n - 1), grid.idx(0, i), grid.idx(n - 1, i)}) {
            p11[k] = 0.0;
            p12[k] = 0.0;
        }
    }
}

void gradient_into(const Grid2D& g, const std::vector<double>& v, std::vector<double>& gx,
                   std::vector<double>& gy) {
    const int n = g.n;
    const double inv2h = 0.5 / g.h;
    const double invh = 1.0 / g.h;
    gx.resize(g.size());  // every entry is written below
    gy.resize(g.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int k = g.idx(i, j);
            if (i > 0 && i < n - 1)
                gx[k] = (v[g.idx(i + 1, j)] - v[g.idx(i - 1, j)]) * inv2h;
            else if (i == 0)
                gx[k] = (-3.0 * v[k] + 4.0 * v[g.idx(1, j)] - v[g.idx(2, j)]) * 0.5 * invh;
            else
                gx[k] = (3.0 * v[k] - 4.0 * v[g.idx(n - 2, j)] + v[g.idx(n - 3, j)]) * 0.5 * invh;
            if (j > 0 && j < n - 1)
                gy[k] = (v[g.idx(i, j + 1)] - v[g.idx(i, j - 1)]) * inv2h;
            else if (j == 0)
                gy[k] = (-3.0 * v[k] + 4.0 * v[g.idx(i, 1)] - v[g.idx(i, 2)]) * 0.5 * invh;
            else
                gy[k] = (3.0 * v[k] - 4.0 * v[g.idx(i, n - 2)] + v[g.idx(i, n - 3)]) * 0.5 * invh;
        }
    }
}

VectorField gradient(const ScalarField& f) {
    VectorField out;
    gradient_into(f.grid, f.values, out.x, out.y);
    return out;
}

void gradient_adjoint_into(const Grid2D& g, const std::vector<double>& ax,
                           const std::vector<double>& ay, std::vector<double>& out) {
    const int n = g.n;
    const double inv2h = 0.5 / g.h;
    const double invh = 1.0 / g.h;
    out.assign(g.size(), 0.0);
    // Transpose of the stencils in gradient_into: each gradient entry
    // scatters its coefficients back onto the nodes it reads.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int k = g.idx(i, j);
            const double cx = ax[k];
            if (cx != 0.0) {
                if (i > 0 && i < n - 1) {
                    out[g.idx(i + 1, j)] += cx * inv2h;
                    out[g.idx(i - 1, j)] -= cx * inv2h;
                } else if (i == 0) {
                    out[k] += cx * -1.5 * invh;
                    out[g.idx(1, j)] += cx * 2.0 * invh;
                    out[g.idx(2, j)] += cx * -0.5 * invh;
                } else {
                    out[k] += cx * 1.5 * invh;
                    out[g.idx(n - 2, j)] += cx * -2.0 * invh;
                    out[g.idx(n - 3, j)] += cx * 0.5 * invh;
                }
            }
            const double cy = ay[k];
            if (cy != 0.0) {
                if (j > 0 && j < n - 1) {
                    out[g.idx(i, j + 1)] += cy * inv2h;
                    out[g.idx(i, j - 1)] -= cy * inv2h;
                } else if (j == 0) {
                    out[k] += cy * -1.5 * invh;
                    out[g.idx(i, 1)] += cy * 2.0 * invh;
                    out[g.idx(i, 2)] += cy * -0.5 * invh;
                } else {
                    out[k] += cy * 1.5 * invh;
                    out[g.idx(i, n - 2)] += cy * -2.0 * invh;
                    out[g.idx(i, n - 3)] += cy * 0.5 * invh;
                }
            }
        }
    }
}

ScalarField laplacian(const ScalarField& f) {
    const Grid2D& g = f.grid;
    const int n = g.n;
    const double invh2 = 1.0 / (g.h * g.h);
    ScalarField out(g);
    for (int i = 1; i < n - 1; ++i) {
        for (int j = 1; j < n - 1; ++j) {
            const int k = g.idx(i, j);
            out.values[k] = (f.values[g.idx(i + 1, j)] + f.values[g.idx(i - 1, j)] +
                             f.values[g.idx(i, j + 1)] + f.values[g.idx(i, j - 1)] -
                             4.0 * f.values[k]) *
                            invh2;
        }
    }
    return out;
}

ScalarField divergence(const Grid2D& g, const std::vector<double>& vx,
                       const std::vector<double>& vy) {
    const int n = g.n;
    const double inv2h = 0.5 / g.h;
    ScalarField out(g);
    for (int i = 1; i < n - 1; ++i) {
        for (int j = 1; j < n - 1; ++j) {
            out.values[g.idx(i, j)] = (vx[g.idx(i + 1, j)] - vx[g.idx(i - 1, j)] +
                                       vy[g.idx(i, j + 1)] - vy[g.idx(i, j - 1)]) *
                                      inv2h;
        }
    }
    return out;
}

double integrate_values(const Grid2D& g, const std::vector<double>& v) {
    const int n = g.n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            double w = 1.0;
            if (j == 0 || j == n - 1) w = 0.5;
            row += w * v[g.idx(i, j)];
        }
        if (i == 0 || i == n - 1) row *= 0.5;
        sum += row;
    }
    return sum * g.h * g.h;
}

double integrate(const ScalarField& f) { return integrate_values(f.grid, f.values); }

void save_fields_csv(const std::string& path, const ScalarField& phi,
                     const PTensorField& p) {
    if (phi.grid.n != p.grid.n)
        throw std::invalid_argument("save_fields_csv: grid size mismatch");
    const std::string tmp = path + ".tmp";
    FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw std::runtime_error("save_fields_csv: cannot open " + tmp);
    const int n = phi.grid.n;
    std::fprintf(f, "i,j,x,y,phi,p11,p12\n");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int k = phi.grid.idx(i, j);
            std::fprintf(f, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, j, phi.grid.x(i),
                         phi.grid.y(j), phi.values[k], p.p11[k], p.p12[k]);
        }
    }
    if (std::fclose(f) != 0) throw std::runtime_error("save_fields_csv: write failed");
    std::filesystem::rename(tmp, path);
}

std::pair<ScalarField, PTensorField> load_fields_csv(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_fields_csv: cannot open " + path);
    char header[128];
    if (!std::fgets(header, sizeof header, f)) {
        std::fclose(f);
        throw std::runtime_error("load_fields_csv: empty file " + path);
    }
    std::string h(header);
    while (!h.empty() && (h.back() == '\n' || h.back() == '\r')) h.pop_back();
    if (h != "i,j,x,y,phi,p11,p12") {
        std::fclose(f);
        throw std::runtime_error("load_fields_csv: bad header in " + path);
    }
    struct Row {
        int i, j;
        double phi, p11, p12;
    };
    std::vector<Row> rows;
    int i, j;
    double x, y, vphi, v11, v12;
    while (std::fscanf(f, "%d,%d,%lf,%lf,%lf,%lf,%lf\n", &i, &j, &x, &y, &vphi, &v11,
                       &v12) == 7) {
        rows.push_back({i, j, vphi, v11, v12});
    }
    std::fclose(f);
    const auto count = rows.size();
    const int n = static_cast<int>(std::llround(std::sqrt(double(count))));
    if (count == 0 || static_cast<std::size_t>(n) * n != count)
        throw std::runtime_error("load_fields_csv: row count is not a square in " + path);
    Grid2D g(n);
    ScalarField phi(g);
    PTensorField p(g);
    for (const Row& r : rows) {
        if (r.i < 0 || r.i >= n || r.j < 0 || r.j >= n)
            throw std::runtime_error("load_fields_csv: node index out of range in " + path);
        if (!std::isfinite(r.phi) || !std::isfinite(r.p11) || !std::isfinite(r.p12))
            throw std::runtime_error("load_fields_csv: non-finite value in " + path);
        const int k = g.idx(r.i, r.j);
        phi.values[k] = r.phi;
        p.p11[k] = r.p11;
        p.p12[k] = r.p12;
    }
    return {std::move(phi), std::move(p)};
}

}  // namespace ldg
