#include "ldg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace ldg {

namespace {

constexpr double kPi = std::numbers::pi;

// wrap an angle difference to (-pi/2, pi/2] (director, not vector, winding)
double wrap_director(double d) {
    d = std::remainder(d, kPi);
    if (d <= -0.5 * kPi) d += kPi;
    return d;
}

}  // namespace

std::vector<Defect> detect_defects(const PTensorField& P, const ScalarField& phi,
                                   double phi_min, double s_plus) {
    return detect_defects_floor(P, phi, phi_min, 0.05 * s_plus);
}

std::vector<Defect> detect_defects_floor(const PTensorField& P, const ScalarField& phi,
                                         double phi_min, double order_floor) {
    const Grid2D& g = P.grid;
    const int n = g.n;

    // charge per plaquette, indexed by lower-left corner
    std::map<std::pair<int, int>, double> charged;
    for (int i = 0; i + 1 < n; ++i) {
        for (int j = 0; j + 1 < n; ++j) {
            const int c[4] = {g.idx(i, j), g.idx(i + 1, j), g.idx(i + 1, j + 1),
                              g.idx(i, j + 1)};
            bool ok = true;
            double theta[4];
            for (int k = 0; k < 4 && ok; ++k) {
                const double p11 = P.p11[c[k]], p12 = P.p12[c[k]];
                const double order = std::sqrt(p11 * p11 + p12 * p12);
                if (phi.values[c[k]] <= phi_min || order <= order_floor) ok = false;
                theta[k] = 0.5 * std::atan2(p12, p11);
            }
            if (!ok) continue;
            double total = 0.0;
            for (int k = 0; k < 4; ++k) total += wrap_director(theta[(k + 1) % 4] - theta[k]);
            const double charge = std::round(total / kPi) * 0.5;
            if (charge != 0.0) charged[{i, j}] = charge;
        }
    }

    // merge adjacent charged plaquettes (8-connectivity: a core that falls on
    // a node aliases its winding onto diagonal neighbours)
    std::vector<Defect> out;
    while (!charged.empty()) {
        std::vector<std::pair<int, int>> stack{charged.begin()->first};
        double qsum = 0.0, wsum = 0.0, xs = 0.0, ys = 0.0;
        int count = 0;
        while (!stack.empty()) {
            const auto ij = stack.back();
            stack.pop_back();
            const auto it = charged.find(ij);
            if (it == charged.end()) continue;
            const double q = it->second;
            charged.erase(it);
            const double w = std::abs(q);
            qsum += q;
            wsum += w;
            xs += w * (g.x(ij.first) + 0.5 * g.h);
            ys += w * (g.y(ij.second) + 0.5 * g.h);
            ++count;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    if (di || dj) stack.push_back({ij.first + di, ij.second + dj});
        }
        if (qsum != 0.0 && wsum > 0.0)
            out.push_back(Defect{xs / wsum, ys / wsum, qsum, count});
    }
    std::sort(out.begin(), out.end(), [](const Defect& a, const Defect& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Marching squares at level 0.5.

namespace {

struct Loop {
    std::vector<Vec2> pts;
    double area;  // signed
};

std::vector<Loop> marching_squares(const ScalarField& phi) {
    const Grid2D& g = phi.grid;
    const int n = g.n;
    const double level = 0.5;
    auto in = [&](int i, int j) { return phi.at(i, j) > level; };

    // edge ids: horizontal edge from (i,j) to (i+1,j) -> 2*(j*n+i); vertical
    // edge from (i,j) to (i,j+1) -> 2*(j*n+i)+1
    auto hedge = [&](int i, int j) { return 2 * (j * n + i); };
    auto vedge = [&](int i, int j) { return 2 * (j * n + i) + 1; };
    auto edge_point = [&](long id) {
        const bool vertical = id & 1;
        const long cell = id >> 1;
        const int i = static_cast<int>(cell % n);
        const int j = static_cast<int>(cell / n);
        double va = phi.at(i, j);
        double vb = vertical ? phi.at(i, j + 1) : phi.at(i + 1, j);
        const double t = (level - va) / (vb - va);
        return vertical ? Vec2{g.x(i), g.y(j) + t * g.h} : Vec2{g.x(i) + t * g.h, g.y(j)};
    };

    // each crossed edge meets exactly two cell segments on a closed contour
    std::map<long, std::vector<long>> adj;  // edge id -> partner edges
    auto link = [&](long a, long b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };

    for (int i = 0; i + 1 < n; ++i) {
        for (int j = 0; j + 1 < n; ++j) {
            int code = 0;
            if (in(i, j)) code |= 1;
            if (in(i + 1, j)) code |= 2;
            if (in(i + 1, j + 1)) code |= 4;
            if (in(i, j + 1)) code |= 8;
            if (code == 0 || code == 15) continue;
            const long b = hedge(i, j);      // bottom
            const long r = vedge(i + 1, j);  // right
            const long t = hedge(i, j + 1);  // top
            const long l = vedge(i, j);      // left
            switch (code) {
                case 1: case 14: link(b, l); break;
                case 2: case 13: link(b, r); break;
                case 3: case 12: link(l, r); break;
                case 4: case 11: link(r, t); break;
                case 6: case 9:  link(b, t); break;
                case 7: case 8:  link(l, t); break;
                case 5: case 10: {
                    const double center = 0.25 * (phi.at(i, j) + phi.at(i + 1, j) +
                                                  phi.at(i + 1, j + 1) + phi.at(i, j + 1));
                    const bool center_in = center > level;
                    if ((code == 5) == center_in) {
                        link(b, r);
                        link(t, l);
                    } else {
                        link(b, l);
                        link(t, r);
                    }
                    break;
                }
            }
        }
    }

    std::vector<Loop> loops;
    std::map<long, bool> visited;
    for (const auto& [start, slots] : adj) {
        if (visited[start]) continue;
        visited[start] = true;
        if (slots.size() != 2) continue;  // open chain endpoint (hits the boundary)
        std::vector<long> chain{start};
        long prev = start, cur = slots[0];
        bool closed = false;
        while (true) {
            if (cur == start) {
                closed = true;
                break;
            }
            const auto it = adj.find(cur);
            if (it == adj.end() || it->second.size() != 2) break;  // open end
            visited[cur] = true;
            chain.push_back(cur);
            const long nxt = it->second[0] == prev ? it->second[1] : it->second[0];
            prev = cur;
            cur = nxt;
        }
        if (!closed || chain.size() < 3) continue;
        Loop loop;
        loop.pts.reserve(chain.size());
        for (long id : chain) loop.pts.push_back(edge_point(id));
        double a = 0.0;
        for (std::size_t k = 0; k < loop.pts.size(); ++k) {
            const Vec2& p = loop.pts[k];
            const Vec2& q = loop.pts[(k + 1) % loop.pts.size()];
            a += p[0] * q[1] - q[0] * p[1];
        }
        loop.area = 0.5 * a;
        loops.push_back(std::move(loop));
    }
    return loops;
}

}  // namespace

InterfaceStats extract_interface(const ScalarField& phi) {
    InterfaceStats st;
    std::vector<Loop> loops = marching_squares(phi);
    if (loops.empty()) return st;
    auto best = std::max_element(loops.begin(), loops.end(), [](const Loop& a, const Loop& b) {
        return std::abs(a.area) < std::abs(b.area);
    });
    const std::vector<Vec2>& p = best->pts;
    const std::size_t m = p.size();

    double per = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const Vec2& a = p[k];
        const Vec2& b = p[(k + 1) % m];
        per += std::hypot(b[0] - a[0], b[1] - a[1]);
    }

    // polygon centroid and central second moments (signed-area formulas)
    const double A = best->area;
    double cx = 0, cy = 0, ixx = 0, iyy = 0, ixy = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const Vec2& a = p[k];
        const Vec2& b = p[(k + 1) % m];
        const double cr = a[0] * b[1] - b[0] * a[1];
        cx += (a[0] + b[0]) * cr;
        cy += (a[1] + b[1]) * cr;
        ixx += (a[0] * a[0] + a[0] * b[0] + b[0] * b[0]) * cr;
        iyy += (a[1] * a[1] + a[1] * b[1] + b[1] * b[1]) * cr;
        ixy += (2 * a[0] * a[1] + a[0] * b[1] + b[0] * a[1] + 2 * b[0] * b[1]) * cr;
    }
    cx /= 6.0 * A;
    cy /= 6.0 * A;
    const double sxx = ixx / (12.0 * A) - cx * cx;
    const double syy = iyy / (12.0 * A) - cy * cy;
    const double sxy = ixy / (24.0 * A) - cx * cy;
    const double tr = sxx + syy;
    const double disc = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
    const double lmax = 0.5 * tr + disc;
    const double lmin = std::max(0.5 * tr - disc, 1e-300);

    st.empty = false;
    st.contour = p;
    st.perimeter = per;
    st.area = std::abs(A);
    st.centroid = Vec2{cx, cy};
    st.aspect_ratio = std::sqrt(lmax / lmin);
    return st;
}

std::string to_string(StateLabel label) {
    switch (label) {
        case StateLabel::radial: return "radial";
        case StateLabel::polar: return "polar";
        case StateLabel::tactoid: return "tactoid";
        case StateLabel::isotropic: return "isotropic";
        default: return "other";
    }
}

StateLabel classify_state(const std::vector<Defect>& defects, const InterfaceStats& stats,
                          double max_order, double s_plus,
                          const ClassifyThresholds& th) {
    if (stats.empty || max_order < th.order_floor * s_plus) return StateLabel::isotropic;
    const double aspect = stats.aspect_ratio;
    auto is_charge = [](const Defect& d, double q) { return std::abs(d.charge - q) < 0.25; };
    if (defects.size() == 1 && is_charge(defects[0], 1.0)) {
        const double dist = std::hypot(defects[0].x - stats.centroid[0],
                                       defects[0].y - stats.centroid[1]);
        if (dist < th.radial_center_dist && aspect < th.radial_aspect)
            return StateLabel::radial;
    }
    if (defects.size() == 2 && is_charge(defects[0], 0.5) && is_charge(defects[1], 0.5)) {
        if (aspect >= th.tactoid_aspect) return StateLabel::tactoid;
        if (aspect >= th.polar_aspect_min) return StateLabel::polar;
    }
    if (defects.empty() && aspect >= th.tactoid_aspect) return StateLabel::tactoid;
    return StateLabel::other;
}

namespace {

// Winding of the interpolated director along a circle; NaN when the loop
// leaves the coherent region.
double loop_winding(const PTensorField& P, const Vec2& c, double r, double min_order) {
    const Grid2D& g = P.grid;
    const int m = 96;
    double total = 0.0, prev = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double th = 2.0 * kPi * k / m;
        const double x = c[0] + r * std::cos(th), y = c[1] + r * std::sin(th);
        if (x < 0 || x > 1 || y < 0 || y > 1) return std::nan("");
        const double fx = x / g.h, fy = y / g.h;
        const int i = std::clamp(static_cast<int>(fx), 0, g.n - 2);
        const int j = std::clamp(static_cast<int>(fy), 0, g.n - 2);
        const double tx = fx - i, ty = fy - j;
        auto lerp = [&](const std::vector<double>& v) {
            return (1 - tx) * ((1 - ty) * v[g.idx(i, j)] + ty * v[g.idx(i, j + 1)]) +
                   tx * ((1 - ty) * v[g.idx(i + 1, j)] + ty * v[g.idx(i + 1, j + 1)]);
        };
        const double p11 = lerp(P.p11), p12 = lerp(P.p12);
        if (std::hypot(p11, p12) < min_order) return std::nan("");
        const double ang = 0.5 * std::atan2(p12, p11);
        if (k > 0) total += wrap_director(ang - prev);
        prev = ang;
    }
    return total;
}

// Weak-field pass: droplet interiors whose order never rises above the
// plaquette floor can still enclose quantized winding. Holes of the coherent
// region are probed with interpolated loops around their centroids.
void add_hole_defects(std::vector<Defect>& defects, const PTensorField& P,
                      const ScalarField& phi, double phi_min, double max_order) {
    const Grid2D& g = P.grid;
    const int n = g.n;
    const double oc = 0.3 * max_order;
    // 0 exterior, 1 coherent droplet, 2 weak droplet (hole candidate)
    std::vector<unsigned char> kind(g.size(), 0);
    for (int k = 0; k < g.size(); ++k) {
        if (phi.values[k] <= phi_min) continue;
        kind[k] = std::hypot(P.p11[k], P.p12[k]) >= oc ? 1 : 2;
    }
    std::vector<int> comp(g.size(), -1);
    int ncomp = 0;
    std::vector<std::pair<double, double>> sums;
    std::vector<int> sizes;
    std::vector<char> touches_exterior;
    for (int start = 0; start < g.size(); ++start) {
        if (kind[start] != 2 || comp[start] >= 0) continue;
        std::vector<int> stack{start};
        comp[start] = ncomp;
        double sx = 0, sy = 0;
        int sz = 0;
        char touches = 0;
        while (!stack.empty()) {
            const int k = stack.back();
            stack.pop_back();
            const int i = k / n, j = k % n;
            sx += g.x(i);
            sy += g.y(j);
            ++sz;
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const int ii = i + di[d], jj = j + dj[d];
                if (ii < 0 || jj < 0 || ii >= n || jj >= n) {
                    touches = 1;
                    continue;
                }
                const int kk = g.idx(ii, jj);
                if (kind[kk] == 0) touches = 1;
                if (kind[kk] == 2 && comp[kk] < 0) {
                    comp[kk] = ncomp;
                    stack.push_back(kk);
                }
            }
        }
        sums.push_back({sx, sy});
        sizes.push_back(sz);
        touches_exterior.push_back(touches);
        ++ncomp;
    }
    for (int c = 0; c < ncomp; ++c) {
        if (touches_exterior[c]) continue;
        const Vec2 centroid{sums[c].first / sizes[c], sums[c].second / sizes[c]};
        // skip holes already explained by plaquette-level defects
        const double hole_r = std::sqrt(sizes[c] * g.h * g.h / kPi);
        bool explained = false;
        for (const Defect& d : defects)
            if (std::hypot(d.x - centroid[0], d.y - centroid[1]) < hole_r + 2 * g.h)
                explained = true;
        if (explained) continue;
        for (double r = hole_r + 2 * g.h; r < hole_r + 8 * g.h; r += g.h) {
            const double total = loop_winding(P, centroid, r, 0.5 * oc);
            if (std::isnan(total)) continue;
            const double charge = std::round(total / kPi) * 0.5;
            if (charge != 0.0)
                defects.push_back(Defect{centroid[0], centroid[1], charge, sizes[c]});
            break;
        }
    }
    std::sort(defects.begin(), defects.end(), [](const Defect& a, const Defect& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
}

}  // namespace

StateSummary summarize_state(const PTensorField& P, const ScalarField& phi,
                             const ModelParams& params) {
    StateSummary s;
    s.stats = extract_interface(phi);
    double max_order = 0.0;
    for (int k = 0; k < P.grid.size(); ++k)
        max_order =
            std::max(max_order, P.p11[k] * P.p11[k] + P.p12[k] * P.p12[k]);
    max_order = std::sqrt(max_order);
    s.sup_abs_P = std::numbers::sqrt2 * max_order;
    // plaquette pass only inside the coherent region; weakly ordered cores
    // have wide, incoherent interiors that the hole pass handles instead
    const double floor = std::min(0.05 * params.s_plus, 0.3 * max_order);
    s.defects = detect_defects_floor(P, phi, 0.5, floor);
    add_hole_defects(s.defects, P, phi, 0.5, max_order);
    s.label = classify_state(s.defects, s.stats, max_order, params.s_plus);
    s.energy = energy_total(P, phi, params);
    return s;
}

void save_summary_json(const std::string& path, const StateSummary& s) {
    nlohmann::json j;
    j["label"] = to_string(s.label);
    j["defects"] = nlohmann::json::array();
    for (const Defect& d : s.defects)
        j["defects"].push_back({{"x", d.x}, {"y", d.y}, {"charge", d.charge}});
    j["perimeter"] = s.stats.perimeter;
    j["area"] = s.stats.area;
    j["aspect_ratio"] = s.stats.aspect_ratio;
    j["centroid"] = {s.stats.centroid[0], s.stats.centroid[1]};
    j["sup_abs_P"] = s.sup_abs_P;
    j["energy"] = {{"e_ldg", s.energy.e_ldg},     {"e_mix", s.energy.e_mix},
                   {"e_anch", s.energy.e_anch},   {"e_void", s.energy.e_void},
                   {"total", s.energy.total},     {"w_mix", s.energy.w_mix},
                   {"w_anch", s.energy.w_anch},   {"w_void", s.energy.w_void}};
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("save_summary_json: cannot open " + tmp);
        out << j.dump(2) << "\n";
        if (!out) throw std::runtime_error("save_summary_json: write failed");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace ldg
