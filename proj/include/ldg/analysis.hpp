#ifndef LDG_ANALYSIS_HPP
#define LDG_ANALYSIS_HPP

#include <string>
#include <vector>

#include "ldg/energy.hpp"
#include "ldg/fields.hpp"
#include "ldg/tensor.hpp"

// Post-processing of converged states: winding-number defect detection,
// phi = 0.5 interface extraction by marching squares, and classification of
// the droplet morphology (radial / polar / tactoid / isotropic).

namespace ldg {

struct Defect {
    double x, y;
    double charge;        // multiple of 1/2
    int plaquettes = 1;   // merged plaquette count
};

// Winding of the director angle around each grid plaquette whose corners all
// have phi > phi_min and order above a floor (default 0.05 s_plus); angle
// differences are wrapped modulo pi because the director is head-to-tail
// symmetric. Adjacent charged plaquettes merge into one defect at their
// charge-weighted centroid. The overload with `order_floor` takes an absolute
// eigenvalue threshold; weak-order states need it scaled to their own
// amplitude, since winding lives on the plaquettes nearest the core.
std::vector<Defect> detect_defects(const PTensorField& P, const ScalarField& phi,
                                   double phi_min, double s_plus);
std::vector<Defect> detect_defects_floor(const PTensorField& P, const ScalarField& phi,
                                         double phi_min, double order_floor);

struct InterfaceStats {
    bool empty = true;
    std::vector<Vec2> contour;  // largest closed phi = 0.5 component
    double perimeter = 0;
    double area = 0;
    double aspect_ratio = 1;    // major/minor axis of the second-moment ellipse
    Vec2 centroid{0.5, 0.5};
};

InterfaceStats extract_interface(const ScalarField& phi);

enum class StateLabel { radial, polar, tactoid, isotropic, other };
std::string to_string(StateLabel label);

struct ClassifyThresholds {
    double radial_aspect = 1.15;
    double tactoid_aspect = 1.6;
    // a pair of +1/2 defects with any sub-tactoid elongation reads as polar;
    // converged polar droplets can stay within a percent of circular
    double polar_aspect_min = 1.0;
    double radial_center_dist = 0.1;
    // isotropic cutoff on the max eigenvalue, times s_plus. Small-droplet
    // minimizers order weakly (sup order a few percent of s_plus) while still
    // carrying a clean radial director pattern, so the cutoff sits well below
    // the bulk-preferred order.
    double order_floor = 0.01;
};

StateLabel classify_state(const std::vector<Defect>& defects, const InterfaceStats& stats,
                          double max_order, double s_plus,
                          const ClassifyThresholds& thresholds = {});

// JSON summary written next to the field artifacts.
struct StateSummary {
    StateLabel label;
    std::vector<Defect> defects;
    InterfaceStats stats;
    double sup_abs_P;  // max Frobenius norm over nodes
    EnergyBreakdown energy;
};
StateSummary summarize_state(const PTensorField& P, const ScalarField& phi,
                             const ModelParams& params);
void save_summary_json(const std::string& path, const StateSummary& summary);

}  // namespace ldg

#endif
