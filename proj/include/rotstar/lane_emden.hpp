#pragma once

// Non-rotating base state: radial integration of (u^2 V')' = -4 pi u^2 V_+^q
// from the center outward, with the exterior continued analytically as
// V(u) = M/u - M/R0.

#include "rotstar/core_model.hpp"

#include <utility>
#include <vector>

namespace rotstar {

/// Dense representation of V0 on [0, R0]: the integrator's accepted nodes
/// with V, V', V'' for quintic Hermite interpolation.
struct RadialProfileTable {
    std::vector<double> u;
    std::vector<double> v;
    std::vector<double> dv;
    std::vector<double> d2v;
};

struct LaneEmdenSolution {
    double q = 2.0;
    double central_value = 1.0;
    double R0 = 0.0;     ///< first zero of V0
    double alpha0 = 0.0; ///< V0(0) minus the potential of (V0)_+^q at the origin
    double M = 0.0;      ///< total mass of (V0)_+^q
    RadialProfileTable profile;

    /// Natural length scale 1/sqrt(4 pi c^{q-1}).
    double length_scale() const;
};

struct LaneEmdenOptions {
    double rel_tol = 1e-13;
    double abs_tol = 1e-15;
    double root_tol = 1e-13;
};

/// Accepts q in [1, 5): q = 1 is the closed-form check case.
LaneEmdenSolution solve_lane_emden(double q, double central_value = 1.0,
                                   const LaneEmdenOptions& opts = {});

/// (V0(u), V0'(u)); exact exterior formula beyond R0.
std::pair<double, double> eval_V0(const LaneEmdenSolution& sol, double u);

/// V0 sampled on the grid as a radial field.
AxiField sample_V0(const LaneEmdenSolution& sol, const DomainSpec& d);

/// Grid for a base state: R0 from the solution, R = R_over_R0 * R0.
DomainSpec domain_for(const LaneEmdenSolution& sol, int Nu = 128, int Ntheta = 64, int Lmax = 16,
                      double R_over_R0 = 1.5);

/// 4 pi int_0^{R0} u^2 g(u, V0(u), V0'(u)) du by tanh-sinh quadrature, which
/// tolerates the endpoint singularity of fractional powers of V0 at R0.
double radial_integral(const LaneEmdenSolution& sol,
                       const std::function<double(double u, double v, double dv)>& g);

} // namespace rotstar
