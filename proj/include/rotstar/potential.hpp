#pragma once

// Newtonian potential of axisymmetric, z-even densities through an even
// Legendre expansion in the polar angle and per-mode radial kernels.

#include "rotstar/core_model.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace rotstar {

/// Coefficients f_l(u_i) for even l = 0, 2, ..., Lmax.
class LegendreModes {
public:
    LegendreModes() = default;
    LegendreModes(int Lmax, int Nu);

    int Lmax() const { return Lmax_; }
    int Nu() const { return Nu_; }
    int count() const { return Lmax_ / 2 + 1; }

    /// Coefficient of P_l at radial node i; l must be even.
    double& operator()(int l, int i) { return c_(l / 2, i); }
    double operator()(int l, int i) const { return c_(l / 2, i); }

    /// Rows are modes (index l/2), columns radial nodes.
    Eigen::MatrixXd& matrix() { return c_; }
    const Eigen::MatrixXd& matrix() const { return c_; }

private:
    int Lmax_ = 0;
    int Nu_ = 0;
    Eigen::MatrixXd c_;
};

/// Angular analysis and synthesis matrices for a (Ntheta, Lmax) pair.
///
/// Analysis expands the nodal values in cos(2k theta), the interpolating
/// cosine series through the uniform polar nodes, and projects that series
/// onto P_l exactly. It is therefore exact for any field whose angular
/// dependence is a polynomial in cos^2(theta) of degree < Ntheta.
struct AngularTransform {
    int Ntheta = 0;
    int Lmax = 0;
    Eigen::MatrixXd analysis;  ///< (Lmax/2+1) x Ntheta
    Eigen::MatrixXd synthesis; ///< Ntheta x (Lmax/2+1), entries P_l(cos theta_j)
};

/// Cached per (Ntheta, Lmax); safe to call concurrently.
std::shared_ptr<const AngularTransform> angular_transform(int Ntheta, int Lmax);

/// P_l(x) by the three-term recurrence.
double legendre_p(int l, double x);

/// Throws DomainError for odd or negative Lmax.
LegendreModes legendre_analyze(const AxiField& f, int Lmax);
AxiField legendre_synthesize(const LegendreModes& modes, const DomainSpec& d);

/// Fraction of the coefficient energy carried by the highest mode.
double mode_tail_fraction(const LegendreModes& modes);

/// Composite quadrature weights for int_{x_a}^{x_b} g dx on a uniform grid of
/// n = b - a intervals: Simpson, with a 3/8 panel closing odd counts and the
/// trapezoid rule for a single interval. Returns n + 1 weights.
std::vector<double> uniform_weights(int n, double h);

/// Weights w_k with int_0^R u^p g(u) du ~ sum_k w_k g(u_k): g is replaced by
/// its piecewise cubic interpolant and the power is integrated exactly.
std::vector<double> radial_moment_weights(const DomainSpec& d, int p);

/// Nu x Nu matrix K with U_l(u_i) = sum_k K_ik f_l(u_k), where
/// U_l(u) = 4 pi/(2l+1) int_0^R f_l(u') u'^2 min(u,u')^l / max(u,u')^(l+1) du'.
/// Same product rule as radial_moment_weights on each side of the kink
/// u' = u_i, so the steep weights of high modes are integrated exactly.
/// Cached per (Nu, R, l).
Eigen::MatrixXd mode_kernel_matrix(const DomainSpec& d, int l);

struct PotentialOptions {
    int Lmax = -1;            ///< -1: take the domain's Lmax
    bool clamp_to_R1 = true;  ///< zero any density beyond R1 (with a warning)
};

/// U = 1/|x| * f on the grid.
AxiField newtonian_potential(const AxiField& f, const PotentialOptions& opts = {});

/// U on u = R from the exterior multipole sum, one value per polar node.
std::vector<double> potential_boundary_trace(const AxiField& f, const PotentialOptions& opts = {});

/// Multipole moments q_l = int_0^R f_l(u) u^(l+2) du.
std::vector<double> multipole_moments(const LegendreModes& modes, const DomainSpec& d);

/// U at a point with |x| >= R from the multipole moments.
double exterior_potential(const std::vector<double>& moments, double r, double z);

/// int_{B_R} f dx = 4 pi int_0^R f_0(u) u^2 du.
double total_integral(const AxiField& f);

} // namespace rotstar
