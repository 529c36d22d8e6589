#pragma once

// Shared domain types: physical parameters, the quarter-ball (u, theta) grid,
// axisymmetric fields and their calculus, rotation/entropy profiles and the
// change of variables between (rho, s, p) and the working pair (V, S).

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rotstar {

inline constexpr double kPi = 3.14159265358979323846;

/// Equation of state p = K e^s rho^gamma with K = gamma/(gamma-1), G = 1.
struct PhysicalParams {
    double gamma = 1.5;
    double q = 2.0;     ///< 1/(gamma-1)
    double K = 3.0;     ///< gamma/(gamma-1)
    double G = 1.0;
    double kappa = 0.0; ///< squared-rotation intensity
    double mu = 0.0;    ///< floor-entropy intensity
    bool mass_critical = false; ///< |gamma - 4/3| < 1e-6

    /// Throws DomainError unless 6/5 < gamma < 2 and kappa, mu >= 0.
    static PhysicalParams make(double gamma, double kappa = 0.0, double mu = 0.0);
};

/// Computational ball and its (u, theta) tensor grid.
///
/// Radial nodes u_i = i R/(Nu-1), i = 0..Nu-1 (u_0 is the origin, u_{Nu-1} = R).
/// Polar nodes theta_j = j (pi/2)/(Ntheta-1), j = 0..Ntheta-1 (axis to equator).
struct DomainSpec {
    double R0 = 1.0;
    double R = 1.5;
    double R1 = 0.0; ///< (R0 + 5R)/6, the radius beyond which S == 1
    int Nu = 128;
    int Ntheta = 64;
    int Lmax = 16;

    static DomainSpec make(double R0, double R_over_R0 = 1.5, int Nu = 128, int Ntheta = 64,
                           int Lmax = 16);

    double h() const { return R / (Nu - 1); }
    double dtheta() const { return 0.5 * kPi / (Ntheta - 1); }
    double u(int i) const { return i == Nu - 1 ? R : i * h(); }
    double theta(int j) const { return j == Ntheta - 1 ? 0.5 * kPi : j * dtheta(); }
    /// sin/cos of theta_j with exact values on the axis and the equator.
    double sin_theta(int j) const;
    double cos_theta(int j) const;
    double r(int i, int j) const { return u(i) * sin_theta(j); }
    double z(int i, int j) const { return u(i) * cos_theta(j); }

    double plateau_radius() const { return 0.5 * (R0 + R); }       ///< chi == 1 inside
    double cutoff_radius() const { return (R0 + 2.0 * R) / 3.0; }  ///< chi == 0 outside
    std::size_t size() const { return static_cast<std::size_t>(Nu) * Ntheta; }

    bool operator==(const DomainSpec&) const = default;
};

/// Axisymmetric field, even in z, sampled on the quarter-ball grid.
///
/// Values are stored row-major by radius: index i * Ntheta + j. The origin row
/// holds one physical point, so all its entries are kept equal.
class AxiField {
public:
    AxiField() = default;
    explicit AxiField(const DomainSpec& d, double fill = 0.0);

    /// Samples f(r, z) at every node. The stored values are the even part
    /// (f(r,z) + f(r,-z))/2; the largest odd part seen is kept in odd_content().
    static AxiField from_function(const DomainSpec& d,
                                  const std::function<double(double r, double z)>& f);
    static AxiField radial(const DomainSpec& d, const std::function<double(double u)>& g);

    const DomainSpec& domain() const { return dom_; }
    double& operator()(int i, int j) { return v_[static_cast<std::size_t>(i) * dom_.Ntheta + j]; }
    double operator()(int i, int j) const {
        return v_[static_cast<std::size_t>(i) * dom_.Ntheta + j];
    }
    std::span<double> values() { return v_; }
    std::span<const double> values() const { return v_; }
    std::vector<double>& raw() { return v_; }

    double odd_content() const { return odd_; }
    void set_odd_content(double v) { odd_ = v; }

    double max_abs() const;
    double max_abs_where(const std::function<bool(int i, int j)>& pred) const;
    double min_value() const;
    bool all_finite() const;

    AxiField& operator+=(const AxiField& o);
    AxiField& operator-=(const AxiField& o);
    AxiField& operator*=(double s);
    friend AxiField operator+(AxiField a, const AxiField& b) { return a += b; }
    friend AxiField operator-(AxiField a, const AxiField& b) { return a -= b; }
    friend AxiField operator*(double s, AxiField a) { return a *= s; }

    /// Applies fn to every value.
    AxiField map(const std::function<double(double)>& fn) const;

private:
    DomainSpec dom_{};
    std::vector<double> v_;
    double odd_ = 0.0;
};

/// Bicubic Hermite interpolant on a uniform tensor grid. Node derivatives are
/// fourth-order finite differences, using even reflection at edges flagged as
/// symmetry planes and one-sided stencils elsewhere. The interpolant is C^1
/// and reproduces bicubic polynomials away from reflected edges.
class BicubicHermite {
public:
    struct Axis {
        double x0 = 0.0;
        double dx = 1.0;
        int n = 0;
        bool even_lo = false;
        bool even_hi = false;
    };

    BicubicHermite() = default;
    BicubicHermite(Axis ax, Axis ay, std::span<const double> values);

    double value(double x, double y) const;
    /// {f, df/dx, df/dy}
    std::array<double, 3> eval(double x, double y) const;

    const Axis& axis_x() const { return ax_; }
    const Axis& axis_y() const { return ay_; }

private:
    Axis ax_{}, ay_{};
    std::vector<double> f_, fx_, fy_, fxy_;
};

/// Interpolates an AxiField at arbitrary (r, z), folding r < 0 and z < 0 by
/// symmetry. Gradients are derivatives of the interpolant (so a radial field
/// has an exactly radial gradient).
class FieldInterpolator {
public:
    explicit FieldInterpolator(const AxiField& f);

    /// Throws DomainError outside the closed ball.
    double value(double r, double z) const;
    /// {f, f_r, f_z}; points beyond R are clamped to the boundary shell.
    std::array<double, 3> eval(double r, double z) const;

    const DomainSpec& domain() const { return dom_; }

private:
    DomainSpec dom_;
    BicubicHermite spline_;
};

double sample(const AxiField& f, double r, double z);

/// Cylindrical gradient components by second-order centered differences in
/// (u, theta) and the chain rule. fr == 0 on the axis, fz == 0 on the equator
/// and the gradient vanishes at the origin.
std::pair<AxiField, AxiField> grad_rz(const AxiField& f);

/// Largest second difference (u and theta directions, divided by h^2 and
/// (u dtheta)^2) used as a discrete C^2 proxy.
double second_difference_norm(const AxiField& f);

/// max|f| + max|grad f|, the discrete C^1 norm.
double c1_norm(const AxiField& f);

/// Ghost-node reflection residual: the largest second-order one-sided
/// estimate of the physical normal derivative (1/u) df/dtheta on the axis and
/// the equator. O(dtheta^2) for fields that are even across both planes.
double symmetry_residual(const AxiField& f);

// ---------------------------------------------------------------------------
// Profiles

struct ValueGrad {
    double value = 0.0;
    double dr = 0.0;
    double dz = 0.0;
};

/// One-dimensional radial function with its derivative.
class RadialProfile {
public:
    using Fn = std::function<std::pair<double, double>(double)>;

    RadialProfile();
    explicit RadialProfile(Fn fn);
    static RadialProfile constant(double c);
    /// Cubic Hermite through (x_k, y_k), centered-difference slopes; constant
    /// continuation outside the table.
    static RadialProfile tabulated(std::vector<double> x, std::vector<double> y);

    double operator()(double u) const { return fn_(u).first; }
    double derivative(double u) const { return fn_(u).second; }
    std::pair<double, double> eval(double u) const { return fn_(u); }

private:
    Fn fn_;
};

/// Closed-form axisymmetric function of (r, z) with analytic gradient.
class AxiProfile {
public:
    using Fn = std::function<ValueGrad(double r, double z)>;

    AxiProfile();
    explicit AxiProfile(Fn fn, bool r_only = false);
    static AxiProfile constant(double c);

    ValueGrad eval(double r, double z) const { return fn_(r, z); }
    double operator()(double r, double z) const { return fn_(r, z).value; }
    bool depends_on_r_only() const { return r_only_; }

private:
    Fn fn_;
    bool r_only_ = false;
};

/// C^2 quintic smoothstep window: 1 on [0, a], 0 on [b, inf), monotone between.
RadialProfile smoothstep_window(double a, double b);

/// Rotation and floor-entropy data after the cutoff has been applied.
struct Profiles {
    AxiProfile omega2;
    RadialProfile s0;
    RadialProfile chi;

    /// (omega^2 r)_z, the transport source.
    double transport_source(double r, double z) const;
    /// div(omega^2 r e_r) = (1/r) d/dr(omega^2 r^2) = 2 omega^2 + r d(omega^2)/dr.
    double centrifugal_divergence(double r, double z) const;
};

Profiles apply_cutoff(const AxiProfile& raw_omega2, const RadialProfile& raw_s0,
                      const DomainSpec& d);

// ---------------------------------------------------------------------------
// Change of variables

struct PhysicalFields {
    AxiField rho;
    AxiField s;
    AxiField pressure;
};

/// rho = V_+^q / S, s = gamma ln S, p = K e^s rho^gamma. Throws DomainError
/// naming the first node with S <= 0.
PhysicalFields to_physical(const AxiField& V, const AxiField& S, const PhysicalParams& p);

/// Inverse map on the fluid domain: S = e^{s/gamma}, V = (rho S)^{1/q}.
/// Nodes with rho == 0 get V = 0.
std::pair<AxiField, AxiField> from_physical(const AxiField& rho, const AxiField& s,
                                            const PhysicalParams& p);

/// max(V, 0)^q / S at every node.
AxiField density(const AxiField& V, const AxiField& S, double q);

} // namespace rotstar
