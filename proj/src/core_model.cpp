#include "rotstar/core_model.hpp"
#include "rotstar/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace rotstar {

namespace {
std::atomic<bool> g_warnings{true};
}

void warn(const std::string& message)
{
    if (g_warnings.load())
        std::cerr << "rotstar: warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

PhysicalParams PhysicalParams::make(double gamma, double kappa, double mu)
{
    if (!(gamma > 1.2 && gamma < 2.0)) {
        std::ostringstream os;
        os << "gamma = " << gamma << " outside (6/5, 2)";
        throw DomainError(os.str());
    }
    if (!(kappa >= 0.0) || !(mu >= 0.0))
        throw DomainError("kappa and mu must be non-negative");
    PhysicalParams p;
    p.gamma = gamma;
    p.q = 1.0 / (gamma - 1.0);
    p.K = gamma / (gamma - 1.0);
    p.kappa = kappa;
    p.mu = mu;
    p.mass_critical = std::abs(gamma - 4.0 / 3.0) < 1e-6;
    if (p.mass_critical)
        warn("gamma is within 1e-6 of the mass-critical value 4/3");
    return p;
}

DomainSpec DomainSpec::make(double R0, double R_over_R0, int Nu, int Ntheta, int Lmax)
{
    if (!(R0 > 0.0))
        throw DomainError("R0 must be positive");
    if (!(R_over_R0 > 1.0))
        throw DomainError("R must exceed R0");
    if (Nu < 8 || Ntheta < 5)
        throw DomainError("grid needs Nu >= 8 and Ntheta >= 5");
    if (Lmax < 0 || Lmax % 2 != 0)
        throw DomainError("Lmax must be a non-negative even integer");
    DomainSpec d;
    d.R0 = R0;
    d.R = R_over_R0 * R0;
    d.R1 = (d.R0 + 5.0 * d.R) / 6.0;
    d.Nu = Nu;
    d.Ntheta = Ntheta;
    d.Lmax = Lmax;
    return d;
}

double DomainSpec::sin_theta(int j) const
{
    if (j == 0)
        return 0.0;
    if (j == Ntheta - 1)
        return 1.0;
    return std::sin(theta(j));
}

double DomainSpec::cos_theta(int j) const
{
    if (j == 0)
        return 1.0;
    if (j == Ntheta - 1)
        return 0.0;
    return std::cos(theta(j));
}

// ---------------------------------------------------------------------------
// AxiField

AxiField::AxiField(const DomainSpec& d, double fill) : dom_(d), v_(d.size(), fill) {}

AxiField AxiField::from_function(const DomainSpec& d,
                                 const std::function<double(double, double)>& f)
{
    AxiField out(d);
    double odd = 0.0;
    const double origin = f(0.0, 0.0);
    for (int j = 0; j < d.Ntheta; ++j)
        out(0, j) = origin;
    for (int i = 1; i < d.Nu; ++i) {
        for (int j = 0; j < d.Ntheta; ++j) {
            const double r = d.r(i, j);
            const double z = d.z(i, j);
            const double up = f(r, z);
            if (z == 0.0) {
                out(i, j) = up;
                continue;
            }
            const double down = f(r, -z);
            out(i, j) = 0.5 * (up + down);
            odd = std::max(odd, 0.5 * std::abs(up - down));
        }
    }
    out.odd_ = odd;
    return out;
}

AxiField AxiField::radial(const DomainSpec& d, const std::function<double(double)>& g)
{
    AxiField out(d);
    for (int i = 0; i < d.Nu; ++i) {
        const double v = g(d.u(i));
        for (int j = 0; j < d.Ntheta; ++j)
            out(i, j) = v;
    }
    return out;
}

double AxiField::max_abs() const
{
    double m = 0.0;
    for (double x : v_)
        m = std::max(m, std::abs(x));
    return m;
}

double AxiField::max_abs_where(const std::function<bool(int, int)>& pred) const
{
    double m = 0.0;
    for (int i = 0; i < dom_.Nu; ++i)
        for (int j = 0; j < dom_.Ntheta; ++j)
            if (pred(i, j))
                m = std::max(m, std::abs((*this)(i, j)));
    return m;
}

double AxiField::min_value() const
{
    return v_.empty() ? 0.0 : *std::min_element(v_.begin(), v_.end());
}

bool AxiField::all_finite() const
{
    return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

AxiField& AxiField::operator+=(const AxiField& o)
{
    if (!(dom_ == o.dom_))
        throw DomainError("AxiField grids differ");
    for (std::size_t k = 0; k < v_.size(); ++k)
        v_[k] += o.v_[k];
    odd_ += o.odd_;
    return *this;
}

AxiField& AxiField::operator-=(const AxiField& o)
{
    if (!(dom_ == o.dom_))
        throw DomainError("AxiField grids differ");
    for (std::size_t k = 0; k < v_.size(); ++k)
        v_[k] -= o.v_[k];
    odd_ += o.odd_;
    return *this;
}

AxiField& AxiField::operator*=(double s)
{
    for (double& x : v_)
        x *= s;
    odd_ *= std::abs(s);
    return *this;
}

AxiField AxiField::map(const std::function<double(double)>& fn) const
{
    AxiField out = *this;
    for (double& x : out.v_)
        x = fn(x);
    return out;
}

// ---------------------------------------------------------------------------
// BicubicHermite

namespace {

int reflect(int m, int n, bool even_lo, bool even_hi)
{
    if (m < 0 && even_lo)
        m = -m;
    if (m > n - 1 && even_hi)
        m = 2 * (n - 1) - m;
    return m;
}

// Fourth-order derivative estimate at index k of a sequence of length n.
template <class Get>
double node_derivative(int k, const BicubicHermite::Axis& a, Get get)
{
    const int n = a.n;
    const bool lo_ok = k - 2 >= 0 || a.even_lo;
    const bool hi_ok = k + 2 <= n - 1 || a.even_hi;
    auto f = [&](int m) { return get(reflect(m, n, a.even_lo, a.even_hi)); };
    const double s = 1.0 / (12.0 * a.dx);
    if (lo_ok && hi_ok)
        return s * (f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2));
    if (!lo_ok) {
        if (k == 0)
            return s * (-25.0 * get(0) + 48.0 * get(1) - 36.0 * get(2) + 16.0 * get(3) -
                        3.0 * get(4));
        return s * (-3.0 * get(0) - 10.0 * get(1) + 18.0 * get(2) - 6.0 * get(3) + get(4));
    }
    if (k == n - 1)
        return s * (25.0 * get(n - 1) - 48.0 * get(n - 2) + 36.0 * get(n - 3) -
                    16.0 * get(n - 4) + 3.0 * get(n - 5));
    return s * (3.0 * get(n - 1) + 10.0 * get(n - 2) - 18.0 * get(n - 3) + 6.0 * get(n - 4) -
                get(n - 5));
}

struct HermiteBasis {
    double h0[2];  // value basis at corners 0, 1
    double h1[2];  // slope basis
    double d0[2];  // derivatives wrt t
    double d1[2];
};

HermiteBasis hermite(double t)
{
    const double t2 = t * t, t3 = t2 * t;
    HermiteBasis b;
    b.h0[0] = 2 * t3 - 3 * t2 + 1;
    b.h0[1] = -2 * t3 + 3 * t2;
    b.h1[0] = t3 - 2 * t2 + t;
    b.h1[1] = t3 - t2;
    b.d0[0] = 6 * t2 - 6 * t;
    b.d0[1] = -6 * t2 + 6 * t;
    b.d1[0] = 3 * t2 - 4 * t + 1;
    b.d1[1] = 3 * t2 - 2 * t;
    return b;
}

void locate(const BicubicHermite::Axis& a, double x, int& cell, double& t)
{
    const double s = (x - a.x0) / a.dx;
    cell = static_cast<int>(std::floor(s));
    cell = std::clamp(cell, 0, a.n - 2);
    t = s - cell;
}

} // namespace

BicubicHermite::BicubicHermite(Axis ax, Axis ay, std::span<const double> values)
    : ax_(ax), ay_(ay), f_(values.begin(), values.end())
{
    if (ax.n < 5 || ay.n < 5 || values.size() != static_cast<std::size_t>(ax.n) * ay.n)
        throw DomainError("BicubicHermite needs at least 5x5 nodes matching the value array");
    const int nx = ax.n, ny = ay.n;
    auto at = [&](const std::vector<double>& v, int i, int j) {
        return v[static_cast<std::size_t>(i) * ny + j];
    };
    fx_.resize(f_.size());
    fy_.resize(f_.size());
    fxy_.resize(f_.size());
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * ny + j;
            fx_[k] = node_derivative(i, ax_, [&](int m) { return at(f_, m, j); });
            fy_[k] = node_derivative(j, ay_, [&](int m) { return at(f_, i, m); });
        }
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            fxy_[static_cast<std::size_t>(i) * ny + j] =
                node_derivative(i, ax_, [&](int m) { return at(fy_, m, j); });
}

std::array<double, 3> BicubicHermite::eval(double x, double y) const
{
    int ci, cj;
    double t, s;
    locate(ax_, x, ci, t);
    locate(ay_, y, cj, s);
    const HermiteBasis bt = hermite(t), bs = hermite(s);
    const double hx = ax_.dx, hy = ay_.dx;
    const int ny = ay_.n;
    double v = 0, vx = 0, vy = 0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const std::size_t k = static_cast<std::size_t>(ci + a) * ny + (cj + b);
            const double F = f_[k], Fx = fx_[k] * hx, Fy = fy_[k] * hy, Fxy = fxy_[k] * hx * hy;
            v += F * bt.h0[a] * bs.h0[b] + Fx * bt.h1[a] * bs.h0[b] + Fy * bt.h0[a] * bs.h1[b] +
                 Fxy * bt.h1[a] * bs.h1[b];
            vx += F * bt.d0[a] * bs.h0[b] + Fx * bt.d1[a] * bs.h0[b] + Fy * bt.d0[a] * bs.h1[b] +
                  Fxy * bt.d1[a] * bs.h1[b];
            vy += F * bt.h0[a] * bs.d0[b] + Fx * bt.h1[a] * bs.d0[b] + Fy * bt.h0[a] * bs.d1[b] +
                  Fxy * bt.h1[a] * bs.d1[b];
        }
    return {v, vx / hx, vy / hy};
}

double BicubicHermite::value(double x, double y) const { return eval(x, y)[0]; }

// ---------------------------------------------------------------------------
// FieldInterpolator

FieldInterpolator::FieldInterpolator(const AxiField& f) : dom_(f.domain())
{
    BicubicHermite::Axis au{0.0, dom_.h(), dom_.Nu, true, false};
    BicubicHermite::Axis at{0.0, dom_.dtheta(), dom_.Ntheta, true, true};
    spline_ = BicubicHermite(au, at, f.values());
}

double FieldInterpolator::value(double r, double z) const
{
    const double u = std::hypot(r, z);
    if (u > dom_.R * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "point (" << r << ", " << z << ") lies outside the ball of radius " << dom_.R;
        throw DomainError(os.str());
    }
    const double th = std::atan2(std::abs(r), std::abs(z));
    return spline_.value(u, th);
}

std::array<double, 3> FieldInterpolator::eval(double r, double z) const
{
    const double ar = std::abs(r), az = std::abs(z);
    const double u = std::hypot(ar, az);
    if (u < 1e-300)
        return {spline_.value(0.0, 0.0), 0.0, 0.0};
    const double th = std::atan2(ar, az);
    const auto [v, vu, vth] = spline_.eval(std::min(u, dom_.R), th);
    const double st = ar / u, ct = az / u;
    double fr = vu * st + vth * ct / u;
    double fz = vu * ct - vth * st / u;
    if (r < 0)
        fr = -fr;
    if (z < 0)
        fz = -fz;
    return {v, fr, fz};
}

double sample(const AxiField& f, double r, double z) { return FieldInterpolator(f).value(r, z); }

// ---------------------------------------------------------------------------
// Field calculus

std::pair<AxiField, AxiField> grad_rz(const AxiField& f)
{
    const DomainSpec& d = f.domain();
    AxiField fr(d), fz(d);
    const double h = d.h(), dt = d.dtheta();
    const int Nu = d.Nu, Nt = d.Ntheta;
    for (int i = 1; i < Nu; ++i) {
        const double u = d.u(i);
        for (int j = 0; j < Nt; ++j) {
            double fu;
            if (i < Nu - 1)
                fu = (f(i + 1, j) - f(i - 1, j)) / (2.0 * h);
            else
                fu = (3.0 * f(i, j) - 4.0 * f(i - 1, j) + f(i - 2, j)) / (2.0 * h);
            double fth = 0.0;
            if (j > 0 && j < Nt - 1)
                fth = (f(i, j + 1) - f(i, j - 1)) / (2.0 * dt);
            const double st = d.sin_theta(j), ct = d.cos_theta(j);
            fr(i, j) = j == 0 ? 0.0 : fu * st + fth * ct / u;
            fz(i, j) = j == Nt - 1 ? 0.0 : fu * ct - fth * st / u;
        }
    }
    return {std::move(fr), std::move(fz)};
}

double second_difference_norm(const AxiField& f)
{
    const DomainSpec& d = f.domain();
    const double h = d.h(), dt = d.dtheta();
    const int Nu = d.Nu, Nt = d.Ntheta;
    double m = 0.0;
    for (int i = 1; i < Nu - 1; ++i)
        for (int j = 0; j < Nt; ++j) {
            m = std::max(m, std::abs(f(i + 1, j) - 2.0 * f(i, j) + f(i - 1, j)) / (h * h));
            const int jm = j == 0 ? 1 : j - 1;
            const int jp = j == Nt - 1 ? Nt - 2 : j + 1;
            const double ud = d.u(i) * dt;
            m = std::max(m, std::abs(f(i, jp) - 2.0 * f(i, j) + f(i, jm)) / (ud * ud));
        }
    return m;
}

double c1_norm(const AxiField& f)
{
    const auto [fr, fz] = grad_rz(f);
    double g = 0.0;
    for (std::size_t k = 0; k < fr.values().size(); ++k)
        g = std::max(g, std::hypot(fr.values()[k], fz.values()[k]));
    return f.max_abs() + g;
}

double symmetry_residual(const AxiField& f)
{
    const DomainSpec& d = f.domain();
    const double dt = d.dtheta();
    const int Nt = d.Ntheta;
    double m = 0.0;
    for (int i = 1; i < d.Nu; ++i) {
        const double u = d.u(i);
        const double axis = (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) / (2.0 * dt * u);
        const double eq =
            (3.0 * f(i, Nt - 1) - 4.0 * f(i, Nt - 2) + f(i, Nt - 3)) / (2.0 * dt * u);
        m = std::max({m, std::abs(axis), std::abs(eq)});
    }
    return m;
}

// ---------------------------------------------------------------------------
// Profiles

RadialProfile::RadialProfile() : fn_([](double) { return std::pair{0.0, 0.0}; }) {}

RadialProfile::RadialProfile(Fn fn) : fn_(std::move(fn)) {}

RadialProfile RadialProfile::constant(double c)
{
    return RadialProfile([c](double) { return std::pair{c, 0.0}; });
}

RadialProfile RadialProfile::tabulated(std::vector<double> x, std::vector<double> y)
{
    if (x.size() < 2 || x.size() != y.size())
        throw DomainError("tabulated profile needs at least two (x, y) pairs");
    for (std::size_t k = 1; k < x.size(); ++k)
        if (!(x[k] > x[k - 1]))
            throw DomainError("tabulated profile abscissae must increase strictly");
    const std::size_t n = x.size();
    std::vector<double> m(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0)
            m[k] = (y[1] - y[0]) / (x[1] - x[0]);
        else if (k == n - 1)
            m[k] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
        else
            m[k] = (y[k + 1] - y[k - 1]) / (x[k + 1] - x[k - 1]);
    }
    return RadialProfile([x = std::move(x), y = std::move(y), m = std::move(m)](double u) {
        if (u <= x.front())
            return std::pair{y.front(), 0.0};
        if (u >= x.back())
            return std::pair{y.back(), 0.0};
        const auto it = std::upper_bound(x.begin(), x.end(), u);
        const std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
        const double hk = x[k + 1] - x[k];
        const HermiteBasis b = hermite((u - x[k]) / hk);
        const double v = y[k] * b.h0[0] + y[k + 1] * b.h0[1] + hk * (m[k] * b.h1[0] + m[k + 1] * b.h1[1]);
        const double dv = (y[k] * b.d0[0] + y[k + 1] * b.d0[1]) / hk + m[k] * b.d1[0] + m[k + 1] * b.d1[1];
        return std::pair{v, dv};
    });
}

AxiProfile::AxiProfile() : fn_([](double, double) { return ValueGrad{}; }), r_only_(true) {}

AxiProfile::AxiProfile(Fn fn, bool r_only) : fn_(std::move(fn)), r_only_(r_only) {}

AxiProfile AxiProfile::constant(double c)
{
    return AxiProfile([c](double, double) { return ValueGrad{c, 0.0, 0.0}; }, true);
}

RadialProfile smoothstep_window(double a, double b)
{
    if (!(b > a))
        throw DomainError("smoothstep window needs a < b");
    return RadialProfile([a, b](double u) {
        if (u <= a)
            return std::pair{1.0, 0.0};
        if (u >= b)
            return std::pair{0.0, 0.0};
        const double w = b - a;
        const double t = (u - a) / w;
        const double p = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        const double dp = 30.0 * t * t * (t - 1.0) * (t - 1.0);
        return std::pair{1.0 - p, -dp / w};
    });
}

double Profiles::transport_source(double r, double z) const
{
    return r * omega2.eval(r, z).dz;
}

double Profiles::centrifugal_divergence(double r, double z) const
{
    const ValueGrad w = omega2.eval(r, z);
    return 2.0 * w.value + r * w.dr;
}

Profiles apply_cutoff(const AxiProfile& raw_omega2, const RadialProfile& raw_s0,
                      const DomainSpec& d)
{
    Profiles p;
    p.chi = smoothstep_window(d.plateau_radius(), d.cutoff_radius());
    const RadialProfile chi = p.chi;
    p.omega2 = AxiProfile(
        [raw_omega2, chi](double r, double z) {
            const ValueGrad w = raw_omega2.eval(r, z);
            const double u = std::hypot(r, z);
            const auto [c, dc] = chi.eval(u);
            ValueGrad out;
            out.value = w.value * c;
            out.dr = w.dr * c;
            out.dz = w.dz * c;
            if (dc != 0.0 && u > 0.0) {
                out.dr += w.value * dc * r / u;
                out.dz += w.value * dc * z / u;
            }
            return out;
        },
        raw_omega2.depends_on_r_only());
    p.s0 = RadialProfile([raw_s0, chi](double r) {
        const auto [s, ds] = raw_s0.eval(r);
        const auto [c, dc] = chi.eval(r);
        return std::pair{s * c, ds * c + s * dc};
    });
    return p;
}

// ---------------------------------------------------------------------------
// Change of variables

AxiField density(const AxiField& V, const AxiField& S, double q)
{
    AxiField rho(V.domain());
    auto out = rho.values();
    const auto v = V.values(), s = S.values();
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = v[k] > 0.0 ? std::pow(v[k], q) / s[k] : 0.0;
    return rho;
}

PhysicalFields to_physical(const AxiField& V, const AxiField& S, const PhysicalParams& p)
{
    const DomainSpec& d = V.domain();
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j)
            if (!(S(i, j) > 0.0)) {
                std::ostringstream os;
                os << "S = " << S(i, j) << " is not positive at node (" << i << ", " << j << ")";
                throw DomainError(os.str());
            }
    PhysicalFields out{density(V, S, p.q), AxiField(d), AxiField(d)};
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double s = p.gamma * std::log(S.values()[k]);
        out.s.values()[k] = s;
        const double rho = out.rho.values()[k];
        out.pressure.values()[k] = rho > 0.0 ? p.K * std::exp(s) * std::pow(rho, p.gamma) : 0.0;
    }
    return out;
}

std::pair<AxiField, AxiField> from_physical(const AxiField& rho, const AxiField& s,
                                            const PhysicalParams& p)
{
    const DomainSpec& d = rho.domain();
    AxiField V(d), S(d);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double Sk = std::exp(s.values()[k] / p.gamma);
        S.values()[k] = Sk;
        const double r = rho.values()[k];
        V.values()[k] = r > 0.0 ? std::pow(r * Sk, 1.0 / p.q) : 0.0;
    }
    return {std::move(V), std::move(S)};
}

} // namespace rotstar
