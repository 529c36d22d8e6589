#include "rotstar/lane_emden.hpp"
#include "rotstar/errors.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace rotstar {

namespace {

using State = std::array<double, 4>; // V, V', mass integral, center-potential integral

struct QuinticBasis {
    double h[6];
    double d[6];
};

QuinticBasis quintic(double t)
{
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    QuinticBasis b;
    b.h[0] = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    b.h[1] = t - 6 * t3 + 8 * t4 - 3 * t5;
    b.h[2] = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    b.h[3] = 10 * t3 - 15 * t4 + 6 * t5;
    b.h[4] = -4 * t3 + 7 * t4 - 3 * t5;
    b.h[5] = 0.5 * (t3 - 2 * t4 + t5);
    b.d[0] = -30 * t2 + 60 * t3 - 30 * t4;
    b.d[1] = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    b.d[2] = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    b.d[3] = 30 * t2 - 60 * t3 + 30 * t4;
    b.d[4] = -12 * t2 + 28 * t3 - 15 * t4;
    b.d[5] = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    return b;
}

} // namespace

double LaneEmdenSolution::length_scale() const
{
    return 1.0 / std::sqrt(4.0 * kPi * std::pow(central_value, q - 1.0));
}

LaneEmdenSolution solve_lane_emden(double q, double central_value, const LaneEmdenOptions& opts)
{
    namespace odeint = boost::numeric::odeint;
    if (!(q >= 1.0 && q < 5.0)) {
        std::ostringstream os;
        os << "polytropic index q = " << q << " outside [1, 5)";
        throw DomainError(os.str());
    }
    if (!(central_value > 0.0))
        throw DomainError("central value must be positive");

    LaneEmdenSolution sol;
    sol.q = q;
    sol.central_value = central_value;
    const double c = central_value;
    const double cq = std::pow(c, q);
    const double scale = sol.length_scale();

    auto rhs = [q](const State& y, State& dy, double u) {
        const double vp = y[0] > 0.0 ? std::pow(y[0], q) : 0.0;
        dy[0] = y[1];
        dy[1] = -4.0 * kPi * vp - 2.0 * y[1] / u;
        dy[2] = 4.0 * kPi * u * u * vp;
        dy[3] = 4.0 * kPi * u * vp;
    };
    auto second = [q](double u, const State& y) {
        const double vp = y[0] > 0.0 ? std::pow(y[0], q) : 0.0;
        return -4.0 * kPi * vp - 2.0 * y[1] / u;
    };

    RadialProfileTable& tab = sol.profile;
    tab.u.push_back(0.0);
    tab.v.push_back(c);
    tab.dv.push_back(0.0);
    tab.d2v.push_back(-4.0 * kPi * cq / 3.0);

    // Two-term series removes the 2/u singularity at the center.
    const double us = 1e-6 * scale;
    State y{c - (2.0 * kPi / 3.0) * cq * us * us, -(4.0 * kPi / 3.0) * cq * us,
            4.0 * kPi * cq * us * us * us / 3.0, 2.0 * kPi * cq * us * us};
    tab.u.push_back(us);
    tab.v.push_back(y[0]);
    tab.dv.push_back(y[1]);
    tab.d2v.push_back(second(us, y));

    auto stepper = odeint::make_dense_output(opts.abs_tol, opts.rel_tol,
                                             odeint::runge_kutta_dopri5<State>());
    stepper.initialize(y, us, 1e-4 * scale);
    const double u_max = 1000.0 * scale;
    State at{};
    while (true) {
        const auto [u0, u1] = stepper.do_step(rhs);
        const State& cur = stepper.current_state();
        if (cur[0] <= 0.0) {
            // Bisection on the dense output for the first zero of V.
            double a = u0, b = u1;
            while (b - a > opts.root_tol * std::max(1.0, b)) {
                const double mid = 0.5 * (a + b);
                stepper.calc_state(mid, at);
                (at[0] > 0.0 ? a : b) = mid;
            }
            // Secant refinement inside the final bracket.
            State ya{}, yb{};
            stepper.calc_state(a, ya);
            stepper.calc_state(b, yb);
            double root = ya[0] == yb[0] ? a : a - ya[0] * (b - a) / (yb[0] - ya[0]);
            root = std::clamp(root, a, b);
            stepper.calc_state(root, at);
            sol.R0 = root;
            break;
        }
        tab.u.push_back(u1);
        tab.v.push_back(cur[0]);
        tab.dv.push_back(cur[1]);
        tab.d2v.push_back(second(u1, cur));
        if (u1 > u_max) {
            std::ostringstream os;
            os << "no zero of V0 found before u = " << u_max << " for q = " << q;
            throw NonConvergenceError(os.str());
        }
    }
    // The last accepted node may sit within the root tolerance of R0.
    if (sol.R0 - tab.u.back() < 1e-12 * sol.R0) {
        tab.u.pop_back();
        tab.v.pop_back();
        tab.dv.pop_back();
        tab.d2v.pop_back();
    }
    tab.u.push_back(sol.R0);
    tab.v.push_back(0.0);
    tab.dv.push_back(at[1]);
    tab.d2v.push_back(-2.0 * at[1] / sol.R0);

    sol.M = at[2];
    sol.alpha0 = c - at[3];
    return sol;
}

std::pair<double, double> eval_V0(const LaneEmdenSolution& sol, double u)
{
    u = std::abs(u);
    if (u >= sol.R0)
        return {sol.M / u - sol.M / sol.R0, -sol.M / (u * u)};
    const auto& t = sol.profile;
    const auto it = std::upper_bound(t.u.begin(), t.u.end(), u);
    std::size_t k = static_cast<std::size_t>(it - t.u.begin());
    k = std::clamp<std::size_t>(k, 1, t.u.size() - 1) - 1;
    const double h = t.u[k + 1] - t.u[k];
    const QuinticBasis b = quintic((u - t.u[k]) / h);
    const double v = t.v[k] * b.h[0] + h * t.dv[k] * b.h[1] + h * h * t.d2v[k] * b.h[2] +
                     t.v[k + 1] * b.h[3] + h * t.dv[k + 1] * b.h[4] +
                     h * h * t.d2v[k + 1] * b.h[5];
    const double dv = (t.v[k] * b.d[0] + h * t.dv[k] * b.d[1] + h * h * t.d2v[k] * b.d[2] +
                       t.v[k + 1] * b.d[3] + h * t.dv[k + 1] * b.d[4] +
                       h * h * t.d2v[k + 1] * b.d[5]) /
                      h;
    return {v, dv};
}

AxiField sample_V0(const LaneEmdenSolution& sol, const DomainSpec& d)
{
    return AxiField::radial(d, [&](double u) { return eval_V0(sol, u).first; });
}

DomainSpec domain_for(const LaneEmdenSolution& sol, int Nu, int Ntheta, int Lmax,
                      double R_over_R0)
{
    return DomainSpec::make(sol.R0, R_over_R0, Nu, Ntheta, Lmax);
}

double radial_integral(const LaneEmdenSolution& sol,
                       const std::function<double(double, double, double)>& g)
{
    boost::math::quadrature::tanh_sinh<double> integrator;
    auto f = [&](double u) {
        const auto [v, dv] = eval_V0(sol, u);
        return 4.0 * kPi * u * u * g(u, std::max(v, 0.0), dv);
    };
    return integrator.integrate(f, 0.0, sol.R0);
}

} // namespace rotstar
