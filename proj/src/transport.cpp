#include "rotstar/transport.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/potential.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

namespace rotstar {

namespace {

using State = std::array<double, 3>; // r, z, source integral

namespace odeint = boost::numeric::odeint;

auto make_stepper(double tol)
{
    return odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
}

} // namespace

CharTrace trace_back(double r, double z, const FieldInterpolator& V, const Profiles* prof,
                     double tol, std::vector<std::array<double, 2>>* path, long max_steps)
{
    CharTrace tr;
    r = std::abs(r);
    z = std::abs(z);
    const DomainSpec& d = V.domain();
    if (path)
        path->push_back({r, z});
    if (z == 0.0) {
        tr.tau = r;
        return tr;
    }
    auto sys = [&](const State& x, State& dx, double) {
        const auto g = V.eval(x[0], x[1]);
        dx[0] = -g[2];
        dx[1] = g[1];
        dx[2] = prof ? prof->transport_source(x[0], x[1]) : 0.0;
    };
    const double v_start = V.value(r, z);
    const auto g0 = V.eval(r, z);
    const double speed = std::hypot(g0[1], g0[2]);
    const double u0 = std::hypot(r, z);
    double dt0 = speed > 0.0 ? 0.01 * u0 / speed : 1e-3 * d.R;

    auto stepper = make_stepper(tol);
    stepper.initialize(State{r, z, 0.0}, 0.0, dt0);
    State at{};
    while (true) {
        const auto [s0, s1] = stepper.do_step(sys);
        ++tr.steps;
        const State& c = stepper.current_state();
        if (c[0] < 0.0 || std::hypot(c[0], c[1]) > d.R) {
            tr.exited = true;
            tr.t_len = s1;
            return tr;
        }
        if (c[1] <= 0.0) {
            double a = s0, b = s1;
            // z is monotone near the crossing; bisection then one secant step.
            for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
                const double mid = 0.5 * (a + b);
                stepper.calc_state(mid, at);
                (at[1] > 0.0 ? a : b) = mid;
            }
            State xa{}, xb{};
            stepper.calc_state(a, xa);
            stepper.calc_state(b, xb);
            double root = xa[1] == xb[1] ? a : a + xa[1] * (b - a) / (xa[1] - xb[1]);
            root = std::clamp(root, a, b);
            stepper.calc_state(root, at);
            tr.tau = at[0];
            tr.source_integral = at[2];
            tr.t_len = root;
            if (path)
                path->push_back({at[0], 0.0});
            return tr;
        }
        tr.v_drift = std::max(tr.v_drift, std::abs(V.value(c[0], c[1]) - v_start));
        if (path)
            path->push_back({c[0], c[1]});
        if (tr.steps > max_steps) {
            std::ostringstream os;
            os << "characteristic from (" << r << ", " << z << ") exceeded " << max_steps << " steps";
            throw NonConvergenceError(os.str());
        }
    }
}

EntropySolution solve_entropy_detailed(const AxiField& V, const PhysicalParams& p,
                                       const Profiles& prof, const TransportOptions& opts)
{
    const DomainSpec& d = V.domain();
    EntropySolution out;
    out.S = AxiField(d, 1.0);
    out.tau = AxiField::radial(d, [](double u) { return u; });
    if (p.kappa == 0.0 && p.mu == 0.0)
        return out;

    if (opts.reference && opts.guard > 0.0) {
        const double dev = (V - *opts.reference).max_abs();
        if (dev > opts.guard) {
            std::ostringstream os;
            os << "||V - V0|| = " << dev << " exceeds the transport guard " << opts.guard
               << "; characteristics may not be near-circular";
            warn(os.str());
        }
    }

    const double floor_center = std::exp(p.mu * prof.s0(0.0) / p.gamma);
    const double u_axis = opts.eps_axis * d.R;
    std::vector<std::pair<int, int>> nodes;
    for (int i = 0; i < d.Nu; ++i) {
        const double u = d.u(i);
        if (u > d.R1)
            continue;
        if (u < u_axis) {
            for (int j = 0; j < d.Ntheta; ++j) {
                out.S(i, j) = floor_center;
                out.tau(i, j) = 0.0;
            }
            continue;
        }
        for (int j = 0; j < d.Ntheta; ++j)
            nodes.emplace_back(i, j);
    }

    const FieldInterpolator interp(V);
    std::vector<CharTrace> traces(nodes.size());
    std::exception_ptr failure;
#if defined(ROTSTAR_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic, 32)
#endif
    for (long k = 0; k < static_cast<long>(nodes.size()); ++k) {
        try {
            const auto [i, j] = nodes[k];
            traces[k] = trace_back(d.r(i, j), d.z(i, j), interp, &prof, opts.tol, nullptr, opts.max_steps);
        } catch (...) {
#if defined(ROTSTAR_HAVE_OPENMP)
#pragma omp critical
#endif
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);

    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto [i, j] = nodes[k];
        const CharTrace& t = traces[k];
        out.total_steps += t.steps;
        if (t.exited) {
            ++out.exited;
            out.S(i, j) = 1.0;
            continue;
        }
        out.max_v_drift = std::max(out.max_v_drift, t.v_drift);
        out.tau(i, j) = t.tau;
        out.S(i, j) = std::exp(p.mu * prof.s0(t.tau) / p.gamma) - p.kappa * t.source_integral;
    }
    // The origin row is a single point.
    for (int j = 1; j < d.Ntheta; ++j)
        out.S(0, j) = out.S(0, 0);

    const double smin = out.S.min_value();
    if (!(smin > 0.0)) {
        std::ostringstream os;
        os << "entropy solve produced S = " << smin << " <= 0: kappa = " << p.kappa << ", mu = " << p.mu
           << " are too large";
        throw InvariantViolation(os.str());
    }
    return out;
}

AxiField solve_entropy(const AxiField& V, const PhysicalParams& p, const Profiles& prof,
                       const TransportOptions& opts)
{
    return solve_entropy_detailed(V, p, prof, opts).S;
}

FieldNorms entropy_residual(const AxiField& S, const AxiField& V, const PhysicalParams& p,
                            const Profiles& prof)
{
    const DomainSpec& d = V.domain();
    const auto [Sr, Sz] = grad_rz(S);
    const auto [Vr, Vz] = grad_rz(V);
    FieldNorms out;
    out.field = AxiField(d);
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j) {
            const double src = p.kappa == 0.0 ? 0.0 : p.kappa * prof.transport_source(d.r(i, j), d.z(i, j));
            out.field(i, j) = Sr(i, j) * Vz(i, j) - Sz(i, j) * Vr(i, j) + src;
        }
    out.sup = out.field.max_abs();
    const AxiField sq = out.field.map([](double x) { return x * x; });
    out.l2 = std::sqrt(std::max(0.0, total_integral(sq)));
    return out;
}

JacobianReport jacobian_check(const AxiField& V, int max_traces, double tol)
{
    const DomainSpec& d = V.domain();
    const FieldInterpolator interp(V);
    JacobianReport rep;
    rep.min_abs_vr = std::numeric_limits<double>::infinity();
    rep.max_vr = -std::numeric_limits<double>::infinity();
    std::vector<double> feet;
    for (int i = 1; i < d.Nu && d.u(i) <= d.R1; ++i) {
        const double vr = interp.eval(d.u(i), 0.0)[1];
        rep.min_abs_vr = std::min(rep.min_abs_vr, std::abs(vr));
        rep.max_vr = std::max(rep.max_vr, vr);
        feet.push_back(d.u(i));
        ++rep.samples;
    }
    rep.fold = !(rep.max_vr < 0.0);
    if (rep.fold)
        return rep;

    // Forward traces d(r,z)/dt = (V_z, -V_r) from a subsample of the feet to
    // the axis.
    const int stride = std::max<int>(1, static_cast<int>(feet.size()) / std::max(1, max_traces));
    std::vector<std::vector<std::array<double, 2>>> paths;
    for (std::size_t k = 0; k < feet.size(); k += stride) {
        std::vector<std::array<double, 2>> pts;
        auto sys = [&](const std::array<double, 2>& x, std::array<double, 2>& dx, double) {
            const auto g = interp.eval(x[0], x[1]);
            dx[0] = g[2];
            dx[1] = -g[1];
        };
        std::array<double, 2> x{feet[k], 0.0};
        pts.push_back(x);
        auto st = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<std::array<double, 2>>());
        const double speed = std::abs(interp.eval(x[0], 0.0)[1]);
        st.initialize(x, 0.0, 0.01 * feet[k] / std::max(speed, 1e-300));
        for (int step = 0; step < 100000; ++step) {
            st.do_step(sys);
            const auto& c = st.current_state();
            if (c[0] <= 0.0 || c[1] < 0.0 || std::hypot(c[0], c[1]) > d.R)
                break;
            // Sub-sample each step so neighbouring paths are compared densely.
            const double t0 = st.previous_time(), t1 = st.current_time();
            for (int m = 1; m <= 4; ++m) {
                std::array<double, 2> y;
                st.calc_state(t0 + (t1 - t0) * m / 4.0, y);
                pts.push_back(y);
            }
        }
        paths.push_back(std::move(pts));
    }
    rep.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < paths.size(); ++k)
        for (const auto& a : paths[k])
            for (const auto& b : paths[k + 1])
                rep.min_gap = std::min(rep.min_gap, std::hypot(a[0] - b[0], a[1] - b[1]));
    if (!(rep.min_gap > 0.0))
        rep.fold = true;
    return rep;
}

} // namespace rotstar
