// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "oracles.hpp"

#include "rotstar/diagnostics.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/iteration.hpp"
#include "rotstar/lane_emden.hpp"
#include "rotstar/linearized.hpp"
#include "rotstar/potential.hpp"
#include "rotstar/transport.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rotstar;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

AxiProfile rz_gaussian()
{
    return AxiProfile([](double r, double z) {
        const double e = std::exp(-(r * r + 2 * z * z));
        return ValueGrad{e, -2 * r * e, -4 * z * e};
    });
}

AxiProfile r_only_power()
{
    return AxiProfile(
        [](double r, double) {
            const double b = 1 + r * r;
            return ValueGrad{1 / b, -2 * r / (b * b), 0.0};
        },
        true);
}

RadialProfile gaussian_s0()
{
    return RadialProfile([](double r) {
        const double e = std::exp(-r * r);
        return std::pair{e, -2 * r * e};
    });
}

const BaseState& base64()
{
    static const BaseState b = build_base(PhysicalParams::make(1.5), {64, 33, 16});
    return b;
}

// ---------------------------------------------------------------------------

void lane_emden_closed_form(Outcome& o)
{
    const auto t0 = Clock::now();
    const LaneEmdenSolution sol = solve_lane_emden(1.0);
    const double k = std::sqrt(4 * kPi);
    double err = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double u = sol.R0 * i / 2000.0;
        const double exact = u == 0.0 ? 1.0 : std::sin(k * u) / (k * u);
        err = std::max(err, std::abs(eval_V0(sol, u).first - exact));
    }
    const double dR = std::abs(sol.R0 - std::sqrt(kPi) / 2);
    const double secs = seconds_since(t0);
    o.detail << "q=1: max profile error " << err << ", |R0 - sqrt(pi)/2| " << dR << ", " << secs << " s";
    o.require(err <= 1e-8, "profile error <= 1e-8");
    o.require(dR <= 1e-9, "R0 within 1e-9");
    o.require(secs < 1.0, "runtime < 1 s");
}

void lane_emden_q2(Outcome& o)
{
    const double xi1 = oracle::lane_emden_first_zero(2.0);
    const LaneEmdenSolution sol = solve_lane_emden(2.0);
    const double R0 = xi1 / std::sqrt(4 * kPi);
    const double rel = std::abs(sol.R0 - R0) / R0;
    const double arel = std::abs(sol.alpha0 + sol.M / sol.R0) / std::abs(sol.alpha0);
    o.detail << "q=2: xi1 (RK4 oracle) " << xi1 << ", R0 rel err " << rel << ", alpha0 + M/R0 rel " << arel;
    o.require(rel <= 1e-6, "R0 relative 1e-6");
    o.require(arel <= 1e-8, "alpha0 = -M/R0 to 1e-8");
}

void potential_oracles(Outcome& o)
{
    // Uniform ball filling the computational ball, inside and outside.
    const auto d = DomainSpec::make(1.0, 1.5, 65, 17, 16);
    const double a = d.R;
    PotentialOptions opts;
    opts.clamp_to_R1 = false;
    const AxiField one(d, 1.0);
    const AxiField U = newtonian_potential(one, opts);
    double inside = 0.0;
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j) {
            const double exact = 2 * kPi * (a * a - d.u(i) * d.u(i) / 3);
            inside = std::max(inside, std::abs(U(i, j) - exact) / exact);
        }
    const auto moments = multipole_moments(legendre_analyze(one, 16), d);
    double outside = 0.0;
    for (double s : {1.0, 1.3, 2.0, 5.0}) {
        const double exact = 4 * kPi * a * a * a / 3 / (s * a);
        outside = std::max(outside, std::abs(exterior_potential(moments, 0.6 * s * a, 0.8 * s * a) - exact) / exact);
    }
    o.detail << "ball rel err inside " << inside << ", outside " << outside;
    o.require(inside <= 1e-6 && outside <= 1e-6, "uniform ball 1e-6 relative");

    // V0 = potential of (V0)_+^q + alpha0 at Nu = 128.
    o.detail << "; identity sup err";
    for (double q : {1.5, 2.0, 3.0}) {
        const LaneEmdenSolution sol = solve_lane_emden(q);
        const DomainSpec dq = domain_for(sol, 128, 16, 8);
        const AxiField V0 = sample_V0(sol, dq);
        const AxiField W = newtonian_potential(density(V0, AxiField(dq, 1.0), q)) + AxiField(dq, sol.alpha0);
        const double e = (W - V0).max_abs();
        o.detail << " q=" << q << ": " << e;
        o.require(e <= 5e-6, "identity 5e-6 at q=" + std::to_string(q));
    }
}

void exact_fixed_point(Outcome& o)
{
    const BaseState& b = base64();
    const Profiles prof = apply_cutoff(rz_gaussian(), gaussian_s0(), b.domain);
    const NewtonResult r = newton_solve(b, b.params, prof);
    const auto& s = r.history.steps.front();
    bool unit = true;
    for (double v : r.state.S.values())
        unit = unit && v == 1.0;
    o.detail << "steps " << r.history.steps.size() << ", difference " << s.dV_sup + s.dalpha << ", S == 1 "
             << (unit ? "exactly" : "NOT exactly");
    o.require(r.history.steps.size() == 1, "one step");
    o.require(s.dV_sup + s.dalpha <= 1e-10, "difference <= 1e-10");
    o.require(unit, "S identically 1");
}

void characteristics(Outcome& o)
{
    const LaneEmdenSolution sol = solve_lane_emden(2.0);
    const DomainSpec d = domain_for(sol, 128, 64, 16);
    const AxiField V0 = sample_V0(sol, d);
    const Profiles prof = apply_cutoff(rz_gaussian(), gaussian_s0(), d);
    const auto t0 = Clock::now();
    const EntropySolution es = solve_entropy_detailed(V0, PhysicalParams::make(1.5, 1e-3, 1e-3), prof);
    const double secs = seconds_since(t0);
    double foot = 0.0;
    for (int i = 0; i < d.Nu; ++i)
        if (d.u(i) <= d.R1 && d.u(i) >= 1e-3 * d.R)
            for (int j = 0; j < d.Ntheta; ++j)
                foot = std::max(foot, std::abs(es.tau(i, j) - d.u(i)));
    o.detail << "Nu=128: max |tau - u| " << foot << ", max V drift " << es.max_v_drift << ", exited "
             << es.exited << ", " << secs << " s";
    o.require(foot <= 1e-9, "foot radius 1e-9");
    o.require(es.max_v_drift <= 1e-9, "V drift 1e-9");
    o.require(es.exited == 0, "no trace leaves the ball");
    o.require(secs < 30.0, "entropy solve < 30 s");
}

void rotating_solve(Outcome& o)
{
    const auto t0 = Clock::now();
    const auto p = PhysicalParams::make(1.5, 1e-3, 1e-3);
    std::vector<double> hs, ws;
    for (int Nu : {64, 128, 256}) {
        const BaseState b = build_base(PhysicalParams::make(1.5), {Nu, Nu / 2 + 1, 16});
        const Profiles prof = apply_cutoff(rz_gaussian(), gaussian_s0(), b.domain);
        const NewtonResult r = newton_solve(b, p, prof);
        const auto rep = momentum_residual(r.state.V, r.state.S, r.state.alpha, p, prof, b.M);
        o.detail << "Nu=" << Nu << ": steps " << r.history.steps.size() << ", mass_err/M " << rep.mass_err / b.M
                 << ", W_sup " << rep.W_sup << "; ";
        o.require(r.history.steps.size() <= 15, "<= 15 steps at Nu=" + std::to_string(Nu));
        o.require(rep.mass_err <= 1e-8 * b.M, "mass error at Nu=" + std::to_string(Nu));
        hs.push_back(b.domain.h());
        ws.push_back(rep.W_sup);
    }
    const double fit = fitted_order(hs, ws);
    const double secs = seconds_since(t0);
    o.detail << "pairwise orders " << observed_order(ws[0], ws[1]) << ", " << observed_order(ws[1], ws[2])
             << "; fitted order " << fit << "; " << secs << " s";
    o.require(ws[1] < ws[0] && ws[2] < ws[1], "W_sup decreases");
    o.require(fit >= 1.5, "fitted order >= 1.5");
    o.require(secs < 600.0, "runtime < 10 min");
}

void contraction(Outcome& o)
{
    const BaseState& b = base64();
    const Profiles prof = apply_cutoff(rz_gaussian(), gaussian_s0(), b.domain);
    // Ratios of steps whose C^1 difference is at roundoff level carry no
    // information and are left out of the comparison.
    const double floor = 1e-11;
    auto ratios = [&](double k, double m) {
        const NewtonResult r = newton_solve(b, PhysicalParams::make(1.5, k, m), prof);
        std::vector<double> out;
        for (const auto& s : r.history.steps)
            if (s.step >= 2)
                out.push_back(s.c1_diff > floor ? s.ratio : std::nan(""));
        return out;
    };
    for (auto [k, m] : {std::pair{5e-4, 5e-4}, std::pair{1e-3, 0.0}, std::pair{0.0, 1e-3}}) {
        const auto full = ratios(k, m), half = ratios(k / 2, m / 2);
        double worst = 0.0;
        bool monotone = true;
        for (double x : full)
            if (!std::isnan(x))
                worst = std::max(worst, x);
        for (double x : half)
            if (!std::isnan(x))
                worst = std::max(worst, x);
        for (std::size_t n = 0; n < std::min(full.size(), half.size()); ++n)
            if (!std::isnan(full[n]) && !std::isnan(half[n]) && half[n] > full[n])
                monotone = false;
        o.detail << "(" << k << "," << m << "): max ratio " << worst << (monotone ? ", halving lowers ratios" : ", halving RAISES a ratio") << "; ";
        o.require(worst < 0.5, "ratios < 1/2");
        o.require(monotone, "halving does not increase ratios");
    }
}

void linear_response(Outcome& o)
{
    const BaseState& b = base64();
    const Profiles prof = apply_cutoff(rz_gaussian(), gaussian_s0(), b.domain);
    const SweepReport sw = sweep(b, {4e-3, 2e-3, 1e-3}, {0.0}, 1.5, prof);
    for (const auto& pt : sw.points)
        o.require(pt.ok, "sweep point converged");
    if (!o.pass)
        return;
    const double r1 = sw.points[0].dV_sup / sw.points[1].dV_sup;
    const double r2 = sw.points[1].dV_sup / sw.points[2].dV_sup;
    o.detail << "|V_k - V0| ratios " << r1 << ", " << r2;
    o.require(std::abs(r1 - 2) <= 0.2 && std::abs(r2 - 2) <= 0.2, "ratios 2 within 10%");

    // Ray (kappa, mu) = (t/2, t/2).
    std::vector<double> ts{0.0, 1e-3, 2e-3, 4e-3};
    std::vector<AxiField> Ss;
    for (double t : ts)
        Ss.push_back(newton_solve(b, PhysicalParams::make(1.5, t / 2, t / 2), prof).state.S);
    const ScalingTable tab = entropy_scaling_check(ts, Ss);
    o.detail << "; |S-1| slope along the ray " << tab.slope_sup << " (C^1 slope " << tab.slope_c1 << ")";
    o.require(tab.slope_sup >= 0.9 && tab.slope_sup <= 1.1, "slope in [0.9, 1.1]");
}

void poincare_wavre_dichotomy(Outcome& o)
{
    const BaseState& b = base64();
    const auto p = PhysicalParams::make(1.5, 1e-3, 0.0);
    {
        const Profiles prof = apply_cutoff(r_only_power(), RadialProfile::constant(0.0), b.domain);
        const NewtonResult r = newton_solve(b, p, prof);
        const auto pw = poincare_wavre(r.state.V, r.state.S, p, prof);
        o.detail << "omega^2(r): defect " << pw.defect;
        o.require(pw.defect <= 1e-8, "barotropic defect <= 1e-8");
    }
    std::vector<double> hs, cs;
    for (int Nu : {64, 128}) {
        const BaseState bb = Nu == 64 ? base64() : build_base(PhysicalParams::make(1.5), {Nu, Nu / 2 + 1, 16});
        const Profiles prof = apply_cutoff(rz_gaussian(), RadialProfile::constant(0.0), bb.domain);
        const NewtonResult r = newton_solve(bb, p, prof);
        const auto pw = poincare_wavre(r.state.V, r.state.S, p, prof);
        const auto rep = momentum_residual(r.state.V, r.state.S, r.state.alpha, p, prof, bb.M);
        if (Nu == 64) {
            o.detail << "; omega^2(r,z): defect " << pw.defect;
            o.require(pw.defect > 1e-6, "barocline defect > 1e-6");
        }
        hs.push_back(bb.domain.h());
        cs.push_back(rep.curl_sup);
    }
    const double ord = observed_order(cs[0], cs[1]);
    o.detail << "; curl residual " << cs[0] << " -> " << cs[1] << " (order " << ord << ")";
    o.require(ord >= 1.8, "curl residual O(h^2)");
}

void mass_critical(Outcome& o)
{
    o.detail << "identity rel err";
    for (double q : {1.5, 2.0, 2.5, 3.5}) {
        const auto [lhs, rhs] = mass_derivative_identity(solve_lane_emden(q));
        const double rel = std::abs(lhs - rhs) / std::abs(rhs);
        o.detail << " q=" << q << ": " << rel;
        o.require(rel <= 1e-5, "identity 1e-5 at q=" + std::to_string(q));
    }
    auto sigma0 = [](double q) {
        const LaneEmdenSolution sol = solve_lane_emden(q);
        const DomainSpec d = domain_for(sol, 64, 17, 8);
        return lambda_sigma_min(assemble_lambda(sol, d)).per_block[0];
    };
    set_warnings_enabled(false);
    const double s2 = sigma0(2.0), s3 = sigma0(3.0);
    set_warnings_enabled(true);
    o.detail << "; sigma_min(l=0) q=2 " << s2 << ", q=3 " << s3 << " (ratio " << s3 / s2 << ")";
    o.require(s3 <= 1e-2 * s2, "q=3 sigma_min <= 1e-2 of q=2");
}

void uniqueness(Outcome& o)
{
    const BaseState& b = base64();
    const Profiles prof = apply_cutoff(rz_gaussian(), gaussian_s0(), b.domain);
    const auto p = PhysicalParams::make(1.5, 1e-3, 1e-3);
    NewtonOptions opts;
    const NewtonResult ref = newton_solve(b, p, prof, opts);
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
        // Smooth, even-in-z perturbation with sup norm 1e-4.
        const double c[4] = {U(rng), U(rng), U(rng), U(rng)};
        const double w = 1.0 + 0.5 * (U(rng) + 1.0);
        AxiField dV = AxiField::from_function(b.domain, [&](double r, double z) {
            return (c[0] + c[1] * std::cos(w * r) + c[2] * std::cos(w * z) + c[3] * r * r) *
                   std::exp(-(r * r + z * z));
        });
        dV *= 1e-4 / dV.max_abs();
        const double da = 1e-4 * U(rng);
        const NewtonResult r = newton_solve(b, p, prof, opts, IterationState{b.V0 + dV, b.alpha0 + da, {}, 0});
        const double diff = (r.state.V - ref.state.V).max_abs() + std::abs(r.state.alpha - ref.state.alpha);
        worst = std::max(worst, diff);
    }
    o.detail << "5 restarts: max distance to the reference state " << worst << " (10 tol = " << 10 * opts.tol << ")";
    o.require(worst <= 10 * opts.tol, "same state within 10 tol");
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"Lane-Emden closed form", lane_emden_closed_form},
        {"Lane-Emden q=2 against an independent integration", lane_emden_q2},
        {"potential oracles", potential_oracles},
        {"exact fixed point at kappa=mu=0", exact_fixed_point},
        {"characteristics of the base state", characteristics},
        {"rotating solve and grid convergence", rotating_solve},
        {"contraction of the frozen Newton map", contraction},
        {"linear response and continuity", linear_response},
        {"Poincare-Wavre dichotomy", poincare_wavre_dichotomy},
        {"mass-critical degeneracy", mass_critical},
        {"uniqueness probe", uniqueness},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            criteria[k].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failed += !o.pass;
        std::printf("%s  %2zu  %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                    seconds_since(t0), o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
