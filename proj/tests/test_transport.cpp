#include <doctest.h>

#include "rotstar/errors.hpp"
#include "rotstar/lane_emden.hpp"
#include "rotstar/transport.hpp"

#include <chrono>
#include <cmath>

using namespace rotstar;

namespace {

struct Setup {
    LaneEmdenSolution sol;
    DomainSpec d;
    AxiField V0;
};

Setup base(int Nu = 64, int Nt = 33)
{
    Setup s{solve_lane_emden(2.0), {}, {}};
    s.d = domain_for(s.sol, Nu, Nt, 16);
    s.V0 = sample_V0(s.sol, s.d);
    return s;
}

AxiProfile rz_gaussian(double c = 1.0, double a = 2.0)
{
    return AxiProfile([=](double r, double z) {
        const double e = c * std::exp(-(r * r + a * z * z));
        return ValueGrad{e, -2 * r * e, -2 * a * z * e};
    });
}

AxiProfile r_only(double c = 1.0, double pw = 1.0)
{
    return AxiProfile(
        [=](double r, double) {
            const double b = 1 + r * r;
            return ValueGrad{c / std::pow(b, pw), -2 * pw * c * r / std::pow(b, pw + 1), 0.0};
        },
        true);
}

RadialProfile gaussian_s0(double c = 1.0, double w = 1.0)
{
    return RadialProfile([=](double r) {
        const double e = c * std::exp(-r * r / (w * w));
        return std::pair{e, -2 * r / (w * w) * e};
    });
}

} // namespace

TEST_CASE("radial characteristics are circles")
{
    const auto s = base();
    const FieldInterpolator V(s.V0);
    const auto tr = trace_back(0.3, 0.4, V, nullptr, 1e-12);
    CHECK(std::abs(tr.tau - 0.5) < 1e-9);
    CHECK_FALSE(tr.exited);
    CHECK(tr.v_drift < 1e-9);
    const auto eq = trace_back(0.7, 0.0, V, nullptr, 1e-12);
    CHECK(eq.tau == 0.7);
    CHECK(eq.t_len == 0.0);
}

TEST_CASE("no source inside the plateau for constant rotation")
{
    const auto s = base();
    const auto prof = apply_cutoff(AxiProfile::constant(1.0), RadialProfile::constant(0.0), s.d);
    const FieldInterpolator V(s.V0);
    const auto tr = trace_back(0.3, 0.4, V, &prof, 1e-12);
    CHECK(std::abs(tr.source_integral) < 1e-14);
}

TEST_CASE("zero data gives S = 1 exactly")
{
    const auto s = base();
    const auto p = PhysicalParams::make(1.5, 0.0, 0.0);
    const auto prof = apply_cutoff(rz_gaussian(), gaussian_s0(), s.d);
    const auto S = solve_entropy(s.V0, p, prof);
    for (double v : S.values())
        CHECK(v == 1.0);
}

TEST_CASE("floor entropy is carried along circles")
{
    const auto s = base();
    const auto p = PhysicalParams::make(1.5, 0.0, 1e-2);
    const auto prof = apply_cutoff(rz_gaussian(), gaussian_s0(), s.d);
    const auto S = solve_entropy(s.V0, p, prof);
    double err = 0;
    for (int i = 0; i < s.d.Nu; ++i)
        for (int j = 0; j < s.d.Ntheta; ++j) {
            const double u = s.d.u(i);
            const double exact = u > s.d.R1 ? 1.0 : std::exp(p.mu * prof.s0(u < 1e-3 * s.d.R ? 0.0 : u) / p.gamma);
            err = std::max(err, std::abs(S(i, j) - exact));
        }
    CHECK(err < 1e-6);
    // Equator nodes carry the floor data.
    for (int i = 0; i < s.d.Nu && s.d.u(i) <= s.d.R1; ++i)
        CHECK(S(i, s.d.Ntheta - 1) == doctest::Approx(std::exp(p.mu * prof.s0(s.d.u(i)) / p.gamma)).epsilon(1e-14));
}

TEST_CASE("barotropic rotation leaves S = 1 on the plateau")
{
    const auto s = base();
    const auto p = PhysicalParams::make(1.5, 1e-3, 0.0);
    const auto prof = apply_cutoff(r_only(), RadialProfile::constant(0.0), s.d);
    const auto S = solve_entropy(s.V0, p, prof);
    const double dev = (S - AxiField(s.d, 1.0)).max_abs_where([&](int i, int) { return s.d.u(i) <= s.d.plateau_radius(); });
    CHECK(dev < 1e-13);
}

TEST_CASE("S = 1 beyond R1 and strictly positive")
{
    const auto s = base();
    const auto p = PhysicalParams::make(1.5, 1e-3, 1e-3);
    const auto prof = apply_cutoff(rz_gaussian(), gaussian_s0(), s.d);
    const auto S = solve_entropy(s.V0, p, prof);
    for (int i = 0; i < s.d.Nu; ++i)
        if (s.d.u(i) > s.d.R1)
            for (int j = 0; j < s.d.Ntheta; ++j)
                CHECK(S(i, j) == 1.0);
    CHECK(S.min_value() > 0.0);
    CHECK(symmetry_residual(S) < 1e-2 * (S - AxiField(s.d, 1.0)).max_abs() / s.d.h() + 1e-12);
}

TEST_CASE("linear scaling of S - 1")
{
    const auto s = base();
    const auto prof = apply_cutoff(rz_gaussian(), gaussian_s0(), s.d);
    auto dev = [&](double t) {
        const auto p = PhysicalParams::make(1.5, t, t);
        return (solve_entropy(s.V0, p, prof) - AxiField(s.d, 1.0)).max_abs();
    };
    const double a = dev(2e-3), b = dev(1e-3);
    CHECK(a / b == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("entropy residual")
{
    const auto prof_of = [](const DomainSpec& d) { return apply_cutoff(rz_gaussian(), gaussian_s0(), d); };
    {
        const auto s = base(32, 17);
        const auto prof = prof_of(s.d);
        const auto p0 = PhysicalParams::make(1.5, 0.0, 0.0);
        CHECK(entropy_residual(AxiField(s.d, 1.0), s.V0, p0, prof).sup == 0.0);
        const auto p1 = PhysicalParams::make(1.5, 1e-3, 0.0);
        const auto r = entropy_residual(AxiField(s.d, 1.0), s.V0, p1, prof);
        CHECK(r.sup > 1e-5);
        CHECK(r.field(10, 5) == doctest::Approx(1e-3 * prof.transport_source(s.d.r(10, 5), s.d.z(10, 5))));
    }
    auto res = [&](int Nu) {
        const auto s = base(Nu, Nu / 2 + 1);
        const auto prof = prof_of(s.d);
        const auto p = PhysicalParams::make(1.5, 1e-3, 1e-3);
        const auto S = solve_entropy(s.V0, p, prof);
        // Measure where S is smooth: away from the axis singularity of the
        // trace map and inside R1.
        const auto r = entropy_residual(S, s.V0, p, prof);
        return r.field.max_abs_where([&](int i, int) {
            return s.d.u(i) > 0.05 * s.d.R && s.d.u(i) < s.d.R0;
        });
    };
    const double a = res(32), b = res(64);
    CHECK(a / b > 3.0);
}

TEST_CASE("jacobian check")
{
    const auto s = base();
    const auto rep = jacobian_check(s.V0);
    CHECK_FALSE(rep.fold);
    CHECK(rep.max_vr < 0.0);
    double mn = 1e300;
    for (int i = 1; i < s.d.Nu && s.d.u(i) <= s.d.R1; ++i)
        mn = std::min(mn, std::abs(eval_V0(s.sol, s.d.u(i)).second));
    CHECK(rep.min_abs_vr == doctest::Approx(mn).epsilon(1e-4));
    CHECK(rep.min_gap > 0.0);

    const auto bumped = s.V0 + AxiField::from_function(s.d, [](double r, double z) { return 1e-4 * std::exp(-r * r - 3 * z * z); });
    CHECK_FALSE(jacobian_check(bumped).fold);
    CHECK(jacobian_check(-1.0 * s.V0).fold);
}

TEST_CASE("foot radius and V conservation at Nu = 128")
{
    const auto s = base(128, 64);
    const auto p = PhysicalParams::make(1.5, 1e-3, 1e-3);
    const auto prof = apply_cutoff(rz_gaussian(), gaussian_s0(), s.d);
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve_entropy_detailed(s.V0, p, prof);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 30.0);
    CHECK(sol.exited == 0);
    CHECK(sol.max_v_drift <= 1e-9);
    double err = 0;
    for (int i = 0; i < s.d.Nu; ++i)
        if (s.d.u(i) <= s.d.R1 && s.d.u(i) >= 1e-3 * s.d.R)
            for (int j = 0; j < s.d.Ntheta; ++j)
                err = std::max(err, std::abs(sol.tau(i, j) - s.d.u(i)));
    CHECK(err <= 1e-9);
}

TEST_CASE("too large data is rejected")
{
    const auto s = base(32, 17);
    const auto p = PhysicalParams::make(1.5, 0.0, 0.0);
    auto big = p;
    big.kappa = 500.0;
    // omega^2 = 1 + z^2 has (omega^2 r)_z > 0, so S decreases along traces.
    const AxiProfile grow([](double, double z) { return ValueGrad{1 + z * z, 0.0, 2 * z}; });
    const auto prof = apply_cutoff(grow, RadialProfile::constant(0.0), s.d);
    CHECK_THROWS_AS(solve_entropy(s.V0, big, prof), InvariantViolation);
}
