#include <doctest.h>

#include "rotstar/diagnostics.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/iteration.hpp"

#include <cmath>
#include <random>

using namespace rotstar;

namespace {

const BaseState& base48()
{
    static const BaseState b = build_base(PhysicalParams::make(1.5), {48, 25, 12});
    return b;
}

AxiProfile rz_gaussian()
{
    return AxiProfile([](double r, double z) {
        const double e = std::exp(-(r * r + 2 * z * z));
        return ValueGrad{e, -2 * r * e, -4 * z * e};
    });
}

AxiProfile r_only()
{
    return AxiProfile(
        [](double r, double) {
            const double b = 1 + r * r;
            return ValueGrad{1 / b, -2 * r / (b * b), 0.0};
        },
        true);
}

} // namespace

TEST_CASE("momentum residual of the base state")
{
    const auto& b = base48();
    const auto p = b.params;
    const auto prof = apply_cutoff(rz_gaussian(), RadialProfile::constant(0.0), b.domain);
    const AxiField one(b.domain, 1.0);
    const auto rep = momentum_residual(b.V0, one, b.alpha0, p, prof, b.M);
    CHECK(rep.W_sup < 1e-10);
    CHECK(rep.mass_err < 1e-12 * b.M);
    CHECK(rep.curl_sup == 0.0);
    CHECK(rep.pw_cross_sup == 0.0);

    // Injecting rotation without re-solving leaves the centrifugal term.
    auto pk = p;
    pk.kappa = 1e-3;
    const auto unbalanced = momentum_residual(b.V0, one, b.alpha0, pk, prof, b.M);
    double cent = 0.0;
    const auto& d = b.domain;
    for (int i = 0; i < d.Nu && d.u(i) <= d.R1; ++i)
        for (int j = 0; j < d.Ntheta; ++j)
            cent = std::max(cent, pk.kappa * prof.omega2(d.r(i, j), d.z(i, j)) * d.r(i, j));
    CHECK(unbalanced.W_sup == doctest::Approx(cent).epsilon(0.05));
}

TEST_CASE("report entries are finite, nonnegative and repeatable")
{
    const auto& b = base48();
    const auto p = PhysicalParams::make(1.5, 1e-3, 1e-3);
    const auto prof = apply_cutoff(rz_gaussian(), RadialProfile::constant(0.3), b.domain);
    const auto r = newton_solve(b, p, prof);
    const auto a = momentum_residual(r.state.V, r.state.S, r.state.alpha, p, prof, b.M);
    const auto c = momentum_residual(r.state.V, r.state.S, r.state.alpha, p, prof, b.M);
    for (double x : {a.W_sup, a.W_l2, a.curl_sup, a.mass_err, a.pw_cross_sup, a.tangential_sup}) {
        CHECK(std::isfinite(x));
        CHECK(x >= 0.0);
    }
    CHECK(a.W_sup == c.W_sup);
    CHECK(a.W_l2 == c.W_l2);
    CHECK(a.curl_sup == c.curl_sup);
    // One source of truth for the mass check.
    CHECK(a.mass_err == mass_error(r.state.V, r.state.S, p.q, b.M));
    CHECK(a.tangential_sup < 1e-10);
    CHECK(a.W_sup < 1e-3);
}

TEST_CASE("Poincare-Wavre dichotomy")
{
    const auto& b = base48();
    {
        const auto p = PhysicalParams::make(1.5, 1e-3, 0.0);
        const auto prof = apply_cutoff(r_only(), RadialProfile::constant(0.0), b.domain);
        const auto r = newton_solve(b, p, prof);
        const auto pw = poincare_wavre(r.state.V, r.state.S, p, prof);
        CHECK(pw.barotropic_profile);
        CHECK(pw.defect <= 1e-8);
        CHECK(pw.consistent);
    }
    {
        const auto p = PhysicalParams::make(1.5, 1e-3, 0.0);
        const auto prof = apply_cutoff(AxiProfile([](double r, double z) {
                                           const double b = 1 + r * r + z * z;
                                           return ValueGrad{1 / b, -2 * r / (b * b), -2 * z / (b * b)};
                                       }),
                                       RadialProfile::constant(0.0), b.domain);
        const auto r = newton_solve(b, p, prof);
        const auto pw = poincare_wavre(r.state.V, r.state.S, p, prof);
        CHECK(pw.defect > 1e-6);
        CHECK(pw.source_sup > 1e-6);
        CHECK(pw.consistent);
    }
    {
        const AxiField one(b.domain, 1.0);
        const auto prof = apply_cutoff(rz_gaussian(), RadialProfile::constant(0.0), b.domain);
        CHECK(poincare_wavre(b.V0, one, b.params, prof).defect == 0.0);
    }
}

TEST_CASE("weighted Holder norms")
{
    const auto d = DomainSpec::make(1.0, 1.5, 33, 17, 8);
    CHECK(weighted_holder_norm(AxiField(d, 0.0), 1.0) == 0.0);
    const double one = weighted_holder_norm(AxiField(d, 1.0), 0.0, 0.5);
    CHECK(one >= 1.0);
    CHECK(one <= 2.0);
    CHECK(weighted_holder_norm(AxiField(d, 1.0), 0.0, 0.5, HolderVariant::Bracket) == doctest::Approx(1.0));

    // Both variants are finite and comparable on smooth fields; the
    // equivalence constant observed on random samples stays moderate.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double cmax = 0.0;
    for (int t = 0; t < 5; ++t) {
        const double a = U(rng), c = U(rng), w = 1.5 + U(rng);
        const auto f = AxiField::from_function(
            d, [&](double r, double z) { return a + c * std::cos(w * r) * std::exp(-z * z); });
        for (double k : {0.0, 1.0}) {
            const double par = weighted_holder_norm(f, k, 0.5, HolderVariant::Parenthesis);
            const double bra = weighted_holder_norm(f, k, 0.5, HolderVariant::Bracket);
            REQUIRE(par > 0.0);
            cmax = std::max({cmax, bra / par, par / bra});
        }
    }
    CHECK(cmax < 10.0);
    MESSAGE("observed Holder equivalence constant " << cmax);

    // Pair budget: the stride grows with the grid.
    const auto big = DomainSpec::make(1.0, 1.5, 256, 129, 16);
    const int s = holder_stride(big, 1000000);
    CHECK(s > 1);
    const std::size_t n = static_cast<std::size_t>((big.Nu - 2) / s + 1) * ((big.Ntheta - 1) / s + 1);
    CHECK(n * (n - 1) / 2 <= 1000000);

    set_warnings_enabled(false);
    CHECK(std::isfinite(weighted_holder_norm(AxiField(d, 1.0), 0.0, 1.5)));
    set_warnings_enabled(true);
}

TEST_CASE("entropy scaling table")
{
    const auto d = DomainSpec::make(1.0, 1.5, 17, 9, 4);
    const auto shape = AxiField::from_function(d, [](double r, double z) { return std::exp(-r * r - z * z); });
    std::vector<double> t{0.0, 1e-4, 2e-4, 4e-4};
    std::vector<AxiField> S;
    for (double x : t)
        S.push_back(AxiField(d, 1.0) + x * shape);
    const auto tab = entropy_scaling_check(t, S);
    CHECK(tab.rows[0].sup == 0.0);
    CHECK(tab.slope_sup == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(tab.slope_c1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(entropy_scaling_check({0.0, 1e-4, 2e-4}, {S[0], S[1], S[2]}), DomainError);
}

TEST_CASE("orders")
{
    CHECK(observed_order(4.0, 1.0) == doctest::Approx(2.0));
    CHECK(fitted_order({0.1, 0.05, 0.025}, {1e-2, 2.5e-3, 6.25e-4}) == doctest::Approx(2.0));
}
