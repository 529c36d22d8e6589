#include <doctest.h>

#include "rotstar/errors.hpp"
#include "rotstar/linearized.hpp"
#include "rotstar/potential.hpp"

#include <cmath>
#include <random>

using namespace rotstar;

namespace {

struct Base {
    LaneEmdenSolution sol;
    DomainSpec d;
    LambdaBlocks L;
};

Base make(double q, int Nu = 64, int Nt = 17, int Lmax = 8)
{
    Base b{solve_lane_emden(q), {}, {}};
    b.d = domain_for(b.sol, Nu, Nt, Lmax);
    b.L = assemble_lambda(b.sol, b.d);
    return b;
}

double p4(double x) { return (35 * std::pow(x, 4) - 30 * x * x + 3) / 8; }

} // namespace

TEST_CASE("action on the alpha direction")
{
    const auto b = make(2.0);
    const auto [V, a] = apply_lambda(b.L, AxiField(b.d, 0.0), 1.0);
    CHECK((V + AxiField(b.d, 1.0)).max_abs() < 1e-13);
    CHECK(std::abs(a) < 1e-15);
    const auto [dV, da] = solve_lambda(b.L, AxiField(b.d, -1.0), 0.0);
    CHECK(dV.max_abs() < 1e-10);
    CHECK(da == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("identity outside the star")
{
    const auto b = make(2.0);
    const double R0 = b.sol.R0;
    const auto f = AxiField::from_function(b.d, [&](double r, double z) {
        const double u = std::hypot(r, z);
        return u > R0 ? std::sin(3 * u) * (1 + 0.2 * (z / u) * (z / u)) : 0.0;
    });
    const auto [V, a] = apply_lambda(b.L, f, 0.0);
    CHECK((V - f).max_abs() < 1e-13);
    CHECK(std::abs(a) < 1e-15);

    const auto g = AxiField::from_function(b.d, [&](double r, double z) {
        const double u = std::hypot(r, z);
        return u > R0 ? u * p4(z / u) : 0.0;
    });
    const auto [gV, ga] = solve_lambda(b.L, g, 0.0);
    CHECK((gV - g).max_abs() < 1e-10);
    CHECK(std::abs(ga) < 1e-12);
}

TEST_CASE("inverse round trip")
{
    const auto b = make(2.0);
    std::mt19937 rng(5);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 3; ++trial) {
        const double c1 = n(rng), c2 = n(rng), c3 = n(rng);
        const auto x = AxiField::from_function(b.d, [&](double r, double z) {
            return c1 * std::exp(-r * r - z * z) + c2 * r * r * z * z + c3 * std::cos(4 * r) * z * z * z * z;
        });
        const double xa = n(rng);
        const auto [y, ya] = apply_lambda(b.L, x, xa);
        const auto [x2, xa2] = solve_lambda(b.L, y, ya);
        CHECK((x2 - x).max_abs() <= 1e-10 * x.max_abs());
        CHECK(std::abs(xa2 - xa) <= 1e-10 * std::abs(xa));
        const auto [y2, ya2] = apply_lambda(b.L, x2, xa2);
        CHECK((y2 - y).max_abs() <= 1e-10 * y.max_abs());
    }
}

TEST_CASE("odd right-hand sides are rejected")
{
    const auto b = make(2.0);
    const auto f = AxiField::from_function(b.d, [](double r, double z) { return r + z; });
    CHECK_THROWS_AS(solve_lambda(b.L, f, 0.0), DomainError);
}

TEST_CASE("block diagonality and the radial reduction")
{
    const auto b = make(2.0, 64, 17, 8);
    const auto f = AxiField::from_function(b.d, [&](double r, double z) {
        const double u = std::hypot(r, z);
        return u == 0 ? 0.0 : std::exp(-u * u) * u * u * p4(z / u);
    });
    const auto [V, a] = apply_lambda(b.L, f, 0.0);
    const auto m = legendre_analyze(V, 8);
    for (int l : {0, 2, 6, 8})
        for (int i = 0; i < b.d.Nu; ++i)
            CHECK(std::abs(m(l, i)) < 1e-10);
    CHECK(std::abs(a) < 1e-12);

    // The same action from the potential module in 3D form.
    const auto weighted = AxiField::from_function(b.d, [&](double r, double z) {
        const double v0 = eval_V0(b.sol, std::hypot(r, z)).first;
        return v0 > 0 ? 2.0 * v0 : 0.0;
    });
    AxiField prod(b.d);
    for (std::size_t k = 0; k < prod.raw().size(); ++k)
        prod.raw()[k] = weighted.values()[k] * f.values()[k];
    const auto ref = f - newtonian_potential(prod);
    CHECK((ref - V).max_abs() < 1e-10);
}

TEST_CASE("scaling direction and the mass-derivative identity")
{
    const auto b = make(2.0, 128);
    const auto U = scaling_direction(b.sol, b.d);
    CHECK(U(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    // The discrete mass row applied to U.
    const auto [LU, a] = apply_lambda(b.L, U, 0.0);
    CHECK(a == doctest::Approx(-b.sol.M).epsilon(1e-3));
    for (double q : {1.5, 2.0, 2.5, 3.5}) {
        const auto [lhs, rhs] = mass_derivative_identity(solve_lane_emden(q));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
    }
    const auto s3 = solve_lane_emden(3.0);
    CHECK(std::abs(mass_derivative_identity(s3).first) < 1e-5 * s3.M);
}

TEST_CASE("degeneracy at the mass-critical index")
{
    set_warnings_enabled(false);
    std::vector<double> qs = {2.0, 2.5, 2.9, 3.0, 3.1, 3.5};
    std::vector<double> s0;
    std::vector<std::vector<double>> blocks;
    for (double q : qs) {
        const auto r = lambda_sigma_min(make(q, 64).L);
        s0.push_back(r.per_block[0]);
        blocks.push_back(r.per_block);
    }
    set_warnings_enabled(true);
    CHECK(s0[3] <= 1e-2 * s0[0]);
    for (std::size_t k = 0; k < qs.size(); ++k)
        CHECK(s0[3] <= s0[k]);
    // l >= 2 blocks do not degenerate.
    for (std::size_t m = 1; m < blocks[0].size(); ++m)
        for (std::size_t k = 0; k < qs.size(); ++k)
            CHECK(blocks[k][m] == doctest::Approx(blocks[0][m]).epsilon(0.2));
    CHECK(lambda_sigma_min(make(2.0).L).min > 0.0);
}
