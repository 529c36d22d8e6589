#include "rotstar/diagnostics.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/potential.hpp"
#include "rotstar/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rotstar {

namespace {

struct MomentumField {
    AxiField Wr, Wz;
};

MomentumField momentum_field(const AxiField& V, const AxiField& S, const AxiField& U,
                             const PhysicalParams& p, const Profiles& prof)
{
    const DomainSpec& d = V.domain();
    const auto [Vr, Vz] = grad_rz(V);
    const auto [Ur, Uz] = grad_rz(U);
    MomentumField w{AxiField(d), AxiField(d)};
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j) {
            const double r = d.r(i, j), z = d.z(i, j);
            const double cent = p.kappa == 0.0 ? 0.0 : p.kappa * prof.omega2(r, z) * r;
            w.Wr(i, j) = S(i, j) * Vr(i, j) - Ur(i, j) - cent;
            w.Wz(i, j) = S(i, j) * Vz(i, j) - Uz(i, j);
        }
    return w;
}

/// Tangential W on u = R from centered theta-differences, with even
/// reflection at the axis and the equator.
double tangential_residual(const AxiField& V, const AxiField& S, const AxiField& U,
                           const PhysicalParams& p, const Profiles& prof)
{
    const DomainSpec& d = V.domain();
    const int i = d.Nu - 1, Nt = d.Ntheta;
    const double dt = d.dtheta();
    double m = 0.0;
    for (int j = 0; j < Nt; ++j) {
        if (j == 0 || j == Nt - 1)
            continue; // the tangential derivative vanishes by symmetry
        const double dV = (V(i, j + 1) - V(i, j - 1)) / (2.0 * dt * d.R);
        const double dU = (U(i, j + 1) - U(i, j - 1)) / (2.0 * dt * d.R);
        const double r = d.r(i, j), z = d.z(i, j);
        const double cent = p.kappa * prof.omega2(r, z) * r * d.cos_theta(j);
        m = std::max(m, std::abs(S(i, j) * dV - dU - cent));
    }
    return m;
}

} // namespace

double momentum_sup(const AxiField& V, const AxiField& S, const AxiField& U,
                    const PhysicalParams& p, const Profiles& prof)
{
    const DomainSpec& d = V.domain();
    const auto w = momentum_field(V, S, U, p, prof);
    double m = 0.0;
    for (int i = 0; i < d.Nu && d.u(i) <= d.R1; ++i)
        for (int j = 0; j < d.Ntheta; ++j)
            m = std::max(m, std::hypot(w.Wr(i, j), w.Wz(i, j)));
    return m;
}

ResidualReport momentum_residual(const AxiField& V, const AxiField& S, double /*alpha*/,
                                 const PhysicalParams& p, const Profiles& prof, double M,
                                 double curl_inner)
{
    const DomainSpec& d = V.domain();
    const AxiField rho = density(V, S, p.q);
    const AxiField U = newtonian_potential(rho);
    const auto w = momentum_field(V, S, U, p, prof);

    ResidualReport rep;
    AxiField sq(d);
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j) {
            if (d.u(i) > d.R1)
                continue;
            const double n = std::hypot(w.Wr(i, j), w.Wz(i, j));
            rep.W_sup = std::max(rep.W_sup, n);
            sq(i, j) = n * n;
        }
    rep.W_l2 = std::sqrt(std::max(0.0, total_integral(sq)));

    const auto curl = entropy_residual(S, V, p, prof);
    rep.curl_sup = curl.field.max_abs_where(
        [&](int i, int) { return d.u(i) >= curl_inner * d.R && d.u(i) <= d.R1; });
    if (std::isfinite(M))
        rep.mass_err = std::abs(total_integral(rho) - M);
    rep.pw_cross_sup = poincare_wavre(V, S, p, prof).defect;
    rep.tangential_sup = tangential_residual(V, S, U, p, prof);
    return rep;
}

PoincareWavreReport poincare_wavre(const AxiField& V, const AxiField& S, const PhysicalParams& p,
                                   const Profiles& prof, double tol)
{
    const DomainSpec& d = V.domain();
    const PhysicalFields phys = to_physical(V, S, p);
    const auto [sr, sz] = grad_rz(phys.s);
    const auto [rr, rz] = grad_rz(phys.rho);
    PoincareWavreReport rep;
    rep.barotropic_profile = prof.omega2.depends_on_r_only();
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j) {
            if (!(phys.rho(i, j) > 0.0))
                continue;
            rep.defect = std::max(rep.defect, std::abs(sr(i, j) * rz(i, j) - sz(i, j) * rr(i, j)));
            if (p.kappa != 0.0)
                rep.source_sup = std::max(
                    rep.source_sup, std::abs(p.kappa * prof.transport_source(d.r(i, j), d.z(i, j))));
        }
    if (rep.barotropic_profile && p.mu == 0.0)
        rep.consistent = rep.defect <= tol;
    else if (p.mu == 0.0 && p.kappa > 0.0)
        rep.consistent = rep.defect > 10.0 * tol && rep.source_sup > 10.0 * tol;
    else
        rep.consistent = true;
    return rep;
}

int holder_stride(const DomainSpec& d, std::size_t max_pairs)
{
    for (int s = 1;; ++s) {
        const std::size_t ni = static_cast<std::size_t>((d.Nu - 2) / s + 1);
        const std::size_t nj = static_cast<std::size_t>((d.Ntheta - 1) / s + 1);
        const std::size_t n = ni * nj;
        if (n * (n - 1) / 2 <= max_pairs || s >= std::max(d.Nu, d.Ntheta))
            return s;
    }
}

double weighted_holder_norm(const AxiField& f, double k, double beta, HolderVariant variant,
                            const HolderOptions& opts)
{
    if (!(beta > 0.0 && beta < 1.0)) {
        const double clipped = std::clamp(std::isfinite(beta) ? beta : 0.5, 1e-3, 0.999);
        std::ostringstream os;
        os << "Holder exponent " << beta << " outside (0, 1); using " << clipped;
        warn(os.str());
        beta = clipped;
    }
    const DomainSpec& d = f.domain();
    const int s = holder_stride(d, opts.max_pairs);
    struct Pt {
        double r, z, u, v;
    };
    std::vector<Pt> pts;
    // Lattice rows counted from the outer boundary so that u = R is always kept.
    for (int i = d.Nu - 1; i >= 1; i -= s)
        for (int j = 0; j < d.Ntheta; j += s)
            pts.push_back({d.r(i, j), d.z(i, j), d.u(i), f(i, j)});

    double sup = 0.0;
    for (const auto& a : pts)
        sup = std::max(sup, std::pow(a.u, k) * std::abs(a.v));

    const double kb = k + beta;
    std::vector<double> wpow(pts.size());
    for (std::size_t a = 0; a < pts.size(); ++a)
        wpow[a] = std::pow(pts[a].u, kb);
    const long n = static_cast<long>(pts.size());
    double semi = 0.0;
#if defined(ROTSTAR_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic, 16) reduction(max : semi)
#endif
    for (long a = 0; a < n; ++a)
        for (long b = a + 1; b < n; ++b) {
            const double dist = std::pow(std::hypot(pts[a].r - pts[b].r, pts[a].z - pts[b].z), beta);
            if (dist == 0.0)
                continue;
            double num;
            if (variant == HolderVariant::Parenthesis)
                num = std::abs(wpow[a] * pts[a].v - wpow[b] * pts[b].v);
            else
                num = std::min(wpow[a], wpow[b]) * std::abs(pts[a].v - pts[b].v);
            semi = std::max(semi, num / dist);
        }
    return sup + semi;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0 && y[k] > 0.0))
            continue;
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2)
        throw DomainError("log-log fit needs at least two positive points");
    const double den = n * sxx - sx * sx;
    if (den == 0.0)
        throw DomainError("log-log fit with coincident abscissae");
    return (n * sxy - sx * sy) / den;
}

ScalingTable entropy_scaling_check(const std::vector<double>& t, const std::vector<AxiField>& S)
{
    if (t.size() != S.size())
        throw DomainError("entropy_scaling_check: parameter and field counts differ");
    const auto positive = std::count_if(t.begin(), t.end(), [](double x) { return x > 0.0; });
    if (positive < 3)
        throw DomainError("entropy_scaling_check needs at least three points with t > 0");
    ScalingTable tab;
    std::vector<double> xs, ys, cs;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const AxiField dev = S[k] - AxiField(S[k].domain(), 1.0);
        ScalingRow row{t[k], dev.max_abs(), c1_norm(dev)};
        tab.rows.push_back(row);
        if (t[k] > 0.0) {
            xs.push_back(t[k]);
            ys.push_back(row.sup);
            cs.push_back(row.c1);
        }
    }
    tab.slope_sup = loglog_slope(xs, ys);
    tab.slope_c1 = loglog_slope(xs, cs);
    return tab;
}

double observed_order(double e_coarse, double e_fine, double refinement)
{
    return std::log(e_coarse / e_fine) / std::log(refinement);
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& e)
{
    return loglog_slope(h, e);
}

} // namespace rotstar
