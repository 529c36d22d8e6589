#include "rotstar/iteration.hpp"
#include "rotstar/diagnostics.hpp"
#include "rotstar/potential.hpp"
#include "rotstar/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rotstar {

namespace {

void refuse_mass_critical(const PhysicalParams& p)
{
    if (p.mass_critical)
        throw DomainError("gamma = 4/3 is the mass-critical index: every Lane-Emden solution has the "
                          "same mass, the linearization is singular and the problem is excluded");
}

/// Radial Newton for the discrete fixed point V = K_0[V_+^q] + alpha with
/// mass M. The Jacobian is recomputed every step, so convergence is quadratic.
std::pair<Eigen::VectorXd, double> discrete_base(const LaneEmdenSolution& sol, const DomainSpec& d)
{
    const int N = d.Nu;
    const double q = sol.q;
    const Eigen::MatrixXd K = mode_kernel_matrix(d, 0);
    const auto w = radial_moment_weights(d, 2);
    Eigen::VectorXd v(N);
    for (int i = 0; i < N; ++i)
        v[i] = eval_V0(sol, d.u(i)).first;
    double a = sol.alpha0;
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd rho(N), dq(N);
        for (int i = 0; i < N; ++i) {
            const double vp = std::max(v[i], 0.0);
            rho[i] = std::pow(vp, q);
            dq[i] = vp > 0.0 ? q * std::pow(vp, q - 1.0) : 0.0;
        }
        double mass = 0.0;
        for (int i = 0; i < N; ++i)
            mass += 4.0 * kPi * w[i] * rho[i];
        Eigen::VectorXd g(N + 1);
        g.head(N) = v - K * rho - Eigen::VectorXd::Constant(N, a);
        g[N] = sol.M - mass;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N + 1, N + 1);
        J.topLeftCorner(N, N) = Eigen::MatrixXd::Identity(N, N) - K * dq.asDiagonal();
        J.topRightCorner(N, 1).setConstant(-1.0);
        for (int k = 0; k < N; ++k)
            J(N, k) = -4.0 * kPi * w[k] * dq[k];
        const Eigen::VectorXd dx = J.partialPivLu().solve(g);
        v -= dx.head(N);
        a -= dx[N];
        if (dx.cwiseAbs().maxCoeff() < 1e-15 * std::max(1.0, std::abs(a)))
            return {v, a};
    }
    throw NonConvergenceError("discrete Lane-Emden base state did not converge");
}

void check_support(const AxiField& V)
{
    const DomainSpec& d = V.domain();
    const double lim = d.plateau_radius();
    for (int i = 0; i < d.Nu; ++i) {
        if (d.u(i) < lim)
            continue;
        for (int j = 0; j < d.Ntheta; ++j)
            if (V(i, j) > 0.0) {
                std::ostringstream os;
                os << "V > 0 at u = " << d.u(i) << " >= (R0 + R)/2 = " << lim
                   << ": the fluid domain escaped the cutoff plateau";
                throw InvariantViolation(os.str());
            }
    }
}

bool is_unit(const AxiField& S)
{
    return std::all_of(S.values().begin(), S.values().end(), [](double x) { return x == 1.0; });
}

} // namespace

BaseState build_base(const PhysicalParams& p, const GridSpec& g)
{
    refuse_mass_critical(p);
    BaseState b;
    b.params = p;
    b.sol = solve_lane_emden(p.q);
    b.domain = domain_for(b.sol, g.Nu, g.Ntheta, g.Lmax, g.R_over_R0);
    b.M = b.sol.M;
    const auto [v, a] = discrete_base(b.sol, b.domain);
    const DomainSpec& d = b.domain;
    b.V0 = AxiField(d);
    std::vector<double> samples(static_cast<std::size_t>(d.Nu));
    for (int i = 0; i < d.Nu; ++i) {
        samples[i] = v[i];
        b.sample_gap = std::max(b.sample_gap, std::abs(v[i] - eval_V0(b.sol, d.u(i)).first));
        for (int j = 0; j < d.Ntheta; ++j)
            b.V0(i, j) = v[i];
    }
    b.alpha0 = a;
    b.lambda = assemble_lambda(samples, p.q, d);
    b.laplacian = std::make_shared<const EllipticOperator>(EllipticOperator::assemble(AxiField(d, 1.0)));
    return b;
}

double mass_error(const AxiField& V, const AxiField& S, double q, double M)
{
    return std::abs(total_integral(density(V, S, q)) - M);
}

FResult F_map(const BaseState& b, const AxiField& V, double alpha, const PhysicalParams& p,
              const Profiles& prof, const FOptions& opts)
{
    const DomainSpec& d = V.domain();
    if (!(d == b.domain))
        throw DomainError("F_map: field and base state live on different grids");
    FResult out;
    if (p.kappa == 0.0 && p.mu == 0.0) {
        out.S = AxiField(d, 1.0);
    } else {
        if (opts.check_folds && jacobian_check(V).fold)
            throw InvariantViolation("level curves of V fold (V_r >= 0 on the equator or crossing "
                                     "traces): state rejected");
        TransportOptions t;
        t.tol = opts.trace_tol;
        t.reference = &b.V0;
        t.guard = opts.guard;
        out.S = solve_entropy(V, p, prof, t);
    }
    const AxiField rho = density(V, out.S, p.q);
    out.U = newtonian_potential(rho);
    const auto trace = potential_boundary_trace(rho);

    const bool unit = is_unit(out.S);
    const EllipticOperator op = unit ? *b.laplacian : EllipticOperator::assemble(out.S);
    AxiField rhs = unit ? AxiField(d, 0.0) : b.laplacian->apply(out.U) - op.apply(out.U);
    if (p.kappa != 0.0)
        rhs += divergence_source(prof, p.kappa, d);
    std::vector<double> zb(static_cast<std::size_t>(d.Ntheta));
    for (int j = 0; j < d.Ntheta; ++j)
        zb[j] = trace[j] - out.U(d.Nu - 1, j);
    const AxiField Z = op.solve_dirichlet(rhs, zb);
    out.V = out.U + Z + AxiField(d, alpha);
    out.mass = total_integral(rho);
    out.mass_err = std::abs(out.mass - b.M);
    out.alpha = alpha + out.mass - b.M;
    return out;
}

NewtonResult newton_solve(const BaseState& b, const PhysicalParams& p, const Profiles& prof,
                          const NewtonOptions& opts, const std::optional<IterationState>& start)
{
    refuse_mass_critical(p);
    if (std::abs(p.gamma - b.params.gamma) > 1e-14)
        throw DomainError("newton_solve: gamma differs from the base state's");
    if (p.kappa + p.mu > opts.max_intensity) {
        std::ostringstream os;
        os << "kappa + mu = " << p.kappa + p.mu << " exceeds the admissible bound "
           << opts.max_intensity << " (an empirical limit of the perturbative regime)";
        throw DomainError(os.str());
    }

    AxiField V = start ? start->V : b.V0;
    double alpha = start ? start->alpha : b.alpha0;
    check_support(V);
    FResult F = F_map(b, V, alpha, p, prof, opts.F);

    IterationHistory hist;
    double prev_diff = std::numeric_limits<double>::infinity();
    double prev_c1 = std::numeric_limits<double>::quiet_NaN();
    int growth = 0;
    for (int n = 1; n <= opts.max_steps; ++n) {
        const auto [dV, da] = solve_lambda(b.lambda, V - F.V, alpha - F.alpha);
        V -= dV;
        alpha -= da;
        check_support(V);

        StepRecord rec;
        rec.step = n;
        rec.dV_sup = dV.max_abs();
        rec.dalpha = std::abs(da);
        rec.c1_diff = c1_norm(dV);
        rec.ratio = n > 1 ? rec.c1_diff / prev_c1 : std::numeric_limits<double>::quiet_NaN();

        F = F_map(b, V, alpha, p, prof, opts.F);
        rec.mass_err = F.mass_err;
        rec.W_sup = momentum_sup(V, F.S, F.U, p, prof);
        const AxiField dev = V - b.V0;
        rec.high_norm = dev.max_abs() + second_difference_norm(dev);
        hist.steps.push_back(rec);

        const double diff = rec.dV_sup + rec.dalpha;
        if (diff <= opts.tol) {
            hist.fixed_point_residual = (V - F.V).max_abs() + std::abs(alpha - F.alpha);
            NewtonResult res;
            res.state = IterationState{V, alpha, F.S, n};
            res.history = std::move(hist);
            res.mass = F.mass;
            return res;
        }
        growth = diff > prev_diff ? growth + 1 : 0;
        if (growth >= 3) {
            std::ostringstream os;
            os << "Newton differences grew for 3 consecutive steps (last " << diff << " at step " << n
               << "); kappa = " << p.kappa << ", mu = " << p.mu << " are too large";
            throw NewtonDivergence(os.str(), std::move(hist));
        }
        prev_diff = diff;
        prev_c1 = rec.c1_diff;
    }
    std::ostringstream os;
    os << "Newton iteration did not reach tol = " << opts.tol << " in " << opts.max_steps << " steps";
    throw NewtonStall(os.str(), std::move(hist));
}

SweepReport sweep(const BaseState& b, const std::vector<double>& kappas,
                  const std::vector<double>& mus, double gamma, const Profiles& prof,
                  const NewtonOptions& opts)
{
    SweepReport rep;
    const AxiField rho0 = density(b.V0, AxiField(b.domain, 1.0), b.params.q);
    for (double k : kappas)
        for (double m : mus) {
            SweepPoint pt;
            pt.kappa = k;
            pt.mu = m;
            try {
                const auto p = PhysicalParams::make(gamma, k, m);
                NewtonResult r = newton_solve(b, p, prof, opts);
                pt.dV_sup = (r.state.V - b.V0).max_abs();
                pt.drho_sup = (density(r.state.V, r.state.S, p.q) - rho0).max_abs();
                pt.dS_sup = (r.state.S - AxiField(b.domain, 1.0)).max_abs();
                rep.max_mass_spread = std::max(rep.max_mass_spread, std::abs(r.mass - b.M) / b.M);
                pt.result = std::move(r);
                pt.ok = true;
            } catch (const std::exception& e) {
                pt.error = e.what();
            }
            rep.points.push_back(std::move(pt));
        }

    std::vector<const SweepPoint*> ok;
    for (const auto& pt : rep.points)
        if (pt.ok)
            ok.push_back(&pt);
    std::stable_sort(ok.begin(), ok.end(), [](const SweepPoint* a, const SweepPoint* c) {
        return a->kappa + a->mu > c->kappa + c->mu;
    });
    for (std::size_t k = 1; k < ok.size(); ++k)
        if (ok[k]->drho_sup > ok[k - 1]->drho_sup + 1e-14)
            rep.monotone = false;
    return rep;
}

} // namespace rotstar
