#include "rotstar/linearized.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/potential.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rotstar {

LambdaBlocks assemble_lambda(const std::vector<double>& base_samples, double q, const DomainSpec& d)
{
    if (static_cast<int>(base_samples.size()) != d.Nu)
        throw DomainError("assemble_lambda: base profile size does not match the grid");
    if (std::abs(q - 3.0) < 1e-3)
        warn("linearizing at the mass-critical index q = 3 (gamma = 4/3): the l = 0 block is nearly singular");

    LambdaBlocks L;
    L.domain = d;
    L.q = q;
    L.Lmax = d.Lmax;
    L.base = base_samples;
    const int N = d.Nu;
    Eigen::VectorXd wq(N);
    for (int k = 0; k < N; ++k) {
        const double v = base_samples[k];
        wq[k] = v > 0.0 ? q * std::pow(v, q - 1.0) : 0.0;
    }
    const auto rw = radial_moment_weights(d, 2);

    for (int l = 0; l <= d.Lmax; l += 2) {
        const Eigen::MatrixXd K = mode_kernel_matrix(d, l);
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(N, N) - K * wq.asDiagonal();
        if (l == 0) {
            Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N + 1, N + 1);
            B.topLeftCorner(N, N) = A;
            B.topRightCorner(N, 1).setConstant(-1.0);
            for (int k = 0; k < N; ++k)
                B(N, k) = -4.0 * kPi * rw[k] * wq[k];
            A = std::move(B);
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
        const Eigen::VectorXd sv = svd.singularValues();
        const double smin = sv[sv.size() - 1], smax = sv[0];
        if (!(smin > 0.0)) {
            std::ostringstream os;
            os << "Lambda block l = " << l << " is singular; gamma = 4/3 (q = 3) is excluded";
            throw DomainError(os.str());
        }
        if (smin < 1e-6 * smax) {
            std::ostringstream os;
            os << "Lambda block l = " << l << " is nearly degenerate: sigma_min/sigma_max = " << smin / smax;
            warn(os.str());
        }
        L.singular_values.push_back(sv);
        L.lu.emplace_back(A);
        L.blocks.push_back(std::move(A));
    }
    return L;
}

LambdaBlocks assemble_lambda(const LaneEmdenSolution& base, const DomainSpec& d)
{
    std::vector<double> v(static_cast<std::size_t>(d.Nu));
    for (int i = 0; i < d.Nu; ++i)
        v[i] = eval_V0(base, d.u(i)).first;
    return assemble_lambda(v, base.q, d);
}

namespace {

void check_grid(const LambdaBlocks& L, const AxiField& f)
{
    if (!(f.domain() == L.domain))
        throw DomainError("Lambda: field lives on a different grid");
}

/// Synthesizes modes and restores the single origin value (monopole only).
AxiField synthesize_with_origin(const LegendreModes& m, const DomainSpec& d)
{
    AxiField f = legendre_synthesize(m, d);
    for (int j = 0; j < d.Ntheta; ++j)
        f(0, j) = m(0, 0);
    return f;
}

} // namespace

std::pair<AxiField, double> apply_lambda(const LambdaBlocks& L, const AxiField& dV, double dalpha)
{
    check_grid(L, dV);
    const DomainSpec& d = L.domain;
    const int N = d.Nu;
    const LegendreModes in = legendre_analyze(dV, L.Lmax);
    AxiField high = dV - synthesize_with_origin(in, d);
    LegendreModes out(L.Lmax, N);
    double alpha_out = 0.0;
    for (int m = 0; m < in.count(); ++m) {
        if (m == 0) {
            Eigen::VectorXd x(N + 1);
            x.head(N) = in.matrix().row(0).transpose();
            x[N] = dalpha;
            const Eigen::VectorXd y = L.blocks[0] * x;
            out.matrix().row(0) = y.head(N).transpose();
            alpha_out = y[N];
        } else {
            out.matrix().row(m) = (L.blocks[m] * in.matrix().row(m).transpose()).transpose();
        }
    }
    return {synthesize_with_origin(out, d) + high, alpha_out};
}

std::pair<AxiField, double> solve_lambda(const LambdaBlocks& L, const AxiField& rhsV, double rhs_alpha)
{
    check_grid(L, rhsV);
    if (rhsV.odd_content() > 1e-10) {
        std::ostringstream os;
        os << "Lambda right-hand side has odd-in-z content " << rhsV.odd_content() << " > 1e-10";
        throw DomainError(os.str());
    }
    const DomainSpec& d = L.domain;
    const int N = d.Nu;
    const LegendreModes in = legendre_analyze(rhsV, L.Lmax);
    AxiField high = rhsV - synthesize_with_origin(in, d);
    LegendreModes out(L.Lmax, N);
    double alpha_out = 0.0;
    for (int m = 0; m < in.count(); ++m) {
        if (m == 0) {
            Eigen::VectorXd b(N + 1);
            b.head(N) = in.matrix().row(0).transpose();
            b[N] = rhs_alpha;
            const Eigen::VectorXd x = L.lu[0].solve(b);
            out.matrix().row(0) = x.head(N).transpose();
            alpha_out = x[N];
        } else {
            out.matrix().row(m) = L.lu[m].solve(in.matrix().row(m).transpose()).transpose();
        }
    }
    return {synthesize_with_origin(out, d) + high, alpha_out};
}

AxiField scaling_direction(const LaneEmdenSolution& base, const DomainSpec& d)
{
    const double c = 2.0 / (base.q - 1.0);
    return AxiField::radial(d, [&](double u) {
        const auto [v, dv] = eval_V0(base, u);
        return c * v + u * dv;
    });
}

std::pair<double, double> mass_derivative_identity(const LaneEmdenSolution& base)
{
    const double q = base.q;
    const double c = 2.0 / (q - 1.0);
    const double lhs = radial_integral(base, [&](double u, double v, double dv) {
        return v > 0.0 ? q * std::pow(v, q - 1.0) * (c * v + u * dv) : 0.0;
    });
    return {lhs, (3.0 - q) / (q - 1.0) * base.M};
}

SigmaReport lambda_sigma_min(const LambdaBlocks& L)
{
    SigmaReport rep;
    rep.min = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < L.singular_values.size(); ++m) {
        const auto& sv = L.singular_values[m];
        const double smin = sv[sv.size() - 1];
        rep.per_block.push_back(smin);
        rep.condition.push_back(sv[0] / smin);
        if (smin < rep.min) {
            rep.min = smin;
            rep.argmin_l = 2 * static_cast<int>(m);
        }
    }
    return rep;
}

} // namespace rotstar
