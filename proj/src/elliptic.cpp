#include "rotstar/elliptic.hpp"
#include "rotstar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rotstar {

namespace {

double cell_mu_width(const DomainSpec& d, int j)
{
    const double dt = d.dtheta();
    const double lo = j == 0 ? 1.0 : std::cos((j - 0.5) * dt);
    const double hi = j == d.Ntheta - 1 ? 0.0 : std::cos((j + 0.5) * dt);
    return lo - hi;
}

} // namespace

int EllipticOperator::unknown(int i, int j) const
{
    if (i == 0)
        return 0;
    if (i >= dom_.Nu - 1)
        return -1;
    return 1 + (i - 1) * dom_.Ntheta + j;
}

EllipticOperator EllipticOperator::assemble(const AxiField& S)
{
    const DomainSpec& d = S.domain();
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j)
            if (!(S(i, j) > 0.0)) {
                std::ostringstream os;
                os << "elliptic operator needs S > 0; S(" << i << "," << j << ") = " << S(i, j);
                throw DomainError(os.str());
            }

    EllipticOperator op;
    op.dom_ = d;
    const int Nt = d.Ntheta;
    const double h = d.h();
    const double dt = d.dtheta();
    auto idx = [Nt](int i, int j) { return static_cast<std::size_t>(i) * Nt + j; };
    auto mean = [&](int i0, int j0, int i1, int j1) { return 0.5 * (S(i0, j0) + S(i1, j1)); };

    const int n = 1 + (d.Nu - 2) * Nt;
    op.vol_.assign(static_cast<std::size_t>(n), 0.0);
    op.vol_[0] = std::pow(0.5 * h, 3) / 3.0;
    for (int i = 1; i <= d.Nu - 2; ++i) {
        const double lo = d.u(i) - 0.5 * h, hi = d.u(i) + 0.5 * h;
        for (int j = 0; j < Nt; ++j)
            op.vol_[op.unknown(i, j)] = (hi * hi * hi - lo * lo * lo) / 3.0 * cell_mu_width(d, j);
    }

    for (int j = 0; j < Nt; ++j) {
        const double m = cell_mu_width(d, j);
        op.links_.push_back({idx(0, 0), idx(1, j), 0.25 * h * h * m * mean(0, 0, 1, j) / h});
    }
    for (int i = 1; i <= d.Nu - 2; ++i) {
        const double up = d.u(i) + 0.5 * h;
        for (int j = 0; j < Nt; ++j) {
            const double m = cell_mu_width(d, j);
            op.links_.push_back({idx(i, j), idx(i + 1, j), up * up * m * mean(i, j, i + 1, j) / h});
            if (j + 1 < Nt) {
                const double sf = std::sin((j + 0.5) * dt);
                op.links_.push_back({idx(i, j), idx(i, j + 1), h * sf * mean(i, j, i, j + 1) / dt});
            }
        }
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(op.links_.size() * 4);
    for (const Link& L : op.links_) {
        const int ia = op.unknown(static_cast<int>(L.a / Nt), static_cast<int>(L.a % Nt));
        const int ib = op.unknown(static_cast<int>(L.b / Nt), static_cast<int>(L.b % Nt));
        trip.emplace_back(ia, ia, -L.c);
        if (ib >= 0) {
            trip.emplace_back(ib, ib, -L.c);
            trip.emplace_back(ia, ib, L.c);
            trip.emplace_back(ib, ia, L.c);
        }
    }
    op.A_.resize(n, n);
    op.A_.setFromTriplets(trip.begin(), trip.end());

    op.factor_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
    const SpMat neg = -op.A_;
    op.factor_->compute(neg);
    if (op.factor_->info() != Eigen::Success)
        throw std::runtime_error("elliptic operator factorization failed");
    return op;
}

AxiField EllipticOperator::apply(const AxiField& V) const
{
    if (!(V.domain() == dom_))
        throw DomainError("EllipticOperator::apply: grid mismatch");
    const int Nt = dom_.Ntheta;
    std::vector<double> acc(vol_.size(), 0.0);
    const auto v = V.values();
    for (const Link& L : links_) {
        const int ia = unknown(static_cast<int>(L.a / Nt), static_cast<int>(L.a % Nt));
        const int ib = unknown(static_cast<int>(L.b / Nt), static_cast<int>(L.b % Nt));
        const double flux = L.c * (v[L.b] - v[L.a]);
        acc[ia] += flux;
        if (ib >= 0)
            acc[ib] -= flux;
    }
    AxiField out(dom_);
    for (int j = 0; j < Nt; ++j)
        out(0, j) = acc[0] / vol_[0];
    for (int i = 1; i <= dom_.Nu - 2; ++i)
        for (int j = 0; j < Nt; ++j) {
            const int k = unknown(i, j);
            out(i, j) = acc[k] / vol_[k];
        }
    return out;
}

Eigen::VectorXd EllipticOperator::lifted_rhs(const AxiField& rhs, std::span<const double> bdata) const
{
    if (!(rhs.domain() == dom_) || static_cast<int>(bdata.size()) != dom_.Ntheta)
        throw DomainError("solve_dirichlet: dimension mismatch");
    const int Nt = dom_.Ntheta;
    Eigen::VectorXd b(unknowns());
    b[0] = vol_[0] * rhs(0, 0);
    for (int i = 1; i <= dom_.Nu - 2; ++i)
        for (int j = 0; j < Nt; ++j) {
            const int k = unknown(i, j);
            b[k] = vol_[k] * rhs(i, j);
        }
    for (const Link& L : links_) {
        const int ib = static_cast<int>(L.b / Nt);
        if (ib == dom_.Nu - 1) {
            const int ia = unknown(static_cast<int>(L.a / Nt), static_cast<int>(L.a % Nt));
            b[ia] -= L.c * bdata[L.b % Nt];
        }
    }
    return b;
}

AxiField EllipticOperator::solve_dirichlet(const AxiField& rhs, std::span<const double> bdata) const
{
    const Eigen::VectorXd b = lifted_rhs(rhs, bdata);
    const Eigen::VectorXd x = factor_->solve(-b);
    const int Nt = dom_.Ntheta;
    AxiField V(dom_);
    for (int j = 0; j < Nt; ++j) {
        V(0, j) = x[0];
        V(dom_.Nu - 1, j) = bdata[j];
    }
    for (int i = 1; i <= dom_.Nu - 2; ++i)
        for (int j = 0; j < Nt; ++j)
            V(i, j) = x[unknown(i, j)];
    return V;
}

double EllipticOperator::residual(const AxiField& V, const AxiField& rhs) const
{
    std::vector<double> bd(static_cast<std::size_t>(dom_.Ntheta));
    for (int j = 0; j < dom_.Ntheta; ++j)
        bd[j] = V(dom_.Nu - 1, j);
    const Eigen::VectorXd b = lifted_rhs(rhs, bd);
    Eigen::VectorXd x(unknowns());
    x[0] = V(0, 0);
    for (int i = 1; i <= dom_.Nu - 2; ++i)
        for (int j = 0; j < dom_.Ntheta; ++j)
            x[unknown(i, j)] = V(i, j);
    const Eigen::VectorXd r = A_ * x - b;
    const double scale = std::max(b.cwiseAbs().maxCoeff(), (A_ * x).cwiseAbs().maxCoeff());
    return scale == 0.0 ? r.cwiseAbs().maxCoeff() : r.cwiseAbs().maxCoeff() / scale;
}

AxiField divergence_source(const Profiles& prof, double kappa, const DomainSpec& d)
{
    AxiField f(d);
    if (kappa == 0.0)
        return f;
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j)
            f(i, j) = kappa * prof.centrifugal_divergence(d.r(i, j), d.z(i, j));
    return f;
}

} // namespace rotstar
