#pragma once

// Finite-volume discretization of div(S grad V) on the quarter ball with
// symmetry closure on the axis and the equator and Dirichlet data on u = R.

#include "rotstar/core_model.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <memory>
#include <span>
#include <vector>

namespace rotstar {

/// Control volumes are the cells [u_i -+ h/2] x [theta_j -+ dtheta/2] clipped
/// to the quarter ball; the origin cell is the ball of radius h/2. Face
/// coefficients use the arithmetic mean of S at the two adjacent nodes. The
/// volume-weighted matrix is symmetric and negative definite.
///
/// Unknowns: the origin, then nodes i = 1..Nu-2 for every j. Boundary nodes
/// i = Nu-1 carry Dirichlet data.
class EllipticOperator {
public:
    using SpMat = Eigen::SparseMatrix<double>;

    /// Throws DomainError if S <= 0 at any node.
    static EllipticOperator assemble(const AxiField& S);

    const DomainSpec& domain() const { return dom_; }
    int unknowns() const { return static_cast<int>(vol_.size()); }
    /// Unknown index of node (i, j), or -1 on the Dirichlet boundary.
    int unknown(int i, int j) const;

    /// Volume-weighted interior matrix (flux sums).
    const SpMat& matrix() const { return A_; }
    std::span<const double> volumes() const { return vol_; }

    /// div(S grad V) at the unknown nodes (the origin row repeated across j),
    /// using V's own boundary values. Boundary rows are zero.
    AxiField apply(const AxiField& V) const;

    /// Solves div(S grad V) = rhs with V = bdata[j] on u = R.
    AxiField solve_dirichlet(const AxiField& rhs, std::span<const double> bdata) const;

    /// max |A V - vol rhs - lift| / max |vol rhs + lift|: the relative
    /// backward residual of the discrete system.
    double residual(const AxiField& V, const AxiField& rhs) const;

private:
    struct Link {
        std::size_t a, b; ///< storage indices of the two nodes
        double c;         ///< face coefficient: flux = c (V_b - V_a) out of a
    };

    Eigen::VectorXd lifted_rhs(const AxiField& rhs, std::span<const double> bdata) const;

    DomainSpec dom_;
    std::vector<Link> links_;
    std::vector<double> vol_;
    SpMat A_;
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> factor_;
};

inline EllipticOperator assemble(const AxiField& S) { return EllipticOperator::assemble(S); }

inline AxiField solve_dirichlet(const EllipticOperator& op, const AxiField& rhs,
                                std::span<const double> bdata)
{
    return op.solve_dirichlet(rhs, bdata);
}

/// kappa div(omega^2 r e_r) = kappa (2 omega^2 + r d(omega^2)/dr) at every
/// node, from the closed-form profile gradient. On the axis this is the
/// removable limit 2 kappa omega^2(0, z).
AxiField divergence_source(const Profiles& prof, double kappa, const DomainSpec& d);

} // namespace rotstar
