#pragma once

// The frozen linearization Lambda = I - DF at the Lane-Emden state, one
// dense radial block per even Legendre mode. The alpha unknown couples to the
// l = 0 block through a constant column and the mass-derivative row.

#include "rotstar/core_model.hpp"
#include "rotstar/lane_emden.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace rotstar {

struct LambdaBlocks {
    DomainSpec domain;
    double q = 2.0;
    int Lmax = 0;
    /// Radial base samples V0(u_i) the blocks were built from.
    std::vector<double> base;
    /// blocks[m] is the block for l = 2m; blocks[0] is (Nu+1) x (Nu+1) with the
    /// alpha unknown last.
    std::vector<Eigen::MatrixXd> blocks;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu;
    /// Singular values per block, descending.
    std::vector<Eigen::VectorXd> singular_values;
};

/// Builds Lambda from radial samples of the base profile (Nu values).
/// Warns when |q - 3| < 1e-3 or when a block has sigma_min < 1e-6 sigma_max;
/// throws DomainError if a block cannot be factorized.
LambdaBlocks assemble_lambda(const std::vector<double>& base_samples, double q, const DomainSpec& d);
LambdaBlocks assemble_lambda(const LaneEmdenSolution& base, const DomainSpec& d);

/// Lambda (dV, dalpha). Modes above Lmax pass through unchanged.
std::pair<AxiField, double> apply_lambda(const LambdaBlocks& L, const AxiField& dV, double dalpha);

/// Lambda^{-1} (rhsV, rhs_alpha). Throws DomainError if rhsV carries odd-in-z
/// content above 1e-10 or lives on another grid.
std::pair<AxiField, double> solve_lambda(const LambdaBlocks& L, const AxiField& rhsV, double rhs_alpha);

/// U = (2/(q-1)) V0 + u V0', the generator of the scaling family.
AxiField scaling_direction(const LaneEmdenSolution& base, const DomainSpec& d);

/// q int (V0)_+^{q-1} U dx by quadrature on the dense base profile, and its
/// predicted value (3-q)/(q-1) M.
std::pair<double, double> mass_derivative_identity(const LaneEmdenSolution& base);

struct SigmaReport {
    double min = 0.0;
    int argmin_l = 0;
    std::vector<double> per_block; ///< sigma_min for l = 0, 2, ...
    std::vector<double> condition; ///< sigma_max / sigma_min per block
};

SigmaReport lambda_sigma_min(const LambdaBlocks& L);

} // namespace rotstar
