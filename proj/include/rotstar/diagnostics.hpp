#pragma once

// Checks on computed states: the full momentum balance, the curl equation,
// the Poincare-Wavre dichotomy, weighted Holder norms and refinement orders.

#include "rotstar/core_model.hpp"

#include <limits>
#include <vector>

namespace rotstar {

struct ResidualReport {
    double W_sup = 0.0;
    double W_l2 = 0.0;
    double curl_sup = 0.0;     ///< |S_r V_z - S_z V_r + kappa (omega^2 r)_z|
    double mass_err = 0.0;     ///< |int rho - M|, zero when M is not supplied
    double pw_cross_sup = 0.0; ///< |s_r rho_z - s_z rho_r| on the fluid domain
    double tangential_sup = 0.0; ///< tangential W on u = R
    double grid_order = std::numeric_limits<double>::quiet_NaN();
};

/// W = S grad V - grad U - kappa omega^2 r e_r with U the potential of
/// V_+^q / S, differentiated with grad_rz. Norms are taken over u <= R1.
/// The curl residual excludes u < curl_inner * R, where the trace map is
/// singular and S is only Holder continuous.
ResidualReport momentum_residual(const AxiField& V, const AxiField& S, double alpha,
                                 const PhysicalParams& p, const Profiles& prof,
                                 double M = std::numeric_limits<double>::quiet_NaN(),
                                 double curl_inner = 0.05);

/// Cheaper form used inside the iteration when U is already known.
double momentum_sup(const AxiField& V, const AxiField& S, const AxiField& U,
                    const PhysicalParams& p, const Profiles& prof);

struct PoincareWavreReport {
    double defect = 0.0;        ///< sup |s_r rho_z - s_z rho_r| where rho > 0
    double source_sup = 0.0;    ///< sup |kappa (omega^2 r)_z| where rho > 0
    bool barotropic_profile = false;
    /// r-only rotation: defect <= tol. Otherwise, for mu = 0 and kappa > 0:
    /// both quantities exceed 10 tol.
    bool consistent = false;
};

PoincareWavreReport poincare_wavre(const AxiField& V, const AxiField& S, const PhysicalParams& p,
                                   const Profiles& prof, double tol = 1e-8);

enum class HolderVariant { Parenthesis, Bracket };

struct HolderOptions {
    std::size_t max_pairs = 1000000;
};

/// Discrete ||f||_{C^{0,beta}_{(k)}} or ||f||_{C^{0,beta}_{[k]}} over node pairs
/// of a subsampled lattice on the meridional quarter plane. The origin node
/// is excluded. beta outside (0, 1) is clipped with a warning.
///   (k): sup |x|^k |f| + sup ||x|^{k+b} f(x) - |y|^{k+b} f(y)| / |x-y|^b
///   [k]: sup |x|^k |f| + sup min(|x|,|y|)^{k+b} |f(x) - f(y)| / |x-y|^b
double weighted_holder_norm(const AxiField& f, double k, double beta = 0.5,
                            HolderVariant variant = HolderVariant::Parenthesis,
                            const HolderOptions& opts = {});

/// Lattice stride so that the sampled pair count stays within max_pairs.
int holder_stride(const DomainSpec& d, std::size_t max_pairs);

struct ScalingRow {
    double t = 0.0;
    double sup = 0.0; ///< |S - 1|_inf
    double c1 = 0.0;  ///< discrete C^1 norm of S - 1
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    double slope_sup = 0.0; ///< least-squares log-log slope of sup against t
    double slope_c1 = 0.0;
};

/// Needs at least three points with t > 0 (DomainError otherwise); t = 0 rows
/// are kept in the table but left out of the fit.
ScalingTable entropy_scaling_check(const std::vector<double>& t, const std::vector<AxiField>& S);

/// log(e_coarse / e_fine) / log(refinement).
double observed_order(double e_coarse, double e_fine, double refinement = 2.0);

/// Least-squares slope of log e against log h.
double fitted_order(const std::vector<double>& h, const std::vector<double>& e);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace rotstar
