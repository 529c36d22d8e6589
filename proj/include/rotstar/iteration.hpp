#pragma once

// The fixed-point map F(V, alpha) = (V#, alpha#) and the frozen-Jacobian
// Newton iteration around the discrete Lane-Emden state.

#include "rotstar/core_model.hpp"
#include "rotstar/elliptic.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/lane_emden.hpp"
#include "rotstar/linearized.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rotstar {

struct GridSpec {
    int Nu = 128;
    int Ntheta = 64;
    int Lmax = 16;
    double R_over_R0 = 1.5;

    bool operator==(const GridSpec&) const = default;
};

/// Everything that stays fixed during a run: the radial Lane-Emden solution,
/// the grid, the discrete base state and the frozen linearization built on it.
///
/// The discrete base (V0, alpha0) is the exact fixed point of the discrete map
/// at kappa = mu = 0 with the mass M of the radial solution. It differs from
/// the sampled ODE profile by the quadrature error.
struct BaseState {
    PhysicalParams params;
    LaneEmdenSolution sol;
    DomainSpec domain;
    AxiField V0;
    double alpha0 = 0.0;
    double M = 0.0;
    /// max |V0 - sampled ODE profile|
    double sample_gap = 0.0;
    LambdaBlocks lambda;
    std::shared_ptr<const EllipticOperator> laplacian; ///< S == 1 operator
};

/// Throws DomainError at the mass-critical index.
BaseState build_base(const PhysicalParams& p, const GridSpec& g = {});

struct FOptions {
    double trace_tol = 1e-11;
    /// Warn when |V - V0| exceeds this (the characteristics then need not be
    /// near-circular).
    double guard = 0.05;
    bool check_folds = true;
};

struct FResult {
    AxiField V;     ///< V#
    double alpha = 0.0;
    AxiField S;     ///< entropy solved along the level curves of the input V
    AxiField U;     ///< potential of V_+^q / S
    double mass = 0.0;
    double mass_err = 0.0; ///< |int V_+^q/S - M|
};

/// |int V_+^q / S - M|, the mass check used everywhere.
double mass_error(const AxiField& V, const AxiField& S, double q, double M);

/// One application of F. The elliptic problem is solved for the correction
/// Z = V# - U - alpha:
///   div(S grad Z) = Lap_h U - div_h(S grad U) + kappa div(omega^2 r e_r),
///   Z = trace - U on u = R,
/// which is F's equation with -4 pi rho discretized as Lap_h U.
/// Throws InvariantViolation on a characteristic fold or S <= 0.
FResult F_map(const BaseState& b, const AxiField& V, double alpha, const PhysicalParams& p,
              const Profiles& prof, const FOptions& opts = {});

struct NewtonOptions {
    double tol = 1e-10;
    int max_steps = 50;
    /// Empirical admissibility bound on kappa + mu.
    double max_intensity = 1e-2;
    FOptions F;
};

struct IterationState {
    AxiField V;
    double alpha = 0.0;
    AxiField S;
    int step = 0;
};

struct StepRecord {
    int step = 0;
    double dV_sup = 0.0;   ///< |V_{n+1} - V_n|_inf
    double dalpha = 0.0;   ///< |alpha_{n+1} - alpha_n|
    double c1_diff = 0.0;  ///< discrete C^1 norm of V_{n+1} - V_n
    double ratio = 0.0;    ///< c1_diff / previous c1_diff (NaN at step 1)
    double mass_err = 0.0; ///< at the new state
    double W_sup = 0.0;    ///< momentum residual at the new state
    double high_norm = 0.0; ///< |V - V0|_inf + second-difference norm of V - V0
};

struct IterationHistory {
    std::vector<StepRecord> steps;
    double fixed_point_residual = 0.0; ///< |V - F_V|_inf + |alpha - F_alpha| at exit
};

struct NewtonResult {
    IterationState state;
    IterationHistory history;
    double mass = 0.0;
};

/// Raised with the history so far when the differences grow three times in a
/// row.
class NewtonDivergence : public DivergenceError {
public:
    NewtonDivergence(const std::string& what, IterationHistory h)
        : DivergenceError(what), history(std::move(h)) {}
    IterationHistory history;
};

class NewtonStall : public NonConvergenceError {
public:
    NewtonStall(const std::string& what, IterationHistory h)
        : NonConvergenceError(what), history(std::move(h)) {}
    IterationHistory history;
};

/// Iterates (V, alpha) <- (V, alpha) - Lambda^{-1}[(V, alpha) - F(V, alpha)]
/// from the discrete base, or from `start` when given. Stops when
/// |dV|_inf + |dalpha| <= tol.
NewtonResult newton_solve(const BaseState& b, const PhysicalParams& p, const Profiles& prof,
                          const NewtonOptions& opts = {},
                          const std::optional<IterationState>& start = std::nullopt);

struct SweepPoint {
    double kappa = 0.0;
    double mu = 0.0;
    bool ok = false;
    std::string error;
    std::optional<NewtonResult> result;
    double dV_sup = 0.0;   ///< |V - V0|_inf
    double drho_sup = 0.0; ///< |rho - rho0|_inf
    double dS_sup = 0.0;   ///< |S - 1|_inf
};

struct SweepReport {
    std::vector<SweepPoint> points;
    /// |rho - rho0| is non-increasing when the points are ordered by
    /// decreasing kappa + mu (successful points only).
    bool monotone = true;
    /// Largest |mass - M| / M over successful points.
    double max_mass_spread = 0.0;
};

/// Independent newton_solve per (kappa, mu) pair in the Cartesian product;
/// failures are recorded and the sweep continues.
SweepReport sweep(const BaseState& b, const std::vector<double>& kappas,
                  const std::vector<double>& mus, double gamma, const Profiles& prof,
                  const NewtonOptions& opts = {});

} // namespace rotstar
