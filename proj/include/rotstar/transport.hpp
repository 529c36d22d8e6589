#pragma once

// Entropy transport S_r V_z - S_z V_r = -kappa (omega^2 r)_z, solved by
// tracing the level curves of V from each node back to the equator.

#include "rotstar/core_model.hpp"

#include <array>
#include <vector>

namespace rotstar {

struct CharTrace {
    double tau = 0.0;             ///< foot-point radius on z = 0
    double t_len = 0.0;           ///< parameter length from the foot to the start
    double source_integral = 0.0; ///< int (omega^2 r)_z dt along the path
    long steps = 0;
    bool exited = false;          ///< left B_R before reaching the equator
    double v_drift = 0.0;         ///< max |V(path) - V(start)| at accepted steps
};

/// Backward trace from (r, z): d(r, z)/ds = (-V_z, V_r) until z = 0, with
/// the velocity taken from the interpolant of V. prof may be null, in which
/// case the source integral is not accumulated. If path is given, the
/// accepted step points are appended to it.
CharTrace trace_back(double r, double z, const FieldInterpolator& V, const Profiles* prof,
                     double tol, std::vector<std::array<double, 2>>* path = nullptr,
                     long max_steps = 1000000);

struct TransportOptions {
    double tol = 1e-11;       ///< absolute and relative step tolerance
    double eps_axis = 1e-3;   ///< nodes with u < eps_axis R take the center value
    long max_steps = 1000000; ///< per trace
    /// Optional reference state for the near-circularity guard
    /// ||V - V_ref|| <= guard; violations warn.
    const AxiField* reference = nullptr;
    double guard = 0.0;
};

struct EntropySolution {
    AxiField S;
    AxiField tau;        ///< foot radius per node (the node radius where clamped)
    double max_v_drift = 0.0;
    long exited = 0;
    long total_steps = 0;
};

/// Traces every node with eps_axis R <= u <= R1. Throws InvariantViolation if
/// the resulting S is not strictly positive.
EntropySolution solve_entropy_detailed(const AxiField& V, const PhysicalParams& p,
                                       const Profiles& prof, const TransportOptions& opts = {});

AxiField solve_entropy(const AxiField& V, const PhysicalParams& p, const Profiles& prof,
                       const TransportOptions& opts = {});

struct FieldNorms {
    AxiField field;
    double sup = 0.0;
    double l2 = 0.0;
};

/// S_r V_z - S_z V_r + kappa (omega^2 r)_z by grid differences.
FieldNorms entropy_residual(const AxiField& S, const AxiField& V, const PhysicalParams& p,
                            const Profiles& prof);

struct JacobianReport {
    double min_abs_vr = 0.0;  ///< min |V_r(tau, 0)| over the sampled feet
    double max_vr = 0.0;      ///< largest V_r(tau, 0); must be negative
    double min_gap = 0.0;     ///< smallest distance between neighbouring forward traces
    int samples = 0;
    bool fold = false;
};

/// Checks V_r(tau, 0) < 0 on equator nodes with 0 < tau <= R1, and that
/// forward traces from neighbouring feet keep a positive distance.
JacobianReport jacobian_check(const AxiField& V, int max_traces = 24, double tol = 1e-10);

} // namespace rotstar
