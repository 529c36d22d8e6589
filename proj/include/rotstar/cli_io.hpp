#pragma once

// Plain-text run configuration, solution files and the command-line driver.
//
// Solution directory layout (all CSV files: header row, LF endings):
//   V.csv S.csv rho.csv s.csv   "u_index,theta_index,value", row-major in (i, j)
//   history.csv                 one row per Newton step
//   summary.json                alpha, mass, mass_err, steps, residuals
//   meta.json                   format_version, code_version, gamma, grid, config
//   run_info.json               timestamp and command line (not deterministic)

#include "rotstar/core_model.hpp"
#include "rotstar/diagnostics.hpp"
#include "rotstar/iteration.hpp"
#include "rotstar/lane_emden.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace rotstar {

inline constexpr int kFormatVersion = 1;
const char* code_version();

/// A named builtin profile with numeric parameters, or name "file" with a path.
struct ProfileSpec {
    std::string name;
    std::map<std::string, double> params;
    std::string file;

    bool operator==(const ProfileSpec&) const = default;
};

struct RunConfig {
    double gamma = 1.5;
    double kappa = 0.0;
    double mu = 0.0;
    ProfileSpec omega2{"constant", {{"c", 1.0}}, {}};
    ProfileSpec s0{"zero", {}, {}};
    GridSpec grid{};
    double newton_tol = 1e-10;
    double trace_tol = 1e-11;
    int max_steps = 50;
    std::string output_dir = "out";

    bool operator==(const RunConfig&) const = default;
};

/// Flat `key = value` lines; `#` starts a comment. Keys:
///   gamma kappa mu nu ntheta lmax r_over_r0 newton_tol trace_tol max_steps output_dir
///   omega2 = constant | rz_gaussian | r_only_power | file,  omega2.<param>, omega2.file
///   s0     = zero | constant | quadratic | gaussian | file,  s0.<param>, s0.file
/// Unknown keys, malformed numbers and repeated keys raise DomainError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Inverse of parse_config; numbers are written with 17 significant digits.
std::string serialize_config(const RunConfig& cfg);
/// Range checks, including the rejection of gamma within 1e-6 of 4/3.
void validate_config(const RunConfig& cfg);

/// Builtins:
///   constant      omega^2 = c
///   rz_gaussian   omega^2 = c exp(-(r^2 + a z^2))        (c = 1, a = 2)
///   r_only_power  omega^2 = c / (1 + r^2)^p               (c = 1, p = 1)
///   file          CSV "r,z,value" on a complete uniform tensor grid
AxiProfile make_omega2(const ProfileSpec& spec);
/// Builtins: zero, constant (c), quadratic (c r^2), gaussian (c exp(-r^2/w^2)),
/// file (CSV "r,value").
RadialProfile make_s0(const ProfileSpec& spec);
Profiles build_profiles(const RunConfig& cfg, const DomainSpec& d);

struct StoredSolution {
    RunConfig config;
    DomainSpec domain;
    AxiField V, S;
    double alpha = 0.0;
    double mass = 0.0;
    double M = 0.0;
    int steps = 0;
    IterationHistory history;
    std::optional<ResidualReport> residuals;
};

void write_field_csv(std::ostream& os, const AxiField& f);
/// `name` labels error messages; the text must hold exactly d.size() rows.
AxiField parse_field_csv(const std::string& text, const DomainSpec& d, const std::string& name);
void write_history_csv(std::ostream& os, const IterationHistory& h);
IterationHistory parse_history_csv(const std::string& text, const std::string& name);
/// Profile dump "u,V0,dV0" at the radial nodes of d.
void write_lane_emden_csv(std::ostream& os, const LaneEmdenSolution& sol, const DomainSpec& d);

/// Writes every data file of the layout above except run_info.json.
void write_solution(const std::filesystem::path& dir, const StoredSolution& s);
/// FormatError on a missing file, a truncated or malformed table, or a
/// format_version other than kFormatVersion.
StoredSolution read_solution(const std::filesystem::path& dir);
void write_run_info(const std::filesystem::path& dir, int argc, const char* const* argv);

/// Exit codes: 0 success, 2 configuration error, 3 non-convergence,
/// 4 invariant violation, 5 divergence, 6 unreadable solution files,
/// 1 anything unexpected.
int exit_code_for(const std::exception& e);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace rotstar
