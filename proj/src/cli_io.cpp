#include "rotstar/cli_io.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/potential.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#ifndef ROTSTAR_VERSION
#define ROTSTAR_VERSION "0.0.0"
#endif

namespace rotstar {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* code_version() { return ROTSTAR_VERSION; }

namespace {

// ---------------------------------------------------------------------------
// Text helpers

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

bool parse_int(std::string_view s, int& out)
{
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

/// Full-precision decimal for data files.
std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Shortest round-trip decimal for the config text.
std::string fmt_short(double x)
{
    char buf[40];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw DomainError("cannot write " + path.string());
    os << text;
    if (!os)
        throw DomainError("write failed for " + path.string());
}

/// Splits a CSV text into rows of numeric cells, remembering where each row
/// starts so that errors can name a byte offset. The header row is checked
/// verbatim; an unterminated final line counts as truncation.
struct CsvRow {
    std::size_t offset;
    std::vector<std::string_view> cells;
};

std::vector<CsvRow> split_csv(const std::string& text, const std::string& name,
                              const std::string& header)
{
    std::vector<CsvRow> rows;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            std::ostringstream os;
            os << name << ": truncated at byte " << text.size() << " (line starting at byte " << pos
               << " has no terminating newline)";
            throw FormatError(os.str());
        }
        std::string_view line(text.data() + pos, nl - pos);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (first) {
            if (!header.empty() && line != header)
                throw FormatError(name + ": parse error at byte 0: expected header \"" + header + "\"");
            first = false;
        } else if (!line.empty()) {
            CsvRow row{pos, {}};
            std::size_t a = 0;
            while (true) {
                const std::size_t c = line.find(',', a);
                row.cells.push_back(line.substr(a, c == std::string_view::npos ? line.npos : c - a));
                if (c == std::string_view::npos)
                    break;
                a = c + 1;
            }
            rows.push_back(std::move(row));
        }
        pos = nl + 1;
    }
    if (first)
        throw FormatError(name + ": truncated at byte 0 (empty file)");
    return rows;
}

[[noreturn]] void bad_cell(const std::string& name, std::size_t offset, const std::string& what)
{
    std::ostringstream os;
    os << name << ": parse error at byte " << offset << ": " << what;
    throw FormatError(os.str());
}

json read_json(const fs::path& path)
{
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::ostringstream os;
        os << path.filename().string() << ": parse error at byte " << e.byte << " ("
           << (e.byte >= text.size() ? "truncated" : "malformed") << ")";
        throw FormatError(os.str());
    }
}

double num_or_nan(const json& j)
{
    return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Profiles

const std::map<std::string, std::set<std::string>>& omega2_params()
{
    static const std::map<std::string, std::set<std::string>> m{
        {"constant", {"c"}}, {"rz_gaussian", {"c", "a"}}, {"r_only_power", {"c", "p"}}, {"file", {}}};
    return m;
}

const std::map<std::string, std::set<std::string>>& s0_params()
{
    static const std::map<std::string, std::set<std::string>> m{
        {"zero", {}}, {"constant", {"c"}}, {"quadratic", {"c"}}, {"gaussian", {"c", "w"}}, {"file", {}}};
    return m;
}

void check_spec(const std::string& key, const ProfileSpec& s,
                const std::map<std::string, std::set<std::string>>& allowed)
{
    const auto it = allowed.find(s.name);
    if (it == allowed.end())
        throw DomainError(key + " = " + s.name + " is not a known profile");
    for (const auto& [k, v] : s.params)
        if (!it->second.count(k))
            throw DomainError(key + "." + k + " is not a parameter of " + s.name);
    if ((s.name == "file") != !s.file.empty())
        throw DomainError(key + ": a file path is required exactly when " + key + " = file");
}

double param(const ProfileSpec& s, const std::string& k, double def)
{
    const auto it = s.params.find(k);
    return it == s.params.end() ? def : it->second;
}

/// Profile tables start with a header line, which is skipped unread.
std::vector<std::vector<double>> numeric_table(const fs::path& path, std::size_t ncols)
{
    const std::string text = read_file(path);
    const auto rows = split_csv(text, path.filename().string(), "");
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& row = rows[k];
        if (row.cells.size() != ncols)
            bad_cell(path.filename().string(), row.offset, "expected " + std::to_string(ncols) + " columns");
        std::vector<double> v(ncols);
        for (std::size_t c = 0; c < ncols; ++c)
            if (!parse_double(trim(row.cells[c]), v[c]))
                bad_cell(path.filename().string(), row.offset,
                         "not a number: \"" + std::string(row.cells[c]) + "\"");
        out.push_back(std::move(v));
    }
    return out;
}

BicubicHermite::Axis uniform_axis(std::vector<double> x, const std::string& what)
{
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    if (x.size() < 5)
        throw DomainError("omega^2 table: at least 5 distinct " + what + " values are needed");
    const double dx = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t k = 0; k < x.size(); ++k)
        if (std::abs(x[k] - (x.front() + k * dx)) > 1e-9 * (x.back() - x.front()))
            throw DomainError("omega^2 table: " + what + " values are not uniformly spaced");
    return BicubicHermite::Axis{x.front(), dx, static_cast<int>(x.size()), x.front() == 0.0, false};
}

AxiProfile tabulated_omega2(const fs::path& path)
{
    const auto t = numeric_table(path, 3);
    std::vector<double> rs, zs;
    for (const auto& row : t) {
        rs.push_back(row[0]);
        zs.push_back(row[1]);
    }
    const auto ax = uniform_axis(rs, "r");
    const auto ay = uniform_axis(zs, "z");
    if (ax.x0 < 0.0 || ay.x0 < 0.0)
        throw DomainError("omega^2 table: r and z must be non-negative (the profile is even in z)");
    std::vector<double> vals(static_cast<std::size_t>(ax.n) * ay.n, std::numeric_limits<double>::quiet_NaN());
    for (const auto& row : t) {
        const int i = static_cast<int>(std::lround((row[0] - ax.x0) / ax.dx));
        const int j = static_cast<int>(std::lround((row[1] - ay.x0) / ay.dx));
        vals[static_cast<std::size_t>(i) * ay.n + j] = row[2];
    }
    if (t.size() != vals.size() || std::any_of(vals.begin(), vals.end(), [](double v) { return std::isnan(v); }))
        throw DomainError("omega^2 table: the (r, z) grid is incomplete or has duplicates");
    bool r_only = true;
    for (int i = 0; i < ax.n && r_only; ++i)
        for (int j = 1; j < ay.n; ++j)
            if (vals[static_cast<std::size_t>(i) * ay.n + j] != vals[static_cast<std::size_t>(i) * ay.n])
                r_only = false;
    auto spline = std::make_shared<const BicubicHermite>(ax, ay, vals);
    const double rmax = ax.x0 + (ax.n - 1) * ax.dx, zmax = ay.x0 + (ay.n - 1) * ay.dx;
    // Outside the table the profile is extended as a constant in each direction.
    return AxiProfile(
        [spline, ax, ay, rmax, zmax](double r, double z) {
            const double az = std::abs(z);
            const double rc = std::clamp(r, ax.x0, rmax), zc = std::clamp(az, ay.x0, zmax);
            const auto e = spline->eval(rc, zc);
            const double dr = rc == r ? e[1] : 0.0;
            const double dz = zc == az ? (z < 0.0 ? -e[2] : e[2]) : 0.0;
            return ValueGrad{e[0], dr, dz};
        },
        r_only);
}

// ---------------------------------------------------------------------------
// Config keys

const std::set<std::string>& scalar_keys()
{
    static const std::set<std::string> k{"gamma",     "kappa",      "mu",        "nu",
                                         "ntheta",    "lmax",       "r_over_r0", "newton_tol",
                                         "trace_tol", "max_steps",  "output_dir"};
    return k;
}

ProfileSpec assemble_spec(const std::string& key, const ProfileSpec& def,
                          const std::map<std::string, std::pair<std::string, int>>& kv)
{
    ProfileSpec s = def;
    if (const auto it = kv.find(key); it != kv.end())
        s = ProfileSpec{it->second.first, {}, {}};
    const std::string prefix = key + ".";
    for (const auto& [k, v] : kv) {
        if (k.rfind(prefix, 0) != 0)
            continue;
        const std::string sub = k.substr(prefix.size());
        if (sub == "file") {
            s.file = v.first;
            continue;
        }
        double x;
        if (!parse_double(v.first, x))
            throw DomainError("config line " + std::to_string(v.second) + ": " + k + " needs a number");
        s.params[sub] = x;
    }
    return s;
}

} // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig parse_config(const std::string& text)
{
    std::map<std::string, std::pair<std::string, int>> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos)
            line.erase(h);
        const std::string t = trim(line);
        if (t.empty())
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw DomainError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string val = trim(std::string_view(t).substr(eq + 1));
        const bool profile_key = key == "omega2" || key == "s0" || key.rfind("omega2.", 0) == 0 ||
                                 key.rfind("s0.", 0) == 0;
        if (!scalar_keys().count(key) && !profile_key)
            throw DomainError("config line " + std::to_string(lineno) + ": unknown key \"" + key + "\"");
        if (!kv.emplace(key, std::pair{val, lineno}).second)
            throw DomainError("config line " + std::to_string(lineno) + ": repeated key \"" + key + "\"");
    }

    RunConfig c;
    auto real = [&](const char* k, double& dst) {
        if (const auto it = kv.find(k); it != kv.end() && !parse_double(it->second.first, dst))
            throw DomainError("config line " + std::to_string(it->second.second) + ": " + k +
                              " needs a number, got \"" + it->second.first + "\"");
    };
    auto integer = [&](const char* k, int& dst) {
        if (const auto it = kv.find(k); it != kv.end() && !parse_int(it->second.first, dst))
            throw DomainError("config line " + std::to_string(it->second.second) + ": " + k +
                              " needs an integer, got \"" + it->second.first + "\"");
    };
    real("gamma", c.gamma);
    real("kappa", c.kappa);
    real("mu", c.mu);
    integer("nu", c.grid.Nu);
    integer("ntheta", c.grid.Ntheta);
    integer("lmax", c.grid.Lmax);
    real("r_over_r0", c.grid.R_over_R0);
    real("newton_tol", c.newton_tol);
    real("trace_tol", c.trace_tol);
    integer("max_steps", c.max_steps);
    if (const auto it = kv.find("output_dir"); it != kv.end())
        c.output_dir = it->second.first;
    c.omega2 = assemble_spec("omega2", c.omega2, kv);
    c.s0 = assemble_spec("s0", c.s0, kv);
    check_spec("omega2", c.omega2, omega2_params());
    check_spec("s0", c.s0, s0_params());
    return c;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DomainError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config(ss.str());
    // Table paths are relative to the config file.
    for (ProfileSpec* s : {&c.omega2, &c.s0})
        if (!s->file.empty() && fs::path(s->file).is_relative())
            s->file = (path.parent_path() / s->file).lexically_normal().string();
    return c;
}

std::string serialize_config(const RunConfig& c)
{
    std::ostringstream os;
    auto spec = [&](const char* key, const ProfileSpec& s) {
        os << key << " = " << s.name << "\n";
        for (const auto& [k, v] : s.params)
            os << key << "." << k << " = " << fmt_short(v) << "\n";
        if (!s.file.empty())
            os << key << ".file = " << s.file << "\n";
    };
    os << "gamma = " << fmt_short(c.gamma) << "\n"
       << "kappa = " << fmt_short(c.kappa) << "\n"
       << "mu = " << fmt_short(c.mu) << "\n";
    spec("omega2", c.omega2);
    spec("s0", c.s0);
    os << "nu = " << c.grid.Nu << "\n"
       << "ntheta = " << c.grid.Ntheta << "\n"
       << "lmax = " << c.grid.Lmax << "\n"
       << "r_over_r0 = " << fmt_short(c.grid.R_over_R0) << "\n"
       << "newton_tol = " << fmt_short(c.newton_tol) << "\n"
       << "trace_tol = " << fmt_short(c.trace_tol) << "\n"
       << "max_steps = " << c.max_steps << "\n"
       << "output_dir = " << c.output_dir << "\n";
    return os.str();
}

void validate_config(const RunConfig& c)
{
    if (std::abs(c.gamma - 4.0 / 3.0) < 1e-6) {
        std::ostringstream os;
        os << "gamma = " << c.gamma << " is within 1e-6 of 4/3, the mass-critical index: all "
           << "Lane-Emden stars then share one mass and the linearized problem is degenerate, "
           << "so gamma = 4/3 is excluded";
        throw DomainError(os.str());
    }
    PhysicalParams::make(c.gamma, c.kappa, c.mu);
    if (!(c.newton_tol > 0.0) || !(c.trace_tol > 0.0))
        throw DomainError("tolerances must be positive");
    if (c.max_steps < 1)
        throw DomainError("max_steps must be at least 1");
    if (c.grid.Nu < 8 || c.grid.Ntheta < 5 || c.grid.Lmax < 0 || c.grid.Lmax % 2 != 0)
        throw DomainError("grid needs nu >= 8, ntheta >= 5 and an even lmax >= 0");
    if (!(c.grid.R_over_R0 > 1.0))
        throw DomainError("r_over_r0 must exceed 1");
    check_spec("omega2", c.omega2, omega2_params());
    check_spec("s0", c.s0, s0_params());
}

AxiProfile make_omega2(const ProfileSpec& s)
{
    check_spec("omega2", s, omega2_params());
    const double c = param(s, "c", 1.0);
    if (s.name == "constant")
        return AxiProfile::constant(c);
    if (s.name == "rz_gaussian") {
        const double a = param(s, "a", 2.0);
        return AxiProfile([c, a](double r, double z) {
            const double e = c * std::exp(-(r * r + a * z * z));
            return ValueGrad{e, -2.0 * r * e, -2.0 * a * z * e};
        });
    }
    if (s.name == "r_only_power") {
        const double p = param(s, "p", 1.0);
        return AxiProfile(
            [c, p](double r, double) {
                const double b = 1.0 + r * r;
                const double v = c * std::pow(b, -p);
                return ValueGrad{v, -2.0 * p * r * v / b, 0.0};
            },
            true);
    }
    return tabulated_omega2(s.file);
}

RadialProfile make_s0(const ProfileSpec& s)
{
    check_spec("s0", s, s0_params());
    const double c = param(s, "c", 1.0);
    if (s.name == "zero")
        return RadialProfile::constant(0.0);
    if (s.name == "constant")
        return RadialProfile::constant(c);
    if (s.name == "quadratic")
        return RadialProfile([c](double r) { return std::pair{c * r * r, 2.0 * c * r}; });
    if (s.name == "gaussian") {
        const double w = param(s, "w", 1.0);
        if (!(w > 0.0))
            throw DomainError("s0.w must be positive");
        return RadialProfile([c, w](double r) {
            const double e = c * std::exp(-r * r / (w * w));
            return std::pair{e, -2.0 * r * e / (w * w)};
        });
    }
    const auto t = numeric_table(s.file, 2);
    std::vector<double> x, y;
    for (const auto& row : t) {
        x.push_back(row[0]);
        y.push_back(row[1]);
    }
    return RadialProfile::tabulated(std::move(x), std::move(y));
}

Profiles build_profiles(const RunConfig& cfg, const DomainSpec& d)
{
    return apply_cutoff(make_omega2(cfg.omega2), make_s0(cfg.s0), d);
}

// ---------------------------------------------------------------------------
// Tables

void write_field_csv(std::ostream& os, const AxiField& f)
{
    const DomainSpec& d = f.domain();
    os << "u_index,theta_index,value\n";
    for (int i = 0; i < d.Nu; ++i)
        for (int j = 0; j < d.Ntheta; ++j)
            os << i << ',' << j << ',' << fmt17(f(i, j)) << '\n';
}

AxiField parse_field_csv(const std::string& text, const DomainSpec& d, const std::string& name)
{
    const auto rows = split_csv(text, name, "u_index,theta_index,value");
    AxiField f(d);
    const std::size_t n = d.size();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& row = rows[k];
        if (k >= n)
            bad_cell(name, row.offset, "more rows than the " + std::to_string(n) + " grid nodes");
        int i, j;
        double v;
        if (row.cells.size() != 3 || !parse_int(row.cells[0], i) || !parse_int(row.cells[1], j) ||
            !parse_double(row.cells[2], v))
            bad_cell(name, row.offset, "expected \"u_index,theta_index,value\"");
        if (static_cast<std::size_t>(i) * d.Ntheta + j != k || j >= d.Ntheta)
            bad_cell(name, row.offset, "node indices out of order");
        f(i, j) = v;
    }
    if (rows.size() < n) {
        std::ostringstream os;
        os << name << ": truncated at byte " << text.size() << ": expected " << n << " rows, found "
           << rows.size();
        throw FormatError(os.str());
    }
    return f;
}

namespace {
const char* kHistoryHeader = "step,dV_sup,dalpha,c1_diff,ratio,mass_err,W_sup,high_norm";
}

void write_history_csv(std::ostream& os, const IterationHistory& h)
{
    os << kHistoryHeader << '\n';
    for (const auto& s : h.steps)
        os << s.step << ',' << fmt17(s.dV_sup) << ',' << fmt17(s.dalpha) << ',' << fmt17(s.c1_diff)
           << ',' << fmt17(s.ratio) << ',' << fmt17(s.mass_err) << ',' << fmt17(s.W_sup) << ','
           << fmt17(s.high_norm) << '\n';
}

IterationHistory parse_history_csv(const std::string& text, const std::string& name)
{
    IterationHistory h;
    for (const auto& row : split_csv(text, name, kHistoryHeader)) {
        StepRecord s;
        double* dst[] = {&s.dV_sup, &s.dalpha, &s.c1_diff, &s.ratio, &s.mass_err, &s.W_sup, &s.high_norm};
        bool ok = row.cells.size() == 8 && parse_int(row.cells[0], s.step);
        for (int c = 0; ok && c < 7; ++c)
            ok = parse_double(row.cells[c + 1], *dst[c]);
        if (!ok)
            bad_cell(name, row.offset, std::string("expected \"") + kHistoryHeader + "\"");
        h.steps.push_back(s);
    }
    return h;
}

void write_lane_emden_csv(std::ostream& os, const LaneEmdenSolution& sol, const DomainSpec& d)
{
    os << "u,V0,dV0\n";
    for (int i = 0; i < d.Nu; ++i) {
        const double u = d.u(i);
        const auto [v, dv] = eval_V0(sol, u);
        os << fmt17(u) << ',' << fmt17(v) << ',' << fmt17(dv) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Solution directories

namespace {

json residuals_json(const ResidualReport& r)
{
    return json{{"W_sup", r.W_sup},
                {"W_l2", r.W_l2},
                {"curl_sup", r.curl_sup},
                {"mass_err", r.mass_err},
                {"pw_cross_sup", r.pw_cross_sup},
                {"tangential_sup", r.tangential_sup}};
}

ResidualReport residuals_from(const json& j)
{
    ResidualReport r;
    r.W_sup = num_or_nan(j.value("W_sup", json()));
    r.W_l2 = num_or_nan(j.value("W_l2", json()));
    r.curl_sup = num_or_nan(j.value("curl_sup", json()));
    r.mass_err = num_or_nan(j.value("mass_err", json()));
    r.pw_cross_sup = num_or_nan(j.value("pw_cross_sup", json()));
    r.tangential_sup = num_or_nan(j.value("tangential_sup", json()));
    return r;
}

json summary_json(const StoredSolution& s)
{
    json j{{"gamma", s.config.gamma},
           {"kappa", s.config.kappa},
           {"mu", s.config.mu},
           {"alpha", s.alpha},
           {"mass", s.mass},
           {"M", s.M},
           {"mass_err", s.residuals ? s.residuals->mass_err : std::abs(s.mass - s.M)},
           {"steps", s.steps},
           {"fixed_point_residual", s.history.fixed_point_residual}};
    j["residuals"] = s.residuals ? residuals_json(*s.residuals) : json(nullptr);
    return j;
}

PhysicalParams params_of(const RunConfig& c)
{
    return PhysicalParams::make(c.gamma, c.kappa, c.mu);
}

} // namespace

void write_solution(const fs::path& dir, const StoredSolution& s)
{
    fs::create_directories(dir);
    const PhysicalFields phys = to_physical(s.V, s.S, params_of(s.config));
    const std::pair<const char*, const AxiField*> grids[] = {
        {"V.csv", &s.V}, {"S.csv", &s.S}, {"rho.csv", &phys.rho}, {"s.csv", &phys.s}};
    for (const auto& [name, f] : grids) {
        std::ostringstream os;
        write_field_csv(os, *f);
        write_file(dir / name, os.str());
    }
    std::ostringstream hist;
    write_history_csv(hist, s.history);
    write_file(dir / "history.csv", hist.str());
    write_file(dir / "summary.json", summary_json(s).dump(2) + "\n");

    const DomainSpec& d = s.domain;
    json meta{{"format_version", kFormatVersion},
              {"code_version", code_version()},
              {"gamma", s.config.gamma},
              {"kappa", s.config.kappa},
              {"mu", s.config.mu},
              {"grid",
               {{"Nu", d.Nu}, {"Ntheta", d.Ntheta}, {"Lmax", d.Lmax}, {"R0", d.R0}, {"R", d.R},
                {"R_over_R0", s.config.grid.R_over_R0}}},
              {"config", serialize_config(s.config)}};
    write_file(dir / "meta.json", meta.dump(2) + "\n");
}

StoredSolution read_solution(const fs::path& dir)
{
    const json meta = read_json(dir / "meta.json");
    const int version = meta.value("format_version", -1);
    if (version != kFormatVersion) {
        std::ostringstream os;
        os << "meta.json: incompatible format_version " << version << " (this build reads version "
           << kFormatVersion << ", code " << code_version() << ")";
        throw FormatError(os.str());
    }
    StoredSolution s;
    try {
        s.config = parse_config(meta.at("config").get<std::string>());
        const json& g = meta.at("grid");
        s.domain = DomainSpec::make(g.at("R0").get<double>(), s.config.grid.R_over_R0,
                                    g.at("Nu").get<int>(), g.at("Ntheta").get<int>(),
                                    g.at("Lmax").get<int>());
        if (s.domain.R != g.at("R").get<double>())
            throw FormatError("meta.json: stored R disagrees with R0 * r_over_r0");
    } catch (const json::exception& e) {
        throw FormatError(std::string("meta.json: ") + e.what());
    } catch (const DomainError& e) {
        throw FormatError(std::string("meta.json: invalid stored config: ") + e.what());
    }
    s.V = parse_field_csv(read_file(dir / "V.csv"), s.domain, "V.csv");
    s.S = parse_field_csv(read_file(dir / "S.csv"), s.domain, "S.csv");
    s.history = parse_history_csv(read_file(dir / "history.csv"), "history.csv");

    const json sum = read_json(dir / "summary.json");
    try {
        s.alpha = sum.at("alpha").get<double>();
        s.mass = num_or_nan(sum.at("mass"));
        s.M = num_or_nan(sum.at("M"));
        s.steps = sum.at("steps").get<int>();
        s.history.fixed_point_residual = num_or_nan(sum.value("fixed_point_residual", json()));
        if (sum.contains("residuals") && sum["residuals"].is_object())
            s.residuals = residuals_from(sum["residuals"]);
    } catch (const json::exception& e) {
        throw FormatError(std::string("summary.json: ") + e.what());
    }
    return s;
}

void write_run_info(const fs::path& dir, int argc, const char* const* argv)
{
    fs::create_directories(dir);
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    json args = json::array();
    for (int k = 0; k < argc; ++k)
        args.push_back(argv[k]);
    const json info{{"timestamp", stamp}, {"code_version", code_version()}, {"argv", args}};
    write_file(dir / "run_info.json", info.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Command line

int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const DomainError*>(&e))
        return 2;
    if (dynamic_cast<const NonConvergenceError*>(&e))
        return 3;
    if (dynamic_cast<const InvariantViolation*>(&e))
        return 4;
    if (dynamic_cast<const DivergenceError*>(&e))
        return 5;
    if (dynamic_cast<const FormatError*>(&e))
        return 6;
    return 1;
}

namespace {

struct Flags {
    std::string config;
    std::optional<double> gamma, kappa, mu, tol;
    std::optional<int> nu, ntheta, lmax;
    std::string out;
    std::vector<double> kappas, mus;
    std::string dir;
    std::string field = "S";
    std::vector<double> ks{0.0, 1.0};
    double beta = 0.5;
    std::size_t max_pairs = 1000000;
};

void add_run_flags(CLI::App* s, Flags& f)
{
    s->add_option("--config", f.config, "Run configuration (key = value)");
    s->add_option("--gamma", f.gamma, "Adiabatic index, 6/5 < gamma < 2, gamma != 4/3");
    s->add_option("--kappa", f.kappa, "Rotation intensity");
    s->add_option("--mu", f.mu, "Floor-entropy intensity");
    s->add_option("--nu", f.nu, "Radial nodes");
    s->add_option("--ntheta", f.ntheta, "Polar nodes on [0, pi/2]");
    s->add_option("--lmax", f.lmax, "Largest even multipole degree");
    s->add_option("--tol", f.tol, "Newton stopping tolerance");
    s->add_option("--out", f.out, "Output directory");
}

RunConfig resolve_config(const Flags& f)
{
    RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (f.gamma)
        c.gamma = *f.gamma;
    if (f.kappa)
        c.kappa = *f.kappa;
    if (f.mu)
        c.mu = *f.mu;
    if (f.nu)
        c.grid.Nu = *f.nu;
    if (f.ntheta)
        c.grid.Ntheta = *f.ntheta;
    if (f.lmax)
        c.grid.Lmax = *f.lmax;
    if (f.tol)
        c.newton_tol = *f.tol;
    if (!f.out.empty())
        c.output_dir = f.out;
    validate_config(c);
    return c;
}

NewtonOptions newton_options(const RunConfig& c)
{
    NewtonOptions o;
    o.tol = c.newton_tol;
    o.max_steps = c.max_steps;
    o.F.trace_tol = c.trace_tol;
    return o;
}

void log(std::ostream& err, const std::string& msg) { err << "[rotstar] " << msg << '\n'; }

int cmd_lane_emden(const Flags& f, std::ostream& out, std::ostream& err)
{
    RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (f.gamma)
        c.gamma = *f.gamma;
    if (!(c.gamma > 1.2 && c.gamma <= 2.0))
        throw DomainError("lane-emden needs 6/5 < gamma <= 2");
    if (std::abs(c.gamma - 4.0 / 3.0) < 1e-6)
        warn("gamma = 4/3 is the mass-critical index; the radial profile exists but cannot be perturbed");
    const LaneEmdenSolution sol = solve_lane_emden(1.0 / (c.gamma - 1.0));
    const DomainSpec d = domain_for(sol, f.nu.value_or(129), 5, 0, c.grid.R_over_R0);
    std::ostringstream os;
    log(err, "q = " + fmt17(sol.q) + ", R0 = " + fmt17(sol.R0) + ", M = " + fmt17(sol.M) +
                 ", alpha0 = " + fmt17(sol.alpha0));
    if (f.out.empty()) {
        write_lane_emden_csv(out, sol, d);
    } else {
        fs::create_directories(f.out);
        write_lane_emden_csv(os, sol, d);
        write_file(fs::path(f.out) / "lane_emden.csv", os.str());
        log(err, "wrote " + (fs::path(f.out) / "lane_emden.csv").string());
    }
    return 0;
}

int cmd_solve(const Flags& f, int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    const RunConfig c = resolve_config(f);
    const fs::path dir = c.output_dir;
    log(err, "base state on " + std::to_string(c.grid.Nu) + " x " + std::to_string(c.grid.Ntheta) +
                 " nodes, Lmax = " + std::to_string(c.grid.Lmax));
    const BaseState b = build_base(PhysicalParams::make(c.gamma), c.grid);
    const PhysicalParams p = params_of(c);
    const Profiles prof = build_profiles(c, b.domain);
    auto dump_history = [&](const IterationHistory& h) {
        fs::create_directories(dir);
        std::ostringstream os;
        write_history_csv(os, h);
        write_file(dir / "history.csv", os.str());
        write_run_info(dir, argc, argv);
    };
    NewtonResult r;
    try {
        r = newton_solve(b, p, prof, newton_options(c));
    } catch (const NewtonStall& e) {
        dump_history(e.history);
        throw;
    } catch (const NewtonDivergence& e) {
        dump_history(e.history);
        throw;
    }
    log(err, "converged in " + std::to_string(r.history.steps.size()) + " steps");
    StoredSolution s;
    s.config = c;
    s.domain = b.domain;
    s.V = r.state.V;
    s.S = r.state.S;
    s.alpha = r.state.alpha;
    s.mass = r.mass;
    s.M = b.M;
    s.steps = static_cast<int>(r.history.steps.size());
    s.history = r.history;
    s.residuals = momentum_residual(s.V, s.S, s.alpha, p, prof, b.M);
    write_solution(dir, s);
    write_run_info(dir, argc, argv);
    out << summary_json(s).dump(2) << '\n';
    return 0;
}

std::string csv_quote(const std::string& s)
{
    std::string q = "\"";
    for (char ch : s)
        q += ch == '"' ? std::string("\"\"") : std::string(1, ch == '\n' ? ' ' : ch);
    return q + "\"";
}

int cmd_sweep(const Flags& f, int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    const RunConfig c = resolve_config(f);
    const std::vector<double> ks = f.kappas.empty() ? std::vector<double>{c.kappa} : f.kappas;
    const std::vector<double> ms = f.mus.empty() ? std::vector<double>{c.mu} : f.mus;
    const BaseState b = build_base(PhysicalParams::make(c.gamma), c.grid);
    const Profiles prof = build_profiles(c, b.domain);
    log(err, "sweeping " + std::to_string(ks.size() * ms.size()) + " (kappa, mu) pairs");
    const SweepReport rep = sweep(b, ks, ms, c.gamma, prof, newton_options(c));

    std::ostringstream os;
    os << "kappa,mu,ok,steps,dV_sup,drho_sup,dS_sup,mass_err,error\n";
    int ok = 0;
    for (const auto& pt : rep.points) {
        ok += pt.ok;
        const int steps = pt.result ? static_cast<int>(pt.result->history.steps.size()) : 0;
        const double merr = pt.result ? std::abs(pt.result->mass - b.M) : std::nan("");
        os << fmt17(pt.kappa) << ',' << fmt17(pt.mu) << ',' << (pt.ok ? 1 : 0) << ',' << steps << ','
           << fmt17(pt.dV_sup) << ',' << fmt17(pt.drho_sup) << ',' << fmt17(pt.dS_sup) << ','
           << fmt17(merr) << ',' << csv_quote(pt.error) << '\n';
        if (!pt.ok)
            log(err, "kappa = " + fmt17(pt.kappa) + ", mu = " + fmt17(pt.mu) + " failed: " + pt.error);
    }
    const fs::path dir = c.output_dir;
    fs::create_directories(dir);
    write_file(dir / "sweep.csv", os.str());
    write_run_info(dir, argc, argv);
    const json j{{"points", rep.points.size()},
                 {"converged", ok},
                 {"monotone", rep.monotone},
                 {"max_mass_spread", rep.max_mass_spread},
                 {"table", (dir / "sweep.csv").string()}};
    out << j.dump(2) << '\n';
    return ok > 0 ? 0 : 3;
}

int cmd_verify(const Flags& f, std::ostream& out, std::ostream& err)
{
    const StoredSolution s = read_solution(f.dir);
    const RunConfig& c = s.config;
    const PhysicalParams p = params_of(c);
    const BaseState b = build_base(PhysicalParams::make(c.gamma), c.grid);
    if (!(b.domain == s.domain))
        throw FormatError("stored grid does not match the grid rebuilt from its config");
    const Profiles prof = build_profiles(c, b.domain);
    const double smin = s.S.min_value();
    if (!(smin > 0.0))
        throw InvariantViolation("stored S has non-positive entries (min " + fmt17(smin) +
                                 "); the entropy map can never produce them");

    const ResidualReport rep = momentum_residual(s.V, s.S, s.alpha, p, prof, b.M);
    const PoincareWavreReport pw = poincare_wavre(s.V, s.S, p, prof);
    const FResult F = F_map(b, s.V, s.alpha, p, prof, newton_options(c).F);
    const double fp = (s.V - F.V).max_abs() + std::abs(s.alpha - F.alpha);

    json checks = json::object();
    checks["mass_err <= 1e-8 M"] = rep.mass_err <= 1e-8 * b.M;
    checks["fixed point residual <= 100 tol"] = fp <= 100.0 * c.newton_tol;
    checks["Poincare-Wavre consistent"] = pw.consistent;
    if (s.residuals)
        checks["stored residuals reproduced"] = s.residuals->W_sup == rep.W_sup &&
                                                s.residuals->curl_sup == rep.curl_sup &&
                                                s.residuals->mass_err == rep.mass_err;
    bool pass = true;
    for (const auto& [k, v] : checks.items())
        if (!v.get<bool>()) {
            pass = false;
            log(err, "check failed: " + k);
        }
    const json j{{"residuals", residuals_json(rep)},
                 {"poincare_wavre",
                  {{"defect", pw.defect},
                   {"source_sup", pw.source_sup},
                   {"barotropic_profile", pw.barotropic_profile},
                   {"consistent", pw.consistent}}},
                 {"fixed_point_residual", fp},
                 {"S_min", smin},
                 {"checks", checks},
                 {"pass", pass}};
    out << j.dump(2) << '\n';
    if (!f.out.empty()) {
        fs::create_directories(f.out);
        write_file(fs::path(f.out) / "verify.json", j.dump(2) + "\n");
    }
    return pass ? 0 : 4;
}

int cmd_norms(const Flags& f, std::ostream& out)
{
    const StoredSolution s = read_solution(f.dir);
    const PhysicalFields phys = to_physical(s.V, s.S, params_of(s.config));
    const AxiField* field = nullptr;
    AxiField shifted;
    if (f.field == "V")
        field = &s.V;
    else if (f.field == "S")
        field = &s.S;
    else if (f.field == "S-1") {
        shifted = s.S - AxiField(s.domain, 1.0);
        field = &shifted;
    } else if (f.field == "rho")
        field = &phys.rho;
    else if (f.field == "s")
        field = &phys.s;
    else
        throw DomainError("--field must be one of V, S, S-1, rho, s");
    HolderOptions o;
    o.max_pairs = f.max_pairs;
    json rows = json::array();
    for (double k : f.ks)
        rows.push_back({{"field", f.field},
                        {"k", k},
                        {"beta", f.beta},
                        {"parenthesis", weighted_holder_norm(*field, k, f.beta, HolderVariant::Parenthesis, o)},
                        {"bracket", weighted_holder_norm(*field, k, f.beta, HolderVariant::Bracket, o)},
                        {"stride", holder_stride(s.domain, f.max_pairs)}});
    out << rows.dump(2) << '\n';
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Rotating stars with variable entropy: base states, Newton solves and diagnostics",
                 "rotstar"};
    app.require_subcommand(1);
    Flags f;

    auto* le = app.add_subcommand("lane-emden", "Print the non-rotating radial profile as CSV");
    le->add_option("--gamma", f.gamma, "Adiabatic index");
    le->add_option("--config", f.config, "Run configuration");
    le->add_option("--nu", f.nu, "Number of radial samples on [0, R]");
    le->add_option("--out", f.out, "Directory for lane_emden.csv (default: stdout)");

    auto* so = app.add_subcommand("solve", "Newton solve for one (kappa, mu)");
    add_run_flags(so, f);

    auto* sw = app.add_subcommand("sweep", "Newton solves over a (kappa, mu) grid");
    add_run_flags(sw, f);
    sw->add_option("--kappas", f.kappas, "Comma-separated kappa values")->delimiter(',');
    sw->add_option("--mus", f.mus, "Comma-separated mu values")->delimiter(',');

    auto* ve = app.add_subcommand("verify", "Run the diagnostics suite on a stored solution");
    ve->add_option("dir", f.dir, "Solution directory")->required();
    ve->add_option("--out", f.out, "Directory for verify.json");

    auto* no = app.add_subcommand("norms", "Weighted Holder norms of a stored field");
    no->add_option("dir", f.dir, "Solution directory")->required();
    no->add_option("--field", f.field, "V, S, S-1, rho or s");
    no->add_option("--k", f.ks, "Radial weight exponents")->delimiter(',');
    no->add_option("--beta", f.beta, "Holder exponent in (0, 1)");
    no->add_option("--max-pairs", f.max_pairs, "Budget of node pairs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (le->parsed())
            return cmd_lane_emden(f, out, err);
        if (so->parsed())
            return cmd_solve(f, argc, argv, out, err);
        if (sw->parsed())
            return cmd_sweep(f, argc, argv, out, err);
        if (ve->parsed())
            return cmd_verify(f, out, err);
        return cmd_norms(f, out);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        err << "error: " << e.what() << '\n';
        return code;
    }
}

} // namespace rotstar
