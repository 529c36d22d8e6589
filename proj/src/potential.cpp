#include "rotstar/potential.hpp"
#include "rotstar/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

namespace rotstar {

namespace {

void check_lmax(int Lmax)
{
    if (Lmax < 0 || Lmax % 2 != 0) {
        std::ostringstream os;
        os << "Lmax must be a non-negative even integer, got " << Lmax;
        throw DomainError(os.str());
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-16)
                break;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

std::shared_ptr<const AngularTransform> build_transform(int Nt, int Lmax)
{
    auto tr = std::make_shared<AngularTransform>();
    tr->Ntheta = Nt;
    tr->Lmax = Lmax;
    const int nm = Lmax / 2 + 1;
    const int N = Nt - 1;
    const DomainSpec d = DomainSpec::make(1.0, 1.5, 8, Nt, Lmax);

    // J(k, m) = int_{-1}^{1} T_{2k}(x) P_{2m}(x) dx, exact by Gauss-Legendre.
    std::vector<double> gx, gw;
    gauss_legendre(Nt + Lmax / 2 + 4, gx, gw);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(Nt, nm);
    for (std::size_t g = 0; g < gx.size(); ++g) {
        const double ang = std::acos(std::clamp(gx[g], -1.0, 1.0));
        for (int m = 0; m < nm; ++m) {
            const double pl = legendre_p(2 * m, gx[g]);
            for (int k = 0; k < Nt; ++k)
                J(k, m) += gw[g] * std::cos(2.0 * k * ang) * pl;
        }
    }

    // Cosine-series coefficients a_k = C(k, j) f_j of the DCT-I interpolant
    // f(theta) = sum_k a_k cos(2 k theta), endpoint terms halved.
    Eigen::MatrixXd C(Nt, Nt);
    for (int k = 0; k < Nt; ++k) {
        const double ck = (k == 0 || k == N) ? 0.5 : 1.0;
        for (int j = 0; j < Nt; ++j) {
            const double ej = (j == 0 || j == N) ? 0.5 : 1.0;
            // cos(k j pi / N) evaluated with the product reduced mod 2N.
            const long kj = (static_cast<long>(k) * j) % (2L * N);
            C(k, j) = ck * ej * (2.0 / N) * std::cos(kPi * static_cast<double>(kj) / N);
        }
    }

    tr->analysis.resize(nm, Nt);
    for (int m = 0; m < nm; ++m) {
        const double norm = (4.0 * m + 1.0) / 2.0;
        for (int j = 0; j < Nt; ++j) {
            double s = 0.0;
            for (int k = 0; k < Nt; ++k)
                s += J(k, m) * C(k, j);
            tr->analysis(m, j) = norm * s;
        }
    }
    tr->synthesis.resize(Nt, nm);
    for (int j = 0; j < Nt; ++j)
        for (int m = 0; m < nm; ++m)
            tr->synthesis(j, m) = legendre_p(2 * m, d.cos_theta(j));
    return tr;
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> as_matrix(const AxiField& f)
{
    const auto& d = f.domain();
    return Eigen::Map<const RowMajor>(f.values().data(), d.Nu, d.Ntheta);
}

int effective_lmax(const AxiField& f, const PotentialOptions& opts)
{
    const int L = opts.Lmax < 0 ? f.domain().Lmax : opts.Lmax;
    check_lmax(L);
    return L;
}

/// Returns f with everything beyond R1 removed, warning when that changes f.
AxiField clamp_support(const AxiField& f, bool enabled)
{
    if (!enabled)
        return f;
    const auto& d = f.domain();
    const double outside = f.max_abs_where([&](int i, int) { return d.u(i) > d.R1; });
    if (outside == 0.0)
        return f;
    std::ostringstream os;
    os << "density does not vanish beyond R1 (max |f| = " << outside << "); clamping support";
    warn(os.str());
    AxiField g = f;
    for (int i = 0; i < d.Nu; ++i)
        if (d.u(i) > d.R1)
            for (int j = 0; j < d.Ntheta; ++j)
                g(i, j) = 0.0;
    return g;
}

void warn_on_tail(const LegendreModes& m)
{
    const double tail = mode_tail_fraction(m);
    if (tail > 1e-8) {
        std::ostringstream os;
        os << "Legendre tail energy fraction " << tail << " exceeds 1e-8 at Lmax = " << m.Lmax();
        warn(os.str());
    }
}

} // namespace

LegendreModes::LegendreModes(int Lmax, int Nu) : Lmax_(Lmax), Nu_(Nu)
{
    check_lmax(Lmax);
    c_ = Eigen::MatrixXd::Zero(Lmax / 2 + 1, Nu);
}

double legendre_p(int l, double x)
{
    if (l == 0)
        return 1.0;
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= l; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

std::shared_ptr<const AngularTransform> angular_transform(int Ntheta, int Lmax)
{
    check_lmax(Lmax);
    if (Ntheta - 1 < Lmax / 2) {
        std::ostringstream os;
        os << "Ntheta = " << Ntheta << " cannot resolve Legendre modes up to Lmax = " << Lmax;
        throw DomainError(os.str());
    }
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::shared_ptr<const AngularTransform>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[{Ntheta, Lmax}];
    if (!slot)
        slot = build_transform(Ntheta, Lmax);
    return slot;
}

LegendreModes legendre_analyze(const AxiField& f, int Lmax)
{
    check_lmax(Lmax);
    const auto& d = f.domain();
    const auto tr = angular_transform(d.Ntheta, Lmax);
    LegendreModes m(Lmax, d.Nu);
    m.matrix().noalias() = tr->analysis * as_matrix(f).transpose();
    return m;
}

AxiField legendre_synthesize(const LegendreModes& modes, const DomainSpec& d)
{
    if (modes.Nu() != d.Nu)
        throw DomainError("legendre_synthesize: radial size mismatch");
    const auto tr = angular_transform(d.Ntheta, modes.Lmax());
    AxiField f(d);
    Eigen::Map<RowMajor> out(f.raw().data(), d.Nu, d.Ntheta);
    out.noalias() = modes.matrix().transpose() * tr->synthesis.transpose();
    return f;
}

double mode_tail_fraction(const LegendreModes& modes)
{
    const auto& c = modes.matrix();
    double total = 0.0;
    for (int m = 0; m < c.rows(); ++m)
        total += c.row(m).squaredNorm() / (4.0 * m + 1.0);
    if (total == 0.0 || c.rows() < 2)
        return 0.0;
    return c.row(c.rows() - 1).squaredNorm() / (4.0 * (c.rows() - 1) + 1.0) / total;
}

std::vector<double> uniform_weights(int n, double h)
{
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    if (n == 0)
        return w;
    if (n == 1) {
        w[0] = w[1] = 0.5 * h;
        return w;
    }
    const int simpson = (n % 2 == 0) ? n : n - 3;
    for (int k = 0; k < simpson; k += 2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if (simpson != n) {
        const int k = simpson;
        w[k] += 3.0 * h / 8.0;
        w[k + 1] += 9.0 * h / 8.0;
        w[k + 2] += 9.0 * h / 8.0;
        w[k + 3] += 3.0 * h / 8.0;
    }
    return w;
}

namespace {

/// Moments int_{u_m}^{u_{m+1}} u^p L_k(u) du of the cubic Lagrange basis on
/// the four nodes nearest interval m, starting at node start.
struct IntervalMoments {
    int start = 0;
    std::array<double, 4> w{};
};

std::vector<IntervalMoments> interval_moments(const DomainSpec& d, double p, int npts)
{
    const int N = d.Nu;
    const double h = d.h();
    std::vector<double> gx, gw;
    gauss_legendre(npts, gx, gw);
    std::vector<IntervalMoments> out(static_cast<std::size_t>(N - 1));
    for (int m = 0; m + 1 < N; ++m) {
        IntervalMoments& im = out[m];
        im.start = std::clamp(m - 1, 0, N - 4);
        for (std::size_t g = 0; g < gx.size(); ++g) {
            const double t = m + 0.5 * (1.0 + gx[g]);
            const double u = t * h;
            const double wt = 0.5 * h * gw[g] * std::pow(u, p);
            const double x = t - im.start;
            for (int k = 0; k < 4; ++k) {
                double L = 1.0;
                for (int n = 0; n < 4; ++n)
                    if (n != k)
                        L *= (x - n) / (k - n);
                im.w[k] += wt * L;
            }
        }
    }
    return out;
}

int gauss_points_for(int l) { return 16 + l / 2; }

Eigen::MatrixXd build_kernel(const DomainSpec& d, int l)
{
    const int N = d.Nu;
    const double pref = 4.0 * kPi / (2.0 * l + 1.0);
    const auto inner = interval_moments(d, l + 2.0, gauss_points_for(l));
    const auto outer = interval_moments(d, 1.0 - l, gauss_points_for(l));
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        const double ui = d.u(i);
        if (i > 0) {
            const double s = pref / std::pow(ui, l + 1);
            for (int m = 0; m < i; ++m)
                for (int k = 0; k < 4; ++k)
                    K(i, inner[m].start + k) += s * inner[m].w[k];
        }
        if (i > 0 || l == 0) {
            const double s = pref * (i == 0 ? 1.0 : std::pow(ui, l));
            for (int m = i; m + 1 < N; ++m)
                for (int k = 0; k < 4; ++k)
                    K(i, outer[m].start + k) += s * outer[m].w[k];
        }
    }
    return K;
}

} // namespace

std::vector<double> radial_moment_weights(const DomainSpec& d, int p)
{
    std::vector<double> w(static_cast<std::size_t>(d.Nu), 0.0);
    for (const auto& im : interval_moments(d, p, gauss_points_for(p)))
        for (int k = 0; k < 4; ++k)
            w[im.start + k] += im.w[k];
    return w;
}

Eigen::MatrixXd mode_kernel_matrix(const DomainSpec& d, int l)
{
    check_lmax(l);
    static std::mutex mtx;
    static std::map<std::tuple<int, double, int>, std::shared_ptr<const Eigen::MatrixXd>> cache;
    std::shared_ptr<const Eigen::MatrixXd> K;
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find({d.Nu, d.R, l});
        if (it != cache.end())
            K = it->second;
    }
    if (!K) {
        K = std::make_shared<const Eigen::MatrixXd>(build_kernel(d, l));
        std::lock_guard<std::mutex> lock(mtx);
        if (cache.size() > 64)
            cache.clear();
        cache[{d.Nu, d.R, l}] = K;
    }
    return *K;
}

AxiField newtonian_potential(const AxiField& f, const PotentialOptions& opts)
{
    const auto& d = f.domain();
    const int L = effective_lmax(f, opts);
    const AxiField g = clamp_support(f, opts.clamp_to_R1);
    LegendreModes m = legendre_analyze(g, L);
    warn_on_tail(m);
    LegendreModes U(L, d.Nu);
    for (int l = 0; l <= L; l += 2)
        U.matrix().row(l / 2) = mode_kernel_matrix(d, l) * m.matrix().row(l / 2).transpose();
    AxiField out = legendre_synthesize(U, d);
    // The origin is one point: only the monopole survives there.
    for (int j = 0; j < d.Ntheta; ++j)
        out(0, j) = U(0, 0);
    return out;
}

std::vector<double> multipole_moments(const LegendreModes& modes, const DomainSpec& d)
{
    std::vector<double> q(static_cast<std::size_t>(modes.count()), 0.0);
    for (int m = 0; m < modes.count(); ++m) {
        const auto w = radial_moment_weights(d, 2 * m + 2);
        double s = 0.0;
        for (int k = 0; k < d.Nu; ++k)
            s += w[k] * modes.matrix()(m, k);
        q[m] = s;
    }
    return q;
}

double exterior_potential(const std::vector<double>& moments, double r, double z)
{
    const double u = std::hypot(r, z);
    if (u == 0.0)
        throw DomainError("exterior_potential: point at the origin");
    const double mu = z / u;
    double s = 0.0;
    for (std::size_t m = 0; m < moments.size(); ++m) {
        const int l = 2 * static_cast<int>(m);
        s += 4.0 * kPi / (2.0 * l + 1.0) * moments[m] * legendre_p(l, mu) / std::pow(u, l + 1);
    }
    return s;
}

std::vector<double> potential_boundary_trace(const AxiField& f, const PotentialOptions& opts)
{
    const auto& d = f.domain();
    const int L = effective_lmax(f, opts);
    const AxiField g = clamp_support(f, opts.clamp_to_R1);
    const auto moments = multipole_moments(legendre_analyze(g, L), d);
    std::vector<double> trace(static_cast<std::size_t>(d.Ntheta));
    for (int j = 0; j < d.Ntheta; ++j)
        trace[j] = exterior_potential(moments, d.R * d.sin_theta(j), d.R * d.cos_theta(j));
    return trace;
}

double total_integral(const AxiField& f)
{
    const auto& d = f.domain();
    const auto tr = angular_transform(d.Ntheta, 0);
    const auto w = radial_moment_weights(d, 2);
    double s = 0.0;
    for (int i = 0; i < d.Nu; ++i) {
        double f0 = 0.0;
        for (int j = 0; j < d.Ntheta; ++j)
            f0 += tr->analysis(0, j) * f(i, j);
        s += w[i] * f0;
    }
    return 4.0 * kPi * s;
}

} // namespace rotstar
