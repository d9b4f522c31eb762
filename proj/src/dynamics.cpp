#include "lipsysid/dynamics.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace lipsysid {

bool Box::contains(const Vector& x) const {
    for (size_t i = 0; i < lo.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

SystemSpec SystemSpec::linear() {
    SystemSpec s;
    s.kind = SystemKind::Linear;
    s.state_space = {{-3.0, -3.0}, {3.0, 3.0}};
    return s;
}

SystemSpec SystemSpec::van_der_pol(double mu) {
    SystemSpec s;
    s.kind = SystemKind::VanDerPol;
    s.mu = mu;
    s.state_space = {{-2.5, -2.5}, {2.5, 2.5}};
    return s;
}

SystemSpec SystemSpec::two_link_arm() {
    SystemSpec s;
    s.kind = SystemKind::TwoLinkArm;
    const double qmax = 3.0 * M_PI / 4.0;
    s.state_space = {{-qmax, -qmax, -0.1, -0.1}, {qmax, qmax, 0.1, 0.1}};
    return s;
}

std::string SystemSpec::name() const {
    switch (kind) {
        case SystemKind::Linear:
            return "linear";
        case SystemKind::VanDerPol:
            return "vdp";
        case SystemKind::TwoLinkArm:
            return "arm";
    }
    return "unknown";
}

Vector f_linear(const Vector& x) {
    return {-0.2 * x[0] + 2.0 * x[1], -2.0 * x[0] - 0.2 * x[1]};
}

Vector f_vdp(const Vector& x, double mu) {
    return {x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0]};
}

Trajectory rk4_integrate(const OdeRhs& f, const Vector& x0, double t_end, double sample_rate_hz,
                         double dt_internal) {
    const double sample_dt = 1.0 / sample_rate_hz;
    const int substeps = static_cast<int>(std::round(sample_dt / dt_internal));
    if (substeps < 1 || std::abs(substeps * dt_internal - sample_dt) > 1e-12)
        throw std::invalid_argument("rk4_integrate: dt_internal must divide the sample interval");
    const int n_samples = static_cast<int>(std::round(t_end * sample_rate_hz)) + 1;

    Trajectory traj;
    Vector x = x0;
    double t = 0.0;
    traj.t.push_back(t);
    traj.clean.push_back(x);
    const size_t dim = x.size();
    Vector k1, k2, k3, k4, tmp(dim);
    for (int s = 1; s < n_samples; ++s) {
        for (int sub = 0; sub < substeps; ++sub) {
            const double h = dt_internal;
            k1 = f(t, x);
            for (size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
            k2 = f(t + 0.5 * h, tmp);
            for (size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
            k3 = f(t + 0.5 * h, tmp);
            for (size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * k3[i];
            k4 = f(t + h, tmp);
            for (size_t i = 0; i < dim; ++i)
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            t += h;
        }
        for (double xi : x)
            if (!std::isfinite(xi)) throw std::runtime_error("rk4_integrate: non-finite state");
        // Keep the time grid exact.
        t = s * sample_dt;
        traj.t.push_back(t);
        traj.clean.push_back(x);
    }
    return traj;
}

void add_noise(Trajectory& traj, double sigma2, unsigned long long seed) {
    traj.noisy = traj.clean;
    if (sigma2 <= 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, std::sqrt(sigma2));
    for (Vector& x : traj.noisy)
        for (double& xi : x) xi += dist(rng);
}

std::vector<Vector> lowpass_filter(const std::vector<Vector>& series, int window) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("lowpass_filter: window must be odd and >= 1");
    if (window == 1 || series.empty()) return series;
    const int n = static_cast<int>(series.size());
    const int half = window / 2;
    std::vector<Vector> out(series.size());
    for (int i = 0; i < n; ++i) {
        const int h = std::min({half, i, n - 1 - i});
        Vector acc(series[i].size(), 0.0);
        for (int j = i - h; j <= i + h; ++j)
            for (size_t d = 0; d < acc.size(); ++d) acc[d] += series[j][d];
        for (double& a : acc) a /= static_cast<double>(2 * h + 1);
        out[i] = std::move(acc);
    }
    return out;
}

std::vector<Vector> central_diff4(const std::vector<Vector>& series, double dt) {
    if (series.size() < 5)
        throw std::invalid_argument("central_diff4: series shorter than the stencil");
    const int n = static_cast<int>(series.size());
    std::vector<Vector> out(series.size());
    for (int i = 0; i < n; ++i) {
        if (i < 2 || i >= n - 2) {
            out[i] = Vector(series[i].size(), 0.0);
            continue;
        }
        Vector d(series[i].size());
        for (size_t k = 0; k < d.size(); ++k)
            d[k] = (-series[i + 2][k] + 8.0 * series[i + 1][k] - 8.0 * series[i - 1][k] +
                    series[i - 2][k]) /
                   (12.0 * dt);
        out[i] = std::move(d);
    }
    return out;
}

namespace {

unsigned long long substream(unsigned long long seed, unsigned long long idx) {
    // splitmix-style mixing for independent per-trajectory streams
    unsigned long long z = seed + 0x9e3779b97f4a7c15ULL * (idx + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::vector<Trajectory> simulate_system(const SystemSpec& sys, const SamplingSpec& sampling) {
    std::vector<Trajectory> out;
    out.reserve(sampling.trajectory_count);
    for (int i = 0; i < sampling.trajectory_count; ++i) {
        const unsigned long long s = substream(sampling.seed, i);
        std::mt19937_64 rng(s);
        std::uniform_real_distribution<double> uni(0.0, 1.0);

        Trajectory traj;
        if (sys.kind == SystemKind::TwoLinkArm) {
            Vector q0(2);
            for (int d = 0; d < 2; ++d)
                q0[d] = sys.state_space.lo[d] +
                        uni(rng) * (sys.state_space.hi[d] - sys.state_space.lo[d]);
            ArmController ctrl;
            ctrl.q0 = q0;
            ctrl.phases = {uni(rng) * 2.0 * M_PI, uni(rng) * 2.0 * M_PI};
            const ArmParams& p = sys.arm;
            OdeRhs rhs = [&p, ctrl](double t, const Vector& x) {
                const Vector q{x[0], x[1]}, qd{x[2], x[3]};
                return f_arm(p, q, qd, arm_controller_torque(p, ctrl, t, q, qd));
            };
            traj = rk4_integrate(rhs, {q0[0], q0[1], 0.0, 0.0}, sampling.duration_s,
                                 sampling.rate_hz);
            traj.q0 = q0;
            traj.phases = ctrl.phases;
            traj.torques.reserve(traj.t.size());
            for (size_t k = 0; k < traj.t.size(); ++k) {
                const Vector q{traj.clean[k][0], traj.clean[k][1]};
                const Vector qd{traj.clean[k][2], traj.clean[k][3]};
                traj.torques.push_back(arm_controller_torque(p, ctrl, traj.t[k], q, qd));
            }
        } else {
            Vector x0(sys.state_space.dim());
            for (int d = 0; d < sys.state_space.dim(); ++d)
                x0[d] = sys.state_space.lo[d] +
                        uni(rng) * (sys.state_space.hi[d] - sys.state_space.lo[d]);
            OdeRhs rhs;
            if (sys.kind == SystemKind::Linear)
                rhs = [](double, const Vector& x) { return f_linear(x); };
            else {
                const double mu = sys.mu;
                rhs = [mu](double, const Vector& x) { return f_vdp(x, mu); };
            }
            traj = rk4_integrate(rhs, x0, sampling.duration_s, sampling.rate_hz);
        }
        add_noise(traj, sampling.noise_variance, substream(s, 1));
        out.push_back(std::move(traj));
    }
    return out;
}

}  // namespace lipsysid
