#include "lipsysid/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace lipsysid {

LatticeGrid build_lattices(const Box& space, const Vector& delta) {
    const int n = space.dim();
    if (static_cast<int>(delta.size()) != n)
        throw std::invalid_argument("build_lattices: delta dimension mismatch");
    for (double d : delta)
        if (d <= 0.0) throw std::invalid_argument("build_lattices: delta must be positive");
    for (int j = 0; j < n; ++j)
        if (!(space.hi[j] > space.lo[j]) || !std::isfinite(space.lo[j]) ||
            !std::isfinite(space.hi[j]))
            throw std::invalid_argument("build_lattices: state space must be a bounded box");

    LatticeGrid grid;
    grid.delta = delta;
    grid.space = space;
    grid.counts.resize(n);
    size_t total = 1;
    for (int j = 0; j < n; ++j) {
        grid.counts[j] =
            static_cast<int>(std::ceil((space.hi[j] - space.lo[j]) / (2.0 * delta[j]) - 1e-12));
        grid.counts[j] = std::max(grid.counts[j], 1);
        total *= static_cast<size_t>(grid.counts[j]);
    }
    grid.centers.reserve(total);
    std::vector<int> idx(n, 0);
    for (size_t c = 0; c < total; ++c) {
        Vector center(n);
        for (int j = 0; j < n; ++j) center[j] = space.lo[j] + (2.0 * idx[j] + 1.0) * delta[j];
        grid.centers.push_back(std::move(center));
        for (int j = n - 1; j >= 0; --j) {
            if (++idx[j] < grid.counts[j]) break;
            idx[j] = 0;
        }
    }
    return grid;
}

LatticeGrid build_lattices(const Box& space, double delta) {
    return build_lattices(space, Vector(space.dim(), delta));
}

namespace {

// Exact max distance from x to the 2^n vertices of the lattice box. Per
// coordinate the farthest vertex is whichever side is farther, so the max
// decomposes and no explicit enumeration is needed even for n = 4.
double max_vertex_distance(const Vector& x, const Vector& center, const Vector& delta) {
    double s = 0.0;
    for (size_t j = 0; j < x.size(); ++j) {
        const double d =
            std::max(std::abs(x[j] - (center[j] - delta[j])), std::abs(x[j] - (center[j] + delta[j])));
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

VerifyReport estimation_error_bound(const ModelFn& model, double gamma, const Dataset& d,
                                    double k_sys, const Box& space, const Vector& delta, int q,
                                    double c) {
    if (d.samples.empty()) throw std::invalid_argument("estimation_error_bound: empty dataset");
    if (q < 1) throw std::invalid_argument("estimation_error_bound: q must be >= 1");
    // K = 0 is allowed so the degenerate exact-model limit stays testable.
    if (k_sys < 0.0) throw std::invalid_argument("estimation_error_bound: K must be non-negative");
    const auto t0 = std::chrono::steady_clock::now();

    const LatticeGrid grid = build_lattices(space, delta);
    const KdTree tree(d.inputs());

    // The model is only ever queried at data points; cache the residuals.
    std::vector<double> residual(d.samples.size());
    for (size_t i = 0; i < d.samples.size(); ++i)
        residual[i] = norm2(vsub(model(d.samples[i].x), d.samples[i].y));

    const int n = space.dim();
    const double kg = k_sys + gamma;
    VerifyReport report;
    report.gamma = gamma;
    report.k_sys = k_sys;
    report.delta = *std::max_element(delta.begin(), delta.end());
    report.c = c;
    report.lattice_count = grid.centers.size();
    report.lattice_errors.resize(grid.centers.size());

    double worst = 0.0;
    Vector lo(n), hi(n);
    for (size_t i = 0; i < grid.centers.size(); ++i) {
        const Vector& center = grid.centers[i];
        for (int j = 0; j < n; ++j) {
            lo[j] = center[j] - delta[j];
            hi[j] = center[j] + delta[j];
        }
        std::vector<int> candidates = tree.range_query(lo, hi);
        if (candidates.empty()) candidates = tree.nearest(center, q);

        double e_i = std::numeric_limits<double>::infinity();
        for (int j : candidates) {
            const double eps =
                residual[j] + kg * max_vertex_distance(d.samples[j].x, center, delta);
            e_i = std::min(e_i, eps);
        }
        report.lattice_errors[i] = e_i;
        worst = std::max(worst, e_i);
    }
    report.bound = worst + c;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

VerifyReport estimation_error_bound(const ModelFn& model, double gamma, const Dataset& d,
                                    double k_sys, const Box& space, double delta, int q,
                                    double c) {
    return estimation_error_bound(model, gamma, d, k_sys, space, Vector(space.dim(), delta), q, c);
}

double prop3_bound(const std::vector<CoverBall>& cover, const std::vector<Vector>& residuals,
                   double k_sys, double gamma, double c, int n, double p) {
    if (cover.empty()) throw std::invalid_argument("prop3_bound: empty cover");
    if (cover.size() != residuals.size())
        throw std::invalid_argument("prop3_bound: cover/residual size mismatch");
    const double expo = std::isinf(p) ? 0.5 : std::max(0.0, 0.5 - 1.0 / p);
    const double factor = std::pow(static_cast<double>(n), expo);
    double worst = 0.0;
    for (size_t i = 0; i < cover.size(); ++i)
        worst = std::max(worst, factor * (k_sys + gamma) * cover[i].radius + norm2(residuals[i]));
    return c + worst;
}

double empirical_lipschitz(const Dataset& d, int k_neighbors) {
    if (d.samples.size() < 2)
        throw std::invalid_argument("empirical_lipschitz: need at least 2 samples");
    const KdTree tree(d.inputs());
    double best = 0.0;
    bool any = false;
    for (size_t i = 0; i < d.samples.size(); ++i) {
        // +1 because the query point is its own nearest neighbor.
        const std::vector<int> nn = tree.nearest(d.samples[i].x, k_neighbors + 1);
        for (int j : nn) {
            if (j == static_cast<int>(i)) continue;
            const double dx = norm2(vsub(d.samples[i].x, d.samples[j].x));
            if (dx < 1e-9) continue;
            best = std::max(best, norm2(vsub(d.samples[i].y, d.samples[j].y)) / dx);
            any = true;
        }
    }
    if (!any) throw std::runtime_error("empirical_lipschitz: all points coincident");
    return best;
}

double trajectory_deviation_bound(double a, double gamma, double t) {
    if (a < 0.0 || gamma < 0.0 || t < 0.0)
        throw std::invalid_argument("trajectory_deviation_bound: arguments must be nonnegative");
    if (gamma == 0.0) return a * t;
    return a / gamma * (std::expm1(gamma * t));
}

namespace {

unsigned long long mix_seed(unsigned long long seed, unsigned long long idx) {
    unsigned long long z = seed + 0x9e3779b97f4a7c15ULL * (idx + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

TrajectoryBundle rollout_compare(const SystemSpec& sys, const ModelFn& model, double gamma,
                                 double bound_a, int count, double t_end, unsigned long long seed,
                                 double rate_hz) {
    TrajectoryBundle bundle;
    bundle.a = bound_a;
    bundle.gamma = gamma;
    const int dim = sys.state_space.dim();
    const int steps = static_cast<int>(std::round(t_end * rate_hz)) + 1;
    bundle.t.resize(steps);
    for (int s = 0; s < steps; ++s) bundle.t[s] = s / rate_hz;
    bundle.envelope.resize(steps);
    for (int s = 0; s < steps; ++s)
        bundle.envelope[s] = trajectory_deviation_bound(bound_a, gamma, bundle.t[s]);

    for (int r = 0; r < count; ++r) {
        std::mt19937_64 rng(mix_seed(seed, r));
        std::uniform_real_distribution<double> uni(0.0, 1.0);

        Vector x0(dim);
        ArmController ctrl;
        if (sys.kind == SystemKind::TwoLinkArm) {
            // Initial joint angles uniform, zero velocity; low-amplitude
            // evaluation excitation.
            for (int j = 0; j < 2; ++j)
                x0[j] = sys.state_space.lo[j] +
                        uni(rng) * (sys.state_space.hi[j] - sys.state_space.lo[j]);
            x0[2] = x0[3] = 0.0;
            ctrl.q0 = {x0[0], x0[1]};
            ctrl.phases = {uni(rng) * 2.0 * M_PI, uni(rng) * 2.0 * M_PI};
            ctrl.amp = 30.0;
            ctrl.freq = 0.25;
        } else {
            for (int j = 0; j < dim; ++j)
                x0[j] = sys.state_space.lo[j] +
                        uni(rng) * (sys.state_space.hi[j] - sys.state_space.lo[j]);
        }

        // Stack (true state, model state) so both share the same RK4 grid.
        OdeRhs stacked;
        if (sys.kind == SystemKind::Linear) {
            stacked = [&model](double, const Vector& s) {
                const Vector x{s[0], s[1]}, z{s[2], s[3]};
                const Vector fx = f_linear(x);
                const Vector fz = model(z);
                return Vector{fx[0], fx[1], fz[0], fz[1]};
            };
        } else if (sys.kind == SystemKind::VanDerPol) {
            const double mu = sys.mu;
            stacked = [&model, mu](double, const Vector& s) {
                const Vector x{s[0], s[1]}, z{s[2], s[3]};
                const Vector fx = f_vdp(x, mu);
                const Vector fz = model(z);
                return Vector{fx[0], fx[1], fz[0], fz[1]};
            };
        } else {
            const ArmParams& p = sys.arm;
            stacked = [&model, &p, ctrl](double t, const Vector& s) {
                const Vector q{s[0], s[1]}, qd{s[2], s[3]};
                const Vector zq{s[4], s[5]}, zqd{s[6], s[7]};
                const Vector tau_true = arm_controller_torque(p, ctrl, t, q, qd);
                const Vector dx = f_arm(p, q, qd, tau_true);
                // Learned dynamics: known rigid-body part minus the
                // network's friction-residual estimate.
                const Vector tau_model = arm_controller_torque(p, ctrl, t, zq, zqd);
                const Vector cq = matvec(arm_coriolis(p, zq, zqd), zqd);
                const Vector grav = arm_gravity(p, zq);
                Vector rhs(2);
                for (int i = 0; i < 2; ++i) rhs[i] = tau_model[i] - cq[i] - grav[i];
                const Matrix nominal = solve(arm_inertia(p, zq), Matrix::from_column(rhs));
                const Vector phi = model({zq[0], zq[1], zqd[0], zqd[1]});
                return Vector{dx[0], dx[1], dx[2], dx[3],
                              zqd[0], zqd[1], nominal(0, 0) - phi[0], nominal(1, 0) - phi[1]};
            };
        }

        Vector s0(2 * dim);
        for (int j = 0; j < dim; ++j) s0[j] = s0[dim + j] = x0[j];

        RolloutResult result;
        try {
            const Trajectory traj = rk4_integrate(stacked, s0, t_end, rate_hz);
            result.deviation.reserve(traj.clean.size());
            for (size_t k = 0; k < traj.clean.size(); ++k) {
                const Vector& s = traj.clean[k];
                Vector x(dim), z(dim);
                for (int j = 0; j < dim; ++j) {
                    x[j] = s[j];
                    z[j] = s[dim + j];
                }
                result.deviation.push_back(norm2(vsub(x, z)));
                if (!result.exited_space &&
                    (!sys.state_space.contains(x) || !sys.state_space.contains(z))) {
                    result.exited_space = true;
                    result.exit_time = traj.t[k];
                }
            }
        } catch (const std::runtime_error&) {
            result.diverged = true;
        }
        bundle.rollouts.push_back(std::move(result));
    }

    bundle.mean.assign(steps, 0.0);
    bundle.stddev.assign(steps, 0.0);
    std::vector<int> counts(steps, 0);
    for (const RolloutResult& r : bundle.rollouts)
        for (size_t k = 0; k < r.deviation.size(); ++k) {
            bundle.mean[k] += r.deviation[k];
            ++counts[k];
        }
    for (int k = 0; k < steps; ++k)
        if (counts[k] > 0) bundle.mean[k] /= counts[k];
    for (const RolloutResult& r : bundle.rollouts)
        for (size_t k = 0; k < r.deviation.size(); ++k) {
            const double d = r.deviation[k] - bundle.mean[k];
            bundle.stddev[k] += d * d;
        }
    for (int k = 0; k < steps; ++k)
        if (counts[k] > 0) bundle.stddev[k] = std::sqrt(bundle.stddev[k] / counts[k]);
    return bundle;
}

void save_verify_report(const VerifyReport& report, const LatticeGrid& grid,
                        const std::string& csv_path, const std::string& summary_path) {
    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("cannot write verify report: " + csv_path);
    const int n = grid.space.dim();
    os << "lattice";
    for (int j = 1; j <= n; ++j) os << ",c" << j;
    os << ",e\n";
    char buf[64];
    for (size_t i = 0; i < grid.centers.size(); ++i) {
        os << i;
        for (int j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof(buf), ",%.17g", grid.centers[i][j]);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g\n", report.lattice_errors[i]);
        os << buf;
    }

    std::ofstream ss(summary_path);
    if (!ss) throw std::runtime_error("cannot write verify summary: " + summary_path);
    char line[256];
    std::snprintf(line, sizeof(line), "gamma = %.17g\n", report.gamma);
    ss << line;
    std::snprintf(line, sizeof(line), "K = %.17g\n", report.k_sys);
    ss << line;
    std::snprintf(line, sizeof(line), "delta = %.17g\n", report.delta);
    ss << line;
    std::snprintf(line, sizeof(line), "c = %.17g\n", report.c);
    ss << line;
    ss << "lattices = " << report.lattice_count << '\n';
    std::snprintf(line, sizeof(line), "bound = %.17g\n", report.bound);
    ss << line;
    std::snprintf(line, sizeof(line), "wall_time_s = %.6g\n", report.wall_time_s);
    ss << line;
}

void save_rollout_csv(const TrajectoryBundle& bundle, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write rollout csv: " + path);
    os << "t,mean,stddev,envelope\n";
    char buf[160];
    for (size_t k = 0; k < bundle.t.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", bundle.t[k], bundle.mean[k],
                      bundle.stddev[k], bundle.envelope[k]);
        os << buf;
    }
}

}  // namespace lipsysid
