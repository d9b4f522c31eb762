#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lipsysid/dataset.hpp"
#include "lipsysid/dynamics.hpp"
#include "lipsysid/kdtree.hpp"

namespace lipsysid {

using ModelFn = std::function<Vector(const Vector&)>;

// Regular grid of l-inf balls of radius delta (per dimension) whose union
// covers the box; centers are spaced 2*delta apart.
struct LatticeGrid {
    Vector delta;  // per-dimension radius
    Box space;
    std::vector<Vector> centers;
    std::vector<int> counts;  // centers per dimension
};

LatticeGrid build_lattices(const Box& space, double delta);
LatticeGrid build_lattices(const Box& space, const Vector& delta);

struct VerifyReport {
    double gamma = 0.0;       // model Lipschitz bound
    double k_sys = 0.0;       // system Lipschitz bound K
    double delta = 0.0;       // lattice radius (max over dims if anisotropic)
    size_t lattice_count = 0;
    double bound = 0.0;       // certified estimation error bound Delta
    double c = 0.0;           // label-accuracy constant added to the bound
    std::vector<double> lattice_errors;  // e_i per lattice
    double wall_time_s = 0.0;
};

// Lattice-based certification: per lattice, gather the data points inside
// the box (falling back to the q nearest to the center), score each with
//   eps_j = ||model(x_j) - y_j||_2 + (K + gamma) max_k ||x_j - v_k||_2
// over the 2^n lattice vertices, take the min, and bound the error over the
// space by the max across lattices (plus c).
VerifyReport estimation_error_bound(const ModelFn& model, double gamma, const Dataset& d,
                                    double k_sys, const Box& space, const Vector& delta,
                                    int q = 5, double c = 0.0);
VerifyReport estimation_error_bound(const ModelFn& model, double gamma, const Dataset& d,
                                    double k_sys, const Box& space, double delta, int q = 5,
                                    double c = 0.0);

struct CoverBall {
    Vector center;
    double radius = 0.0;
};

// Cover-based bound: c + max_i [ n^{max(0, 1/2 - 1/p)} (K + gamma) r_i +
// ||e_i||_2 ], with p the ball norm (use INFINITY for l-inf).
double prop3_bound(const std::vector<CoverBall>& cover, const std::vector<Vector>& residuals,
                   double k_sys, double gamma, double c, int n, double p);

// Finite-difference estimate of the system Lipschitz constant: max label
// difference quotient over each point's k nearest neighbors.
double empirical_lipschitz(const Dataset& d, int k_neighbors = 8);

// (a/gamma)(e^{gamma t} - 1); the gamma -> 0 limit a*t is used when
// gamma = 0.
double trajectory_deviation_bound(double a, double gamma, double t);

struct RolloutResult {
    std::vector<double> deviation;  // ||x(t) - z(t)||_2 per step
    bool diverged = false;          // non-finite state; curve truncated
    bool exited_space = false;      // either trajectory left the state space
    double exit_time = -1.0;        // first exit, -1 if never
};

struct TrajectoryBundle {
    std::vector<double> t;
    std::vector<RolloutResult> rollouts;
    std::vector<double> mean;      // mean deviation per step (non-truncated curves)
    std::vector<double> stddev;
    std::vector<double> envelope;  // trajectory_deviation_bound(a, gamma, t)
    double a = 0.0;
    double gamma = 0.0;
};

// Integrates the true system and the learned model from shared initial
// conditions (arm: shared controller with matched phases) and records the
// per-step l2 deviation together with the certified envelope.
TrajectoryBundle rollout_compare(const SystemSpec& sys, const ModelFn& model, double gamma,
                                 double bound_a, int count, double t_end,
                                 unsigned long long seed, double rate_hz = 100.0);

void save_verify_report(const VerifyReport& report, const LatticeGrid& grid,
                        const std::string& csv_path, const std::string& summary_path);

void save_rollout_csv(const TrajectoryBundle& bundle, const std::string& path);

}  // namespace lipsysid
