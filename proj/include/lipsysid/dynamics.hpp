#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lipsysid/arm.hpp"
#include "lipsysid/linalg.hpp"

namespace lipsysid {

// Axis-aligned box of per-coordinate intervals.
struct Box {
    Vector lo;
    Vector hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vector& x) const;
};

enum class SystemKind { Linear, VanDerPol, TwoLinkArm };

struct SystemSpec {
    SystemKind kind = SystemKind::Linear;
    double mu = 0.02;  // Van der Pol only
    ArmParams arm;     // arm only
    Box state_space;

    static SystemSpec linear();
    static SystemSpec van_der_pol(double mu = 0.02);
    static SystemSpec two_link_arm();

    std::string name() const;
};

// Stable spiral with poles -0.2 +/- 2i.
Vector f_linear(const Vector& x);
Vector f_vdp(const Vector& x, double mu);

struct SamplingSpec {
    double rate_hz = 100.0;
    double duration_s = 1.0;
    int trajectory_count = 1;
    double noise_variance = 0.0;
    unsigned long long seed = 0;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vector> clean;
    std::vector<Vector> noisy;
    // Arm only: applied torques at sample times, controller phases, setpoint.
    std::vector<Vector> torques;
    Vector phases;
    Vector q0;
};

using OdeRhs = std::function<Vector(double, const Vector&)>;

// Classic RK4 at a fine internal step, decimated to the sampling grid.
// Throws on non-finite states. dt_internal must divide the sample interval.
Trajectory rk4_integrate(const OdeRhs& f, const Vector& x0, double t_end, double sample_rate_hz,
                         double dt_internal = 1e-3);

// Fills traj.noisy with clean + iid N(0, sigma2) per coordinate per sample.
void add_noise(Trajectory& traj, double sigma2, unsigned long long seed);

// Zero-phase centered moving average; the window shrinks symmetrically at
// the edges. window must be odd.
std::vector<Vector> lowpass_filter(const std::vector<Vector>& series, int window);

// Fourth-order central differences on the interior; the two samples at each
// end have no estimate and are returned as-is but flagged by valid range
// [2, n-3]. Callers drop them when assembling datasets.
std::vector<Vector> central_diff4(const std::vector<Vector>& series, double dt);

// Simulates trajectory_count trajectories with uniform initial conditions
// over the state space (arm: angles uniform, velocities zero) and
// per-trajectory seed streams. Adds measurement noise.
std::vector<Trajectory> simulate_system(const SystemSpec& sys, const SamplingSpec& sampling);

}  // namespace lipsysid
