#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "lipsysid/dataset.hpp"
#include "lipsysid/dynamics.hpp"

using namespace lipsysid;

TEST_CASE("f_linear hand values") {
    CHECK(f_linear({0.0, 0.0})[0] == doctest::Approx(0.0));
    CHECK(f_linear({0.0, 0.0})[1] == doctest::Approx(0.0));
    CHECK(f_linear({1.0, 0.0})[0] == doctest::Approx(-0.2));
    CHECK(f_linear({1.0, 0.0})[1] == doctest::Approx(-2.0));
    CHECK(f_linear({0.0, 1.0})[0] == doctest::Approx(2.0));
    CHECK(f_linear({0.0, 1.0})[1] == doctest::Approx(-0.2));
}

TEST_CASE("f_vdp hand values") {
    CHECK(f_vdp({0.0, 0.0}, 0.02)[0] == doctest::Approx(0.0));
    CHECK(f_vdp({0.0, 0.0}, 0.02)[1] == doctest::Approx(0.0));
    // (1 - x1^2) = 0 kills the mu term
    CHECK(f_vdp({1.0, 1.0}, 0.02)[0] == doctest::Approx(1.0));
    CHECK(f_vdp({1.0, 1.0}, 0.02)[1] == doctest::Approx(-1.0));
    CHECK(f_vdp({0.0, 1.0}, 0.02)[0] == doctest::Approx(1.0));
    CHECK(f_vdp({0.0, 1.0}, 0.02)[1] == doctest::Approx(0.02));
}

TEST_CASE("rk4 matches analytic decay") {
    const OdeRhs decay = [](double, const Vector& x) { return Vector{-x[0]}; };
    const Trajectory traj = rk4_integrate(decay, {1.0}, 1.0, 100.0);
    CHECK(traj.clean.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(traj.t.back() == doctest::Approx(1.0));
    CHECK(traj.t.size() == traj.clean.size());
}

TEST_CASE("rk4 keeps a constant trajectory constant") {
    const OdeRhs zero = [](double, const Vector& x) { return Vector(x.size(), 0.0); };
    const Trajectory traj = rk4_integrate(zero, {3.0, -4.0}, 2.0, 100.0);
    for (const Vector& x : traj.clean) {
        CHECK(x[0] == doctest::Approx(3.0));
        CHECK(x[1] == doctest::Approx(-4.0));
    }
}

TEST_CASE("linear system norm decays as exp(-0.2 t)") {
    const OdeRhs f = [](double, const Vector& x) { return f_linear(x); };
    const Trajectory traj = rk4_integrate(f, {1.0, 0.0}, 12.0, 100.0);
    for (size_t i = 0; i < traj.t.size(); i += 100) {
        const double want = std::exp(-0.2 * traj.t[i]);
        const double got = std::hypot(traj.clean[i][0], traj.clean[i][1]);
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
    CHECK(std::hypot(traj.clean.back()[0], traj.clean.back()[1]) ==
          doctest::Approx(std::exp(-2.4)).epsilon(1e-6));
}

TEST_CASE("rk4 rejects a non-dividing internal step and blown-up states") {
    const OdeRhs f = [](double, const Vector& x) { return f_linear(x); };
    CHECK_THROWS(rk4_integrate(f, {1.0, 0.0}, 1.0, 100.0, 3e-3));
    const OdeRhs blow = [](double, const Vector& x) { return Vector{x[0] * x[0] + 1.0}; };
    CHECK_THROWS(rk4_integrate(blow, {10.0}, 5.0, 100.0));
}

TEST_CASE("arm equilibrium: gravity-compensating torque gives zero acceleration") {
    const ArmParams p;
    const Vector q{0.3, -0.7}, qd{0.0, 0.0};
    const Vector tau = arm_gravity(p, q);
    const Vector dx = f_arm(p, q, qd, tau);
    CHECK(dx[0] == doctest::Approx(0.0));
    CHECK(dx[1] == doctest::Approx(0.0));
    CHECK(dx[2] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(dx[3] == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("arm friction hand value and zero slice") {
    const ArmParams p;
    const Vector f0 = arm_friction(p, {0.0, 0.0});
    CHECK(f0[0] == doctest::Approx(0.0));
    CHECK(f0[1] == doctest::Approx(0.0));

    // F_f((0.1, 0))_1 = 40*0.1 + 2*tanh(10*0.1)
    const Vector f1 = arm_friction(p, {0.1, 0.0});
    CHECK(f1[0] == doctest::Approx(4.0 + 2.0 * std::tanh(1.0)).epsilon(1e-12));
    CHECK(f1[0] == doctest::Approx(5.5232).epsilon(1e-4));
    CHECK(f1[1] == doctest::Approx(0.0));

    // the residual M^{-1} F_f vanishes identically on the qd = 0 slice
    const Vector r = arm_friction_residual(p, {1.0, -0.5}, {0.0, 0.0});
    CHECK(r[0] == doctest::Approx(0.0));
    CHECK(r[1] == doctest::Approx(0.0));
}

TEST_CASE("arm inertia is symmetric positive definite") {
    const ArmParams p;
    for (double q2 : {-2.0, -0.5, 0.0, 1.0, 2.5}) {
        const Matrix m = arm_inertia(p, {0.4, q2});
        CHECK(m(0, 1) == doctest::Approx(m(1, 0)));
        CHECK(m(0, 0) > 0.0);
        CHECK(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) > 0.0);
    }
}

TEST_CASE("arm controller reduces to gravity at the setpoint") {
    const ArmParams p;
    ArmController ctrl;
    ctrl.q0 = {0.5, -0.2};
    ctrl.phases = {0.0, 0.0};  // sin(0) = 0 at t = 0
    ctrl.amp = 100.0;
    ctrl.freq = 1.0;
    const Vector tau = arm_controller_torque(p, ctrl, 0.0, ctrl.q0, {0.0, 0.0});
    const Vector g = arm_gravity(p, ctrl.q0);
    CHECK(tau[0] == doctest::Approx(g[0]));
    CHECK(tau[1] == doctest::Approx(g[1]));
}

TEST_CASE("add_noise is seed-deterministic with the right variance") {
    const OdeRhs zero = [](double, const Vector& x) { return Vector(x.size(), 0.0); };
    Trajectory traj = rk4_integrate(zero, {0.0}, 1000.0, 100.0);
    add_noise(traj, 1e-4, 7);

    double mean = 0.0, var = 0.0;
    for (const Vector& y : traj.noisy) mean += y[0];
    mean /= static_cast<double>(traj.noisy.size());
    for (const Vector& y : traj.noisy) var += (y[0] - mean) * (y[0] - mean);
    var /= static_cast<double>(traj.noisy.size());
    CHECK(var == doctest::Approx(1e-4).epsilon(0.05));

    Trajectory again = rk4_integrate(zero, {0.0}, 1000.0, 100.0);
    add_noise(again, 1e-4, 7);
    CHECK(again.noisy[123][0] == traj.noisy[123][0]);

    Trajectory other = rk4_integrate(zero, {0.0}, 1000.0, 100.0);
    add_noise(other, 1e-4, 8);
    CHECK(other.noisy[123][0] != traj.noisy[123][0]);

    Trajectory clean = rk4_integrate(zero, {5.0}, 1.0, 100.0);
    add_noise(clean, 0.0, 7);
    for (size_t i = 0; i < clean.noisy.size(); ++i) CHECK(clean.noisy[i][0] == clean.clean[i][0]);
}

TEST_CASE("lowpass_filter hand cases") {
    const std::vector<Vector> constant(10, Vector{2.5});
    for (const Vector& v : lowpass_filter(constant, 5)) CHECK(v[0] == doctest::Approx(2.5));

    std::vector<Vector> ramp;
    for (int i = 0; i < 8; ++i) ramp.push_back({static_cast<double>(i)});
    const auto id = lowpass_filter(ramp, 1);
    for (int i = 0; i < 8; ++i) CHECK(id[i][0] == doctest::Approx(i));

    std::vector<Vector> alt;
    for (int i = 0; i < 9; ++i) alt.push_back({i % 2 == 0 ? 1.0 : -1.0});
    const auto f = lowpass_filter(alt, 3);
    for (int i = 1; i < 8; ++i) CHECK(f[i][0] == doctest::Approx(-alt[i][0] / 3.0));

    CHECK_THROWS(lowpass_filter(alt, 4));  // window must be odd
}

TEST_CASE("central_diff4 is exact through degree 4") {
    const double dt = 0.01;
    std::vector<Vector> series;
    for (int i = 0; i <= 300; ++i) {
        const double t = i * dt;
        series.push_back({t * t * t * t});
    }
    const auto d = central_diff4(series, dt);
    // derivative of t^4 at t = 1 (index 100) is exactly 4
    CHECK(d[100][0] == doctest::Approx(4.0).epsilon(1e-12));
    for (int i = 2; i < 299; ++i) {
        const double t = i * dt;
        CHECK(d[i][0] == doctest::Approx(4.0 * t * t * t).epsilon(1e-9));
    }

    const std::vector<Vector> constant(10, Vector{3.0});
    const auto dc = central_diff4(constant, dt);
    for (int i = 2; i < 8; ++i) CHECK(dc[i][0] == doctest::Approx(0.0));

    CHECK_THROWS(central_diff4(std::vector<Vector>(4, Vector{0.0}), dt));
}

TEST_CASE("central_diff4 error on sin is O(dt^4)") {
    const double dt = 0.01;
    std::vector<Vector> series;
    for (int i = 0; i <= 100; ++i) series.push_back({std::sin(i * dt)});
    const auto d = central_diff4(series, dt);
    double worst = 0.0;
    for (int i = 2; i <= 98; ++i) worst = std::max(worst, std::abs(d[i][0] - std::cos(i * dt)));
    CHECK(worst <= 1e-8);
}

TEST_CASE("build_dataset labels noiseless linear trajectories accurately") {
    SystemSpec sys = SystemSpec::linear();
    SamplingSpec sampling;
    sampling.trajectory_count = 3;
    sampling.duration_s = 4.0;
    sampling.noise_variance = 0.0;
    sampling.seed = 5;
    const auto trajectories = simulate_system(sys, sampling);
    const Dataset d = build_dataset(trajectories, sys);

    CHECK(d.input_dim() == 2);
    CHECK(d.output_dim() == 2);
    // 3 trajectories x (401 samples - 8 filter+stencil edge samples)
    CHECK(d.samples.size() == 3 * 393);
    double worst = 0.0;
    for (const Sample& s : d.samples) {
        const Vector want = f_linear(s.x);
        worst = std::max(worst, std::abs(s.y[0] - want[0]));
        worst = std::max(worst, std::abs(s.y[1] - want[1]));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("frictionless arm gives near-zero residual labels") {
    SystemSpec sys = SystemSpec::two_link_arm();
    sys.arm.fv1 = sys.arm.fv2 = 0.0;
    sys.arm.fc1 = sys.arm.fc2 = 0.0;
    SamplingSpec sampling;
    sampling.trajectory_count = 2;
    sampling.duration_s = 2.0;
    sampling.noise_variance = 0.0;
    sampling.seed = 3;
    const auto trajectories = simulate_system(sys, sampling);
    const Dataset d = build_dataset(trajectories, sys);
    REQUIRE(!d.samples.empty());
    CHECK(d.input_dim() == 4);
    CHECK(d.output_dim() == 2);
    double worst = 0.0;
    for (const Sample& s : d.samples)
        worst = std::max({worst, std::abs(s.y[0]), std::abs(s.y[1])});
    CHECK(worst <= 1e-2);  // limited by the acceleration differentiation error
}

TEST_CASE("arm residual labels recover the friction term") {
    SystemSpec sys = SystemSpec::two_link_arm();
    SamplingSpec sampling;
    sampling.trajectory_count = 2;
    sampling.duration_s = 2.0;
    sampling.noise_variance = 0.0;
    sampling.seed = 3;
    const auto trajectories = simulate_system(sys, sampling);
    const Dataset d = build_dataset(trajectories, sys);
    REQUIRE(!d.samples.empty());
    double worst = 0.0;
    for (const Sample& s : d.samples) {
        const Vector want =
            arm_friction_residual(sys.arm, {s.x[0], s.x[1]}, {s.x[2], s.x[3]});
        worst = std::max({worst, std::abs(s.y[0] - want[0]), std::abs(s.y[1] - want[1])});
    }
    CHECK(worst <= 5e-2);  // friction-residual scale is O(1); labels are differentiated estimates
}

TEST_CASE("simulate_system is deterministic and respects the state space") {
    const SystemSpec sys = SystemSpec::van_der_pol();
    SamplingSpec sampling;
    sampling.trajectory_count = 4;
    sampling.duration_s = 1.0;
    sampling.noise_variance = 5e-5;
    sampling.seed = 11;
    const auto a = simulate_system(sys, sampling);
    const auto b = simulate_system(sys, sampling);
    REQUIRE(a.size() == 4);
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(sys.state_space.contains(a[k].clean.front()));
        for (size_t i = 0; i < a[k].noisy.size(); ++i) {
            CHECK(a[k].noisy[i][0] == b[k].noisy[i][0]);
            CHECK(a[k].noisy[i][1] == b[k].noisy[i][1]);
        }
    }
    // distinct trajectories get distinct initial conditions
    CHECK(a[0].clean.front()[0] != a[1].clean.front()[0]);
}

TEST_CASE("dataset CSV round-trip is bit-exact") {
    const SystemSpec sys = SystemSpec::linear();
    SamplingSpec sampling;
    sampling.trajectory_count = 2;
    sampling.duration_s = 1.0;
    sampling.noise_variance = 1e-4;
    sampling.seed = 21;
    Dataset d = build_dataset(simulate_system(sys, sampling), sys);
    d.meta.noise_variance = sampling.noise_variance;
    d.meta.seed = sampling.seed;

    save_dataset(d, "roundtrip.csv", "roundtrip.meta");
    const Dataset back = load_dataset("roundtrip.csv", "roundtrip.meta");
    REQUIRE(back.samples.size() == d.samples.size());
    for (size_t i = 0; i < d.samples.size(); ++i) {
        CHECK(back.samples[i].traj_id == d.samples[i].traj_id);
        CHECK(back.samples[i].t == d.samples[i].t);
        for (size_t j = 0; j < d.samples[i].x.size(); ++j)
            CHECK(back.samples[i].x[j] == d.samples[i].x[j]);
        for (size_t j = 0; j < d.samples[i].y.size(); ++j)
            CHECK(back.samples[i].y[j] == d.samples[i].y[j]);
    }
    CHECK(back.meta.system == "linear");
    CHECK(back.meta.noise_variance == d.meta.noise_variance);
    CHECK(back.meta.rate_hz == d.meta.rate_hz);
    CHECK(back.meta.seed == d.meta.seed);
    std::remove("roundtrip.csv");
    std::remove("roundtrip.meta");
}

TEST_CASE("system presets") {
    const SystemSpec lin = SystemSpec::linear();
    CHECK(lin.name() == "linear");
    CHECK(lin.state_space.lo[0] == doctest::Approx(-3.0));
    CHECK(lin.state_space.hi[1] == doctest::Approx(3.0));

    const SystemSpec vdp = SystemSpec::van_der_pol();
    CHECK(vdp.name() == "vdp");
    CHECK(vdp.mu == doctest::Approx(0.02));

    const SystemSpec arm = SystemSpec::two_link_arm();
    CHECK(arm.name() == "arm");
    CHECK(arm.state_space.dim() == 4);
    CHECK(arm.arm.a1 == doctest::Approx(0.8));

    CHECK(lin.state_space.contains({0.0, 0.0}));
    CHECK(!lin.state_space.contains({3.1, 0.0}));
}
