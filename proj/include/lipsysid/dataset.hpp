#pragma once

#include <string>
#include <vector>

#include "lipsysid/dynamics.hpp"
#include "lipsysid/linalg.hpp"

namespace lipsysid {

struct Sample {
    Vector x;  // state
    Vector y;  // derivative label (arm: friction residual)
    double t = 0.0;
    int traj_id = 0;
};

struct DatasetMeta {
    std::string system;
    double noise_variance = 0.0;
    double rate_hz = 100.0;
    unsigned long long seed = 0;
    int filter_window = 5;
};

struct Dataset {
    std::vector<Sample> samples;
    DatasetMeta meta;

    int input_dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].x.size()); }
    int output_dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].y.size()); }
    std::vector<Vector> inputs() const;
};

// Filters the noisy measurements, differentiates with the fourth-order
// stencil, and pairs states with derivative labels; the two samples at each
// trajectory end are dropped. For the arm the label is the residual
//   y = M^{-1}(q)(tau - C(q,qd) qd - g(q)) - qdd_est,
// i.e. the friction term M^{-1}(q) F_f(qd) the network is asked to learn.
Dataset build_dataset(const std::vector<Trajectory>& trajectories, const SystemSpec& sys,
                      int filter_window = 5);

// CSV with header (traj_id, t, x1..xn, y1..yk) plus a key = value sidecar.
// Doubles are hexfloats, so a round-trip is bit-exact.
void save_dataset(const Dataset& d, const std::string& csv_path, const std::string& meta_path);
Dataset load_dataset(const std::string& csv_path, const std::string& meta_path);

}  // namespace lipsysid
