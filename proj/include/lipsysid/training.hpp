#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "lipsysid/dataset.hpp"
#include "lipsysid/networks.hpp"

namespace lipsysid {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 256;
    double lr0 = 1e-2;
    int step_size = 50;     // epochs per StepLR decay step
    double lr_decay = 0.5;  // in (0, 1)
    double clip_norm = 1.0;
    unsigned long long seed = 0;
    double split_fraction = 0.8;  // train share
    // Split seed is separate from the training seed so comparison runs with
    // different training seeds share the same test-train split.
    unsigned long long split_seed = 42;
    double weight_decay = 0.0;    // FCN
    double beta = 0.0;            // LRN Lipschitz penalty weight
    double train_subsample = 1.0;  // the 25/50/100% knob
    // When set, model selection uses a held-out slice of the training set
    // instead of the test set. Off by default.
    bool use_validation = false;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_mse = 0.0;
    double test_mse = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> curve;
    double best_test_mse = 0.0;
    int best_epoch = 0;
    // Final-epoch parameters; the trained model itself is left at the best
    // checkpoint.
    std::optional<LipschitzNet> final_lipnet;
    std::optional<MlpBaseline> final_mlp;
};

// Seed-deterministic uniform shuffle, 80/20 by default, then uniform
// downselection of the train side by train_subsample.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double split_fraction,
                                          double train_subsample, unsigned long long seed);

// (1/|S|) sum ||y_i - model(x_i)||_2^2.
double mse(const std::vector<Sample>& samples, const std::function<Vector(const Vector&)>& model);

// Plain SGD with StepLR, global gradient-norm clipping at clip_norm, and
// best-checkpoint selection on the test MSE. The model's normalizer must be
// fitted (on the full dataset) before calling. Throws on NaN loss with an
// (epoch, batch, lr) diagnostic.
TrainReport train(LipschitzNet& model, const Dataset& d, const TrainConfig& cfg);

// Same loop; loss adds weight_decay * sum ||W||_F^2 over weight matrices.
TrainReport train_fcn(MlpBaseline& model, const Dataset& d, const TrainConfig& cfg);

// Same loop; loss adds beta * (max pairwise difference quotient over the
// batch), differentiated through the pair attaining the max.
TrainReport train_lrn(MlpBaseline& model, const Dataset& d, const TrainConfig& cfg);

void save_train_report_csv(const TrainReport& report, const std::string& path);

// key = value config file covering TrainConfig fields; unknown keys are an
// error. Missing file throws.
TrainConfig load_train_config(const std::string& path);
void apply_config_line(TrainConfig& cfg, const std::string& key, const std::string& value);

}  // namespace lipsysid
