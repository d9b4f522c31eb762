#pragma once

#include <string>
#include <vector>

#include "lipsysid/cayley.hpp"
#include "lipsysid/linalg.hpp"
#include "lipsysid/tape.hpp"

namespace lipsysid {

enum class Activation { ReLU, LeakyReLU };

double apply_activation(Activation act, double x);

// Free parameters of one 1-Lipschitz sandwich layer:
//   h_out = sqrt(2) A^T Psi sigma(sqrt(2) Psi^{-1} B h_in + b)
// with (A, B) from cayley(X, Y) and Psi = diag(e^v). Storing log-scales v
// keeps Psi positive definite for any parameter values.
struct SandwichLayerParams {
    Matrix x;  // n_out x n_out
    Matrix y;  // n_in x n_out
    Matrix v;  // n_out x 1, log-scales of Psi
    Matrix b;  // n_out x 1, bias

    int n_in() const { return y.rows(); }
    int n_out() const { return x.rows(); }
};

// Fixed affine input map F(x) = A_F (x - b_F) with diagonal A_F. Fitted once
// on the full dataset, then frozen.
struct AffineNormalizer {
    Vector scale;  // diagonal of A_F, strictly positive
    Vector mean;   // b_F

    Vector apply(const Vector& x) const;
    double scale_norm() const;  // ||A_F||_2 = max_j scale_j
};

// Per-coordinate standardization: mean and 1/std with the population
// variance convention. Rejects coordinates with zero variance.
AffineNormalizer fit_normalizer(const std::vector<Vector>& states);

// Lipschitz-bounded network: normalizer, a stack of sandwich layers, and a
// final norm-bounded linear map gamma' B_L, with the image of zero
// subtracted so the model vanishes at the origin.
struct LipschitzNet {
    AffineNormalizer normalizer;
    std::vector<SandwichLayerParams> hidden;
    // Cayley source of B_L: cayley(final_x, final_y) yields an (A, B) pair
    // whose A part is discarded; B_L is n_L x n_{L-1} with ||B_L||_2 <= 1.
    Matrix final_x;  // n_L x n_L
    Matrix final_y;  // n_{L-1} x n_L
    double gamma_prime = 1.0;
    Activation activation = Activation::ReLU;

    int input_dim() const { return static_cast<int>(normalizer.mean.size()); }
    int output_dim() const { return final_y.cols(); }
};

// Gaussian init with stddev 1/sqrt(fan_in) for X, Y and the final pair;
// v = 0 and b = 0. dims = {n, hidden widths..., n_L}.
LipschitzNet make_lipschitz_net(const std::vector<int>& dims, double gamma_prime,
                                const AffineNormalizer& normalizer, unsigned long long seed,
                                Activation activation = Activation::ReLU);

Vector sandwich_forward(const SandwichLayerParams& layer, const Vector& h_in,
                        Activation act = Activation::ReLU);
// Same layer map with an explicit orthogonal pair, for direct injection.
Vector sandwich_eval(const CayleyPair& ab, const Matrix& v, const Matrix& b, const Vector& h_in,
                     Activation act);

Vector net_forward(const LipschitzNet& net, const Vector& x);

// Certified bound gamma = gamma' ||A_F||_2, independent of training.
double lipschitz_bound(const LipschitzNet& net);

// Caches the Cayley images and the image of zero so repeated evaluation
// (rollouts, verification sweeps) skips the per-call linear solves.
class NetEvaluator {
public:
    explicit NetEvaluator(const LipschitzNet& net);
    Vector operator()(const Vector& x) const;

private:
    const LipschitzNet& net_;
    std::vector<CayleyPair> pairs_;
    Matrix b_last_;
    Vector zero_image_;
    bool zero_ready_ = false;

    Vector raw_forward(const Vector& x) const;
};

// Plain fully connected network shared by the FCN and LRN baselines.
struct MlpBaseline {
    struct Layer {
        Matrix w;
        Matrix b;  // n_out x 1
    };
    std::vector<Layer> layers;
    Activation activation = Activation::ReLU;

    int input_dim() const { return layers.front().w.cols(); }
    int output_dim() const { return layers.back().w.rows(); }
};

MlpBaseline make_mlp(const std::vector<int>& dims, unsigned long long seed,
                     Activation activation);

Vector mlp_forward(const MlpBaseline& net, const Vector& x);

// Product of spectral norms of the weight matrices: a valid upper bound on
// the Lipschitz constant when activations are 1-Lipschitz. Looser than an
// SDP-based bound but cheap and sound.
double mlp_lipschitz_upper(const MlpBaseline& net);

// Max pairwise difference quotient over a batch; pairs closer than 1e-12
// are skipped. Returns 0 (all points coincident) without error.
double batch_lipschitz_estimate(const MlpBaseline& net, const std::vector<Vector>& batch);

// ---- Tape-recorded forward passes (batched, inputs as n x m columns) ----

struct LipNetTapeVars {
    struct LayerIds {
        Tape::Id x, y, v, b;
    };
    std::vector<LayerIds> hidden;
    Tape::Id final_x = -1;
    Tape::Id final_y = -1;
};

// Records the full forward pass phi(X_batch) - phi(0) 1^T on the tape and
// returns the n_L x m prediction node. vars receives the parameter leaf ids.
Tape::Id lipnet_tape_forward(Tape& tape, const LipschitzNet& net, const Matrix& inputs,
                             LipNetTapeVars& vars);

struct MlpTapeVars {
    struct LayerIds {
        Tape::Id w, b;
    };
    std::vector<LayerIds> layers;
};

Tape::Id mlp_tape_forward(Tape& tape, const MlpBaseline& net, const Matrix& inputs,
                          MlpTapeVars& vars);

// ---- Serialization (bit-exact text container) ----

void save_lipschitz_net(const LipschitzNet& net, const std::string& path);
LipschitzNet load_lipschitz_net(const std::string& path);
void save_mlp(const MlpBaseline& net, const std::string& path);
MlpBaseline load_mlp(const std::string& path);

// Reads the "kind" field of a saved model file: "lipnet" or "mlp".
std::string model_kind(const std::string& path);

}  // namespace lipsysid
