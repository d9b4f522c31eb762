#include "lipsysid/networks.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace lipsysid {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

double apply_activation(Activation act, double x) {
    switch (act) {
        case Activation::ReLU:
            return x > 0.0 ? x : 0.0;
        case Activation::LeakyReLU:
            return x > 0.0 ? x : 0.01 * x;
    }
    return x;
}

Vector AffineNormalizer::apply(const Vector& x) const {
    Vector out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = scale[i] * (x[i] - mean[i]);
    return out;
}

double AffineNormalizer::scale_norm() const {
    double m = 0.0;
    for (double s : scale) m = std::max(m, s);
    return m;
}

AffineNormalizer fit_normalizer(const std::vector<Vector>& states) {
    if (states.size() < 2) throw std::invalid_argument("fit_normalizer: need at least 2 samples");
    const size_t n = states.front().size();
    Vector mean(n, 0.0);
    for (const Vector& x : states)
        for (size_t j = 0; j < n; ++j) mean[j] += x[j];
    for (double& m : mean) m /= static_cast<double>(states.size());

    Vector var(n, 0.0);
    for (const Vector& x : states)
        for (size_t j = 0; j < n; ++j) {
            const double d = x[j] - mean[j];
            var[j] += d * d;
        }
    AffineNormalizer norm;
    norm.mean = mean;
    norm.scale.resize(n);
    for (size_t j = 0; j < n; ++j) {
        var[j] /= static_cast<double>(states.size());  // population convention
        if (var[j] <= 0.0)
            throw std::invalid_argument("fit_normalizer: zero-variance coordinate (degenerate data)");
        norm.scale[j] = 1.0 / std::sqrt(var[j]);
    }
    return norm;
}

LipschitzNet make_lipschitz_net(const std::vector<int>& dims, double gamma_prime,
                                const AffineNormalizer& normalizer, unsigned long long seed,
                                Activation activation) {
    if (dims.size() < 2) throw std::invalid_argument("make_lipschitz_net: need >= 2 dims");
    std::mt19937_64 rng(seed);
    auto gauss = [&rng](int rows, int cols, double stddev) {
        std::normal_distribution<double> dist(0.0, stddev);
        Matrix m(rows, cols);
        for (size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
        return m;
    };

    LipschitzNet net;
    net.normalizer = normalizer;
    net.gamma_prime = gamma_prime;
    net.activation = activation;
    const int layer_count = static_cast<int>(dims.size()) - 1;
    for (int l = 0; l < layer_count - 1; ++l) {
        const int n_in = dims[l];
        const int n_out = dims[l + 1];
        const double sd = 1.0 / std::sqrt(static_cast<double>(n_in));
        SandwichLayerParams p;
        p.x = gauss(n_out, n_out, sd);
        p.y = gauss(n_in, n_out, sd);
        p.v = Matrix(n_out, 1);
        p.b = Matrix(n_out, 1);
        net.hidden.push_back(std::move(p));
    }
    const int n_prev = dims[layer_count - 1];
    const int n_out = dims[layer_count];
    const double sd = 1.0 / std::sqrt(static_cast<double>(n_prev));
    net.final_x = gauss(n_out, n_out, sd);
    net.final_y = gauss(n_prev, n_out, sd);
    return net;
}

Vector sandwich_eval(const CayleyPair& ab, const Matrix& v, const Matrix& b, const Vector& h_in,
                     Activation act) {
    Vector t = matvec(ab.b, h_in);
    for (int i = 0; i < static_cast<int>(t.size()); ++i)
        t[i] = apply_activation(act, kSqrt2 * std::exp(-v(i, 0)) * t[i] + b(i, 0));
    for (int i = 0; i < static_cast<int>(t.size()); ++i) t[i] *= std::exp(v(i, 0));
    Vector out = matvec(transpose(ab.a), t);
    for (double& x : out) x *= kSqrt2;
    return out;
}

Vector sandwich_forward(const SandwichLayerParams& layer, const Vector& h_in, Activation act) {
    return sandwich_eval(cayley(layer.x, layer.y), layer.v, layer.b, h_in, act);
}

NetEvaluator::NetEvaluator(const LipschitzNet& net) : net_(net) {
    for (const auto& layer : net.hidden) pairs_.push_back(cayley(layer.x, layer.y));
    b_last_ = cayley(net.final_x, net.final_y).b;
    zero_image_ = raw_forward(Vector(net.input_dim(), 0.0));
    zero_ready_ = true;
}

Vector NetEvaluator::raw_forward(const Vector& x) const {
    Vector h = net_.normalizer.apply(x);
    for (size_t l = 0; l < pairs_.size(); ++l)
        h = sandwich_eval(pairs_[l], net_.hidden[l].v, net_.hidden[l].b, h, net_.activation);
    Vector out = matvec(b_last_, h);
    for (double& o : out) o *= net_.gamma_prime;
    return out;
}

Vector NetEvaluator::operator()(const Vector& x) const {
    Vector out = raw_forward(x);
    if (zero_ready_)
        for (size_t i = 0; i < out.size(); ++i) out[i] -= zero_image_[i];
    return out;
}

Vector net_forward(const LipschitzNet& net, const Vector& x) {
    return NetEvaluator(net)(x);
}

double lipschitz_bound(const LipschitzNet& net) {
    return net.gamma_prime * net.normalizer.scale_norm();
}

MlpBaseline make_mlp(const std::vector<int>& dims, unsigned long long seed, Activation activation) {
    std::mt19937_64 rng(seed);
    MlpBaseline net;
    net.activation = activation;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const double sd = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        std::normal_distribution<double> dist(0.0, sd);
        MlpBaseline::Layer layer;
        layer.w = Matrix(dims[l + 1], dims[l]);
        for (size_t i = 0; i < layer.w.size(); ++i) layer.w.data()[i] = dist(rng);
        layer.b = Matrix(dims[l + 1], 1);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Vector mlp_forward(const MlpBaseline& net, const Vector& x) {
    Vector h = x;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        h = matvec(net.layers[l].w, h);
        for (int i = 0; i < static_cast<int>(h.size()); ++i) {
            h[i] += net.layers[l].b(i, 0);
            if (l + 1 < net.layers.size()) h[i] = apply_activation(net.activation, h[i]);
        }
    }
    return h;
}

double mlp_lipschitz_upper(const MlpBaseline& net) {
    double p = 1.0;
    for (const auto& layer : net.layers) p *= spectral_norm(layer.w);
    return p;
}

double batch_lipschitz_estimate(const MlpBaseline& net, const std::vector<Vector>& batch) {
    if (batch.size() < 2)
        throw std::invalid_argument("batch_lipschitz_estimate: need a batch of >= 2 points");
    std::vector<Vector> outs;
    outs.reserve(batch.size());
    for (const Vector& x : batch) outs.push_back(mlp_forward(net, x));
    double best = 0.0;
    for (size_t i = 0; i < batch.size(); ++i)
        for (size_t j = i + 1; j < batch.size(); ++j) {
            const double dx = norm2(vsub(batch[i], batch[j]));
            if (dx < 1e-12) continue;
            best = std::max(best, norm2(vsub(outs[i], outs[j])) / dx);
        }
    return best;
}

Tape::Id lipnet_tape_forward(Tape& tape, const LipschitzNet& net, const Matrix& inputs,
                             LipNetTapeVars& vars) {
    const int n = inputs.rows();
    const int m = inputs.cols();
    // Normalized inputs and a single zero column are pushed through the same
    // stack; the zero image is subtracted at the end so gradients flow
    // through both paths.
    Matrix h0(n, m + 1);
    for (int i = 0; i < n; ++i) {
        const double s = net.normalizer.scale[i];
        const double mu = net.normalizer.mean[i];
        for (int j = 0; j < m; ++j) h0(i, j) = s * (inputs(i, j) - mu);
        h0(i, m) = s * (0.0 - mu);
    }

    vars.hidden.clear();
    Tape::Id h = tape.leaf(std::move(h0));
    for (const auto& layer : net.hidden) {
        LipNetTapeVars::LayerIds ids;
        ids.x = tape.leaf(layer.x);
        ids.y = tape.leaf(layer.y);
        ids.v = tape.leaf(layer.v);
        ids.b = tape.leaf(layer.b);
        vars.hidden.push_back(ids);

        auto [ia, ib] = tape.cayley_node(ids.x, ids.y);
        Tape::Id e = tape.exp_elem(ids.v);
        Tape::Id e_inv = tape.exp_elem(tape.scale(ids.v, -1.0));
        Tape::Id pre = tape.add_col(
            tape.scale(tape.row_scale(e_inv, tape.matmul(ib, h)), kSqrt2), ids.b);
        Tape::Id act = net.activation == Activation::ReLU ? tape.relu(pre)
                                                          : tape.leaky_relu(pre, 0.01);
        h = tape.scale(tape.matmul(tape.transposed(ia), tape.row_scale(e, act)), kSqrt2);
    }

    vars.final_x = tape.leaf(net.final_x);
    vars.final_y = tape.leaf(net.final_y);
    auto [fa, fb] = tape.cayley_node(vars.final_x, vars.final_y);
    (void)fa;  // A_L is discarded; its cotangent stays zero.
    Tape::Id p = tape.scale(tape.matmul(fb, h), net.gamma_prime);

    // Split off the zero column and subtract it from the sample columns.
    const Matrix& pv = tape.value(p);
    const int n_out = pv.rows();
    Matrix pick_samples(m + 1, m);
    for (int j = 0; j < m; ++j) pick_samples(j, j) = 1.0;
    Matrix pick_zero(m + 1, 1);
    pick_zero(m, 0) = 1.0;
    (void)n_out;
    Tape::Id samples = tape.matmul(p, tape.leaf(std::move(pick_samples)));
    Tape::Id zero_col = tape.matmul(p, tape.leaf(std::move(pick_zero)));
    return tape.sub_col(samples, zero_col);
}

Tape::Id mlp_tape_forward(Tape& tape, const MlpBaseline& net, const Matrix& inputs,
                          MlpTapeVars& vars) {
    vars.layers.clear();
    Tape::Id h = tape.leaf(inputs);
    for (size_t l = 0; l < net.layers.size(); ++l) {
        MlpTapeVars::LayerIds ids;
        ids.w = tape.leaf(net.layers[l].w);
        ids.b = tape.leaf(net.layers[l].b);
        vars.layers.push_back(ids);
        h = tape.add_col(tape.matmul(ids.w, h), ids.b);
        if (l + 1 < net.layers.size())
            h = net.activation == Activation::ReLU ? tape.relu(h) : tape.leaky_relu(h, 0.01);
    }
    return h;
}

}  // namespace lipsysid
