#include "lipsysid/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lipsysid {

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double split_fraction,
                                          double train_subsample, unsigned long long seed) {
    if (d.samples.empty()) throw std::invalid_argument("split_dataset: empty dataset");
    if (split_fraction <= 0.0 || split_fraction >= 1.0)
        throw std::invalid_argument("split_dataset: split_fraction must be in (0, 1)");
    if (train_subsample <= 0.0 || train_subsample > 1.0)
        throw std::invalid_argument("split_dataset: train_subsample must be in (0, 1]");

    std::vector<size_t> idx(d.samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    const size_t n_train_full =
        static_cast<size_t>(std::llround(split_fraction * static_cast<double>(idx.size())));
    if (n_train_full == 0 || n_train_full == idx.size())
        throw std::invalid_argument("split_dataset: split produces an empty partition");
    const size_t n_train =
        std::max<size_t>(1, static_cast<size_t>(std::llround(
                                train_subsample * static_cast<double>(n_train_full))));

    Dataset train, test;
    train.meta = d.meta;
    test.meta = d.meta;
    for (size_t i = 0; i < n_train; ++i) train.samples.push_back(d.samples[idx[i]]);
    for (size_t i = n_train_full; i < idx.size(); ++i) test.samples.push_back(d.samples[idx[i]]);
    return {std::move(train), std::move(test)};
}

double mse(const std::vector<Sample>& samples, const std::function<Vector(const Vector&)>& model) {
    if (samples.empty()) throw std::invalid_argument("mse: empty sample set");
    double acc = 0.0;
    for (const Sample& s : samples) {
        const Vector pred = model(s.x);
        for (size_t i = 0; i < pred.size(); ++i) {
            const double r = s.y[i] - pred[i];
            acc += r * r;
        }
    }
    return acc / static_cast<double>(samples.size());
}

namespace {

// Scales the whole gradient so its global l2 norm does not exceed clip_norm.
void clip_gradients(std::vector<Matrix>& grads, double clip_norm) {
    double sq = 0.0;
    for (const Matrix& g : grads)
        for (size_t i = 0; i < g.size(); ++i) sq += g.data()[i] * g.data()[i];
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
        const double s = clip_norm / norm;
        for (Matrix& g : grads)
            for (size_t i = 0; i < g.size(); ++i) g.data()[i] *= s;
    }
}

void sgd_step(std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr) {
    for (size_t p = 0; p < params.size(); ++p)
        for (size_t i = 0; i < params[p]->size(); ++i)
            params[p]->data()[i] -= lr * grads[p].data()[i];
}

Matrix batch_inputs(const std::vector<Sample>& samples, const std::vector<size_t>& idx,
                    size_t begin, size_t end) {
    const int n = static_cast<int>(samples[idx[begin]].x.size());
    Matrix m(n, static_cast<int>(end - begin));
    for (size_t k = begin; k < end; ++k)
        for (int i = 0; i < n; ++i) m(i, static_cast<int>(k - begin)) = samples[idx[k]].x[i];
    return m;
}

Matrix batch_labels(const std::vector<Sample>& samples, const std::vector<size_t>& idx,
                    size_t begin, size_t end) {
    const int n = static_cast<int>(samples[idx[begin]].y.size());
    Matrix m(n, static_cast<int>(end - begin));
    for (size_t k = begin; k < end; ++k)
        for (int i = 0; i < n; ++i) m(i, static_cast<int>(k - begin)) = samples[idx[k]].y[i];
    return m;
}

double step_lr(const TrainConfig& cfg, int epoch) {
    return cfg.lr0 * std::pow(cfg.lr_decay, epoch / cfg.step_size);
}

[[noreturn]] void nan_abort(int epoch, int batch, double lr) {
    std::ostringstream os;
    os << "training aborted: NaN loss at epoch " << epoch << ", batch " << batch << ", lr " << lr;
    throw std::runtime_error(os.str());
}

// Shared epoch/batch skeleton. step() computes the loss for one batch and
// applies the parameter update; evaluate() returns (train_mse, test_mse).
TrainReport run_epochs(
    const TrainConfig& cfg, size_t train_size,
    const std::function<double(const std::vector<size_t>&, size_t, size_t, double, int, int)>& step,
    const std::function<std::pair<double, double>()>& evaluate,
    const std::function<void()>& checkpoint, const std::function<void()>& restore_best) {
    TrainReport report;
    report.best_test_mse = std::numeric_limits<double>::infinity();

    std::vector<size_t> order(train_size);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5bf0f3c3d2a1b4ceULL);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = step_lr(cfg, epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const size_t bs = static_cast<size_t>(cfg.batch_size);
        int batch_no = 0;
        for (size_t begin = 0; begin < train_size; begin += bs) {
            const size_t end = std::min(begin + bs, train_size);
            const double loss = step(order, begin, end, lr, epoch, batch_no);
            if (!std::isfinite(loss)) nan_abort(epoch, batch_no, lr);
            ++batch_no;
        }
        const auto [train_mse, test_mse] = evaluate();
        report.curve.push_back({epoch, lr, train_mse, test_mse});
        if (test_mse < report.best_test_mse) {
            report.best_test_mse = test_mse;
            report.best_epoch = epoch;
            checkpoint();
        }
    }
    restore_best();
    return report;
}

}  // namespace

TrainReport train(LipschitzNet& model, const Dataset& d, const TrainConfig& cfg) {
    auto [train_set, test_set] =
        split_dataset(d, cfg.split_fraction, cfg.train_subsample, cfg.split_seed);
    Dataset* select_set = &test_set;
    Dataset validation;
    if (cfg.use_validation) {
        auto [tr, val] = split_dataset(train_set, 0.875, 1.0, cfg.split_seed ^ 0x9e37ULL);
        train_set = std::move(tr);
        validation = std::move(val);
        select_set = &validation;
    }

    LipschitzNet best = model;

    auto step = [&](const std::vector<size_t>& order, size_t begin, size_t end, double lr, int,
                    int) {
        Tape tape;
        LipNetTapeVars vars;
        const Matrix xb = batch_inputs(train_set.samples, order, begin, end);
        const Matrix yb = batch_labels(train_set.samples, order, begin, end);
        Tape::Id pred = lipnet_tape_forward(tape, model, xb, vars);
        Tape::Id loss =
            tape.scale(tape.sum_sq(tape.sub(pred, tape.leaf(yb))), 1.0 / static_cast<double>(end - begin));
        tape.backward(loss);

        std::vector<Matrix*> params;
        std::vector<Matrix> grads;
        for (size_t l = 0; l < model.hidden.size(); ++l) {
            params.push_back(&model.hidden[l].x);
            params.push_back(&model.hidden[l].y);
            params.push_back(&model.hidden[l].v);
            params.push_back(&model.hidden[l].b);
            grads.push_back(tape.grad(vars.hidden[l].x));
            grads.push_back(tape.grad(vars.hidden[l].y));
            grads.push_back(tape.grad(vars.hidden[l].v));
            grads.push_back(tape.grad(vars.hidden[l].b));
        }
        params.push_back(&model.final_x);
        params.push_back(&model.final_y);
        grads.push_back(tape.grad(vars.final_x));
        grads.push_back(tape.grad(vars.final_y));

        clip_gradients(grads, cfg.clip_norm);
        sgd_step(params, grads, lr);
        return tape.value(loss)(0, 0);
    };

    auto evaluate = [&]() {
        NetEvaluator eval(model);
        auto fn = [&eval](const Vector& x) { return eval(x); };
        return std::pair{mse(train_set.samples, fn), mse(select_set->samples, fn)};
    };

    TrainReport report = run_epochs(
        cfg, train_set.samples.size(), step, evaluate, [&] { best = model; },
        [&] {
            LipschitzNet final_state = model;
            model = best;
            best = std::move(final_state);  // reuse: best now holds final params
        });
    report.final_lipnet = std::move(best);
    return report;
}

namespace {

TrainReport train_mlp_impl(MlpBaseline& model, const Dataset& d, const TrainConfig& cfg,
                           bool lipschitz_penalty) {
    auto [train_set, test_set] =
        split_dataset(d, cfg.split_fraction, cfg.train_subsample, cfg.split_seed);
    Dataset* select_set = &test_set;
    Dataset validation;
    if (cfg.use_validation) {
        auto [tr, val] = split_dataset(train_set, 0.875, 1.0, cfg.split_seed ^ 0x9e37ULL);
        train_set = std::move(tr);
        validation = std::move(val);
        select_set = &validation;
    }

    MlpBaseline best = model;

    auto step = [&](const std::vector<size_t>& order, size_t begin, size_t end, double lr, int,
                    int) {
        Tape tape;
        MlpTapeVars vars;
        const Matrix xb = batch_inputs(train_set.samples, order, begin, end);
        const Matrix yb = batch_labels(train_set.samples, order, begin, end);
        Tape::Id pred = mlp_tape_forward(tape, model, xb, vars);
        Tape::Id loss =
            tape.scale(tape.sum_sq(tape.sub(pred, tape.leaf(yb))), 1.0 / static_cast<double>(end - begin));

        if (!lipschitz_penalty && cfg.weight_decay > 0.0) {
            for (const auto& ids : vars.layers)
                loss = tape.add(loss, tape.scale(tape.sum_sq(ids.w), cfg.weight_decay));
        }
        if (lipschitz_penalty && cfg.beta > 0.0 && end - begin >= 2) {
            // Batch Lipschitz estimate: the max pairwise quotient, attached to
            // the tape through the pair that attains it.
            const Matrix& pv = tape.value(pred);
            const int m = static_cast<int>(end - begin);
            double best_q = -1.0;
            int bi = -1, bj = -1;
            double best_dx = 0.0;
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j) {
                    double dx2 = 0.0, dy2 = 0.0;
                    for (int r = 0; r < xb.rows(); ++r) {
                        const double dx = xb(r, i) - xb(r, j);
                        dx2 += dx * dx;
                    }
                    for (int r = 0; r < pv.rows(); ++r) {
                        const double dy = pv(r, i) - pv(r, j);
                        dy2 += dy * dy;
                    }
                    const double dx = std::sqrt(dx2);
                    if (dx < 1e-12) continue;
                    const double q = std::sqrt(dy2) / dx;
                    if (q > best_q) {
                        best_q = q;
                        bi = i;
                        bj = j;
                        best_dx = dx;
                    }
                }
            if (bi >= 0) {
                Tape::Id quot =
                    tape.scale(tape.l2_norm(tape.col_diff(pred, bi, bj)), 1.0 / best_dx);
                loss = tape.add(loss, tape.scale(quot, cfg.beta));
            }
        }
        tape.backward(loss);

        std::vector<Matrix*> params;
        std::vector<Matrix> grads;
        for (size_t l = 0; l < model.layers.size(); ++l) {
            params.push_back(&model.layers[l].w);
            params.push_back(&model.layers[l].b);
            grads.push_back(tape.grad(vars.layers[l].w));
            grads.push_back(tape.grad(vars.layers[l].b));
        }
        clip_gradients(grads, cfg.clip_norm);
        sgd_step(params, grads, lr);
        return tape.value(loss)(0, 0);
    };

    auto evaluate = [&]() {
        auto fn = [&model](const Vector& x) { return mlp_forward(model, x); };
        return std::pair{mse(train_set.samples, fn), mse(select_set->samples, fn)};
    };

    TrainReport report = run_epochs(
        cfg, train_set.samples.size(), step, evaluate, [&] { best = model; },
        [&] {
            MlpBaseline final_state = model;
            model = best;
            best = std::move(final_state);
        });
    report.final_mlp = std::move(best);
    return report;
}

}  // namespace

TrainReport train_fcn(MlpBaseline& model, const Dataset& d, const TrainConfig& cfg) {
    return train_mlp_impl(model, d, cfg, false);
}

TrainReport train_lrn(MlpBaseline& model, const Dataset& d, const TrainConfig& cfg) {
    return train_mlp_impl(model, d, cfg, true);
}

void save_train_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write train report: " + path);
    os << "epoch,lr,train_mse,test_mse\n";
    char buf[128];
    for (const EpochRecord& r : report.curve) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.epoch, r.lr, r.train_mse,
                      r.test_mse);
        os << buf;
    }
}

void apply_config_line(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "epochs") cfg.epochs = std::stoi(value);
    else if (key == "batch_size") cfg.batch_size = std::stoi(value);
    else if (key == "lr0") cfg.lr0 = std::stod(value);
    else if (key == "step_size") cfg.step_size = std::stoi(value);
    else if (key == "lr_decay") cfg.lr_decay = std::stod(value);
    else if (key == "clip_norm") cfg.clip_norm = std::stod(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "split_fraction") cfg.split_fraction = std::stod(value);
    else if (key == "split_seed") cfg.split_seed = std::stoull(value);
    else if (key == "weight_decay") cfg.weight_decay = std::stod(value);
    else if (key == "beta") cfg.beta = std::stod(value);
    else if (key == "train_subsample") cfg.train_subsample = std::stod(value);
    else if (key == "use_validation") cfg.use_validation = (value == "1" || value == "true");
    else throw std::runtime_error("unknown config key: " + key);
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read config file: " + path);
    TrainConfig cfg;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line[0] == '[') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
            return s;
        };
        apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

}  // namespace lipsysid
