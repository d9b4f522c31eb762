#include "lipsysid/tape.hpp"

#include <cmath>

#include "lipsysid/cayley.hpp"

namespace lipsysid {

Tape::Id Tape::push(Matrix value, std::function<void()> back) {
    Node n;
    n.adj = Matrix(value.rows(), value.cols());
    n.val = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(Matrix value) { return push(std::move(value)); }

Tape::Id Tape::matmul(Id a, Id b) {
    Id out = push(nodes_[a].val * nodes_[b].val);
    nodes_[out].back = [this, a, b, out] {
        const Matrix& g = nodes_[out].adj;
        nodes_[a].adj = nodes_[a].adj + g * transpose(nodes_[b].val);
        nodes_[b].adj = nodes_[b].adj + transpose(nodes_[a].val) * g;
    };
    return out;
}

Tape::Id Tape::add(Id a, Id b) {
    Id out = push(nodes_[a].val + nodes_[b].val);
    nodes_[out].back = [this, a, b, out] {
        nodes_[a].adj = nodes_[a].adj + nodes_[out].adj;
        nodes_[b].adj = nodes_[b].adj + nodes_[out].adj;
    };
    return out;
}

Tape::Id Tape::sub(Id a, Id b) {
    Id out = push(nodes_[a].val - nodes_[b].val);
    nodes_[out].back = [this, a, b, out] {
        nodes_[a].adj = nodes_[a].adj + nodes_[out].adj;
        nodes_[b].adj = nodes_[b].adj - 1.0 * nodes_[out].adj;
    };
    return out;
}

Tape::Id Tape::scale(Id a, double s) {
    Id out = push(s * nodes_[a].val);
    nodes_[out].back = [this, a, out, s] {
        nodes_[a].adj = nodes_[a].adj + s * nodes_[out].adj;
    };
    return out;
}

Tape::Id Tape::transposed(Id a) {
    Id out = push(transpose(nodes_[a].val));
    nodes_[out].back = [this, a, out] {
        nodes_[a].adj = nodes_[a].adj + transpose(nodes_[out].adj);
    };
    return out;
}

Tape::Id Tape::relu(Id a) {
    Matrix v = nodes_[a].val;
    for (size_t i = 0; i < v.size(); ++i) v.data()[i] = v.data()[i] > 0.0 ? v.data()[i] : 0.0;
    Id out = push(std::move(v));
    nodes_[out].back = [this, a, out] {
        Matrix& ga = nodes_[a].adj;
        const Matrix& g = nodes_[out].adj;
        const Matrix& x = nodes_[a].val;
        for (size_t i = 0; i < ga.size(); ++i)
            if (x.data()[i] > 0.0) ga.data()[i] += g.data()[i];
    };
    return out;
}

Tape::Id Tape::leaky_relu(Id a, double slope) {
    Matrix v = nodes_[a].val;
    for (size_t i = 0; i < v.size(); ++i)
        v.data()[i] = v.data()[i] > 0.0 ? v.data()[i] : slope * v.data()[i];
    Id out = push(std::move(v));
    nodes_[out].back = [this, a, out, slope] {
        Matrix& ga = nodes_[a].adj;
        const Matrix& g = nodes_[out].adj;
        const Matrix& x = nodes_[a].val;
        for (size_t i = 0; i < ga.size(); ++i)
            ga.data()[i] += (x.data()[i] > 0.0 ? 1.0 : slope) * g.data()[i];
    };
    return out;
}

Tape::Id Tape::exp_elem(Id a) {
    Matrix v = nodes_[a].val;
    for (size_t i = 0; i < v.size(); ++i) v.data()[i] = std::exp(v.data()[i]);
    Id out = push(std::move(v));
    nodes_[out].back = [this, a, out] {
        Matrix& ga = nodes_[a].adj;
        const Matrix& g = nodes_[out].adj;
        const Matrix& y = nodes_[out].val;
        for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += y.data()[i] * g.data()[i];
    };
    return out;
}

Tape::Id Tape::row_scale(Id v, Id m) {
    const Matrix& d = nodes_[v].val;
    const Matrix& x = nodes_[m].val;
    if (d.cols() != 1 || d.rows() != x.rows()) throw ShapeError("row_scale: shape mismatch");
    Matrix y = x;
    for (int i = 0; i < y.rows(); ++i)
        for (int j = 0; j < y.cols(); ++j) y(i, j) *= d(i, 0);
    Id out = push(std::move(y));
    nodes_[out].back = [this, v, m, out] {
        const Matrix& g = nodes_[out].adj;
        const Matrix& d = nodes_[v].val;
        const Matrix& x = nodes_[m].val;
        Matrix& gm = nodes_[m].adj;
        Matrix& gv = nodes_[v].adj;
        for (int i = 0; i < x.rows(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < x.cols(); ++j) {
                gm(i, j) += d(i, 0) * g(i, j);
                acc += x(i, j) * g(i, j);
            }
            gv(i, 0) += acc;
        }
    };
    return out;
}

Tape::Id Tape::add_col(Id m, Id b) {
    const Matrix& x = nodes_[m].val;
    const Matrix& c = nodes_[b].val;
    if (c.cols() != 1 || c.rows() != x.rows()) throw ShapeError("add_col: shape mismatch");
    Matrix y = x;
    for (int i = 0; i < y.rows(); ++i)
        for (int j = 0; j < y.cols(); ++j) y(i, j) += c(i, 0);
    Id out = push(std::move(y));
    nodes_[out].back = [this, m, b, out] {
        const Matrix& g = nodes_[out].adj;
        nodes_[m].adj = nodes_[m].adj + g;
        Matrix& gb = nodes_[b].adj;
        for (int i = 0; i < g.rows(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < g.cols(); ++j) acc += g(i, j);
            gb(i, 0) += acc;
        }
    };
    return out;
}

Tape::Id Tape::sub_col(Id m, Id b) {
    const Matrix& x = nodes_[m].val;
    const Matrix& c = nodes_[b].val;
    if (c.cols() != 1 || c.rows() != x.rows()) throw ShapeError("sub_col: shape mismatch");
    Matrix y = x;
    for (int i = 0; i < y.rows(); ++i)
        for (int j = 0; j < y.cols(); ++j) y(i, j) -= c(i, 0);
    Id out = push(std::move(y));
    nodes_[out].back = [this, m, b, out] {
        const Matrix& g = nodes_[out].adj;
        nodes_[m].adj = nodes_[m].adj + g;
        Matrix& gb = nodes_[b].adj;
        for (int i = 0; i < g.rows(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < g.cols(); ++j) acc += g(i, j);
            gb(i, 0) -= acc;
        }
    };
    return out;
}

std::pair<Tape::Id, Tape::Id> Tape::cayley_node(Id x, Id y) {
    CayleyPair p = cayley(nodes_[x].val, nodes_[y].val);
    Id ia = push(std::move(p.a));
    Id ib = push(std::move(p.b));
    // The adjoint is attached to the B node, which is recorded after A, so
    // both output cotangents are final when it runs.
    nodes_[ib].back = [this, x, y, ia, ib] {
        CayleyAdjoint adj =
            cayley_adjoint(nodes_[x].val, nodes_[y].val, nodes_[ia].adj, nodes_[ib].adj);
        nodes_[x].adj = nodes_[x].adj + adj.x_bar;
        nodes_[y].adj = nodes_[y].adj + adj.y_bar;
    };
    return {ia, ib};
}

Tape::Id Tape::sum_sq(Id a) {
    const Matrix& x = nodes_[a].val;
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x.data()[i] * x.data()[i];
    Matrix v(1, 1);
    v(0, 0) = s;
    Id out = push(std::move(v));
    nodes_[out].back = [this, a, out] {
        const double g = nodes_[out].adj(0, 0);
        Matrix& ga = nodes_[a].adj;
        const Matrix& x = nodes_[a].val;
        for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += 2.0 * g * x.data()[i];
    };
    return out;
}

Tape::Id Tape::col_diff(Id m, int i, int j) {
    const Matrix& x = nodes_[m].val;
    Matrix v(x.rows(), 1);
    for (int r = 0; r < x.rows(); ++r) v(r, 0) = x(r, i) - x(r, j);
    Id out = push(std::move(v));
    nodes_[out].back = [this, m, i, j, out] {
        const Matrix& g = nodes_[out].adj;
        Matrix& gm = nodes_[m].adj;
        for (int r = 0; r < g.rows(); ++r) {
            gm(r, i) += g(r, 0);
            gm(r, j) -= g(r, 0);
        }
    };
    return out;
}

Tape::Id Tape::l2_norm(Id a) {
    const Matrix& x = nodes_[a].val;
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x.data()[i] * x.data()[i];
    Matrix v(1, 1);
    v(0, 0) = std::sqrt(s);
    Id out = push(std::move(v));
    nodes_[out].back = [this, a, out] {
        const double n = nodes_[out].val(0, 0);
        if (n == 0.0) return;
        const double g = nodes_[out].adj(0, 0) / n;
        Matrix& ga = nodes_[a].adj;
        const Matrix& x = nodes_[a].val;
        for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g * x.data()[i];
    };
    return out;
}

void Tape::backward(Id seed) {
    if (nodes_[seed].val.rows() != 1 || nodes_[seed].val.cols() != 1)
        throw ShapeError("backward: seed must be scalar");
    nodes_[seed].adj(0, 0) = 1.0;
    for (Id i = seed; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back();
}

}  // namespace lipsysid
