#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lipsysid/linalg.hpp"

namespace lipsysid {

// Records primitive operations during a forward pass; backward() replays
// their adjoints in reverse order. Vectors and scalars are stored as k x 1
// and 1 x 1 matrices. One tape per forward pass, single-threaded; disjoint
// tapes may run concurrently.
class Tape {
public:
    using Id = int;

    Id leaf(Matrix value);

    const Matrix& value(Id id) const { return nodes_[id].val; }
    const Matrix& grad(Id id) const { return nodes_[id].adj; }

    Id matmul(Id a, Id b);
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id scale(Id a, double s);
    Id transposed(Id a);
    Id relu(Id a);
    Id leaky_relu(Id a, double slope);
    Id exp_elem(Id a);
    // out_ij = v_i * m_ij with v a column vector (diagonal left-scaling).
    Id row_scale(Id v, Id m);
    // Broadcast a column vector over all columns of m: out_ij = m_ij + b_i.
    Id add_col(Id m, Id b);
    Id sub_col(Id m, Id b);
    // Cayley transform node; backward uses cayley_adjoint().
    std::pair<Id, Id> cayley_node(Id x, Id y);
    // Sum of squared entries, 1 x 1 output.
    Id sum_sq(Id a);
    // Column i minus column j of m, as a column vector.
    Id col_diff(Id m, int i, int j);
    // Euclidean norm of a column vector, 1 x 1 output. Gradient is 0 at 0.
    Id l2_norm(Id a);

    // Seeds d(seed)/d(seed) = 1 (seed must be 1 x 1) and accumulates
    // cotangents into every recorded node.
    void backward(Id seed);

private:
    struct Node {
        Matrix val;
        Matrix adj;
        std::function<void()> back;
    };

    Id push(Matrix value, std::function<void()> back = nullptr);

    std::vector<Node> nodes_;
};

}  // namespace lipsysid
