#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "uqimg/tensor.hpp"

namespace uqimg {

using NodeId = std::size_t;

/// Append-only computation tape for reverse-mode differentiation.
///
/// The primitive set is fixed: add, sub, elementwise mul, matmul, tanh,
/// silu, exp, log, sum, mean, abs, square. Elementwise ops require equal
/// shapes; matmul accepts [m,k]x[k,n], [m,k]x[k] and [k]x[k,n]. Node inputs
/// always reference earlier nodes, so the node list is a topological order.
class Tape {
public:
    enum class Op {
        Leaf,
        Add,
        Sub,
        Mul,
        MatMul,
        Tanh,
        Silu,
        Exp,
        Log,
        Sum,
        Mean,
        Abs,
        Square
    };

    struct Node {
        Op op;
        NodeId a = 0;
        NodeId b = 0;
        Tensor value;
    };

    /// Insert a leaf; trainable leaves are the parameters backward reports on.
    NodeId leaf(Tensor value, bool trainable = false);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId matmul(NodeId a, NodeId b);
    NodeId tanh(NodeId a);
    NodeId silu(NodeId a);
    NodeId exp(NodeId a);
    NodeId log(NodeId a);
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);
    NodeId abs(NodeId a);
    NodeId square(NodeId a);

    const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<NodeId>& parameters() const { return parameters_; }

    /// Gradients of a scalar output with respect to every trainable leaf.
    /// Parameters the output does not depend on receive zero gradients.
    std::unordered_map<NodeId, Tensor> backward(NodeId output) const;

    /// Recompute every non-leaf value from its inputs and return the largest
    /// absolute deviation from the stored value (acyclicity/replay check).
    double max_replay_deviation() const;

private:
    NodeId push(Op op, NodeId a, NodeId b, Tensor value);
    NodeId unary(Op op, NodeId a);

    std::vector<Node> nodes_;
    std::vector<NodeId> parameters_;
};

}  // namespace uqimg
