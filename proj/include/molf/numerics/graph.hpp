#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "molf/numerics/matrix.hpp"
#include "molf/numerics/rng.hpp"

namespace molf {

struct NodeId {
    std::size_t index = 0;
    bool operator==(const NodeId&) const = default;
};

/// Reverse-mode tape over a fixed op whitelist. Nodes are appended in
/// evaluation order, so the tape is always topologically sorted.
class Graph {
public:
    enum class Op {
        leaf,
        matmul,
        add,
        add_bias,
        scale,
        relu,
        dropout,
        mse,
        softmax_cross_entropy,
    };

    NodeId leaf(Matrix value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    /// x (d x n) plus a (d x 1) bias broadcast across columns.
    NodeId add_bias(NodeId x, NodeId bias);
    NodeId scale(NodeId x, double c);
    NodeId relu(NodeId x);
    /// Inverted dropout; the sampled mask is recorded and reused by backward.
    NodeId dropout(NodeId x, double rate, Rng& rng);
    /// Dropout with a caller-supplied mask (entries already scaled by 1/(1-p)).
    NodeId dropout_with_mask(NodeId x, Matrix mask);
    /// Mean of squared differences over all entries; scalar.
    NodeId mse(NodeId prediction, NodeId target);
    /// Column-wise softmax cross-entropy averaged over columns; scalar.
    NodeId softmax_cross_entropy(NodeId logits, std::vector<std::size_t> labels);

    [[nodiscard]] const Matrix& value(NodeId id) const;
    [[nodiscard]] Op op(NodeId id) const;
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    /// Gradients of a scalar node with respect to each requested leaf, in the
    /// order requested. Leaves the loss does not depend on get zeros.
    [[nodiscard]] std::vector<Matrix> backward(NodeId loss, std::span<const NodeId> leaves) const;

private:
    struct Node {
        Op op = Op::leaf;
        NodeId lhs{};
        NodeId rhs{};
        double constant = 0.0;
        Matrix value;
        Matrix aux;  // dropout mask or softmax probabilities
        std::vector<std::size_t> labels;
    };

    NodeId push(Node node);
    const Node& node(NodeId id) const;

    std::vector<Node> nodes_;
};

} // namespace molf
