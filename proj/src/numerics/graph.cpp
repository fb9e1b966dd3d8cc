#include "molf/numerics/graph.hpp"

#include <cmath>

#include "molf/errors.hpp"

namespace molf {

namespace {

void accumulate(Matrix& into, const Matrix& g) {
    if (into.empty()) {
        into = g;
        return;
    }
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}

Matrix row_sums(const Matrix& g) {
    Matrix out(g.rows(), 1);
    for (std::size_t i = 0; i < g.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j);
        out[i] = s;
    }
    return out;
}

} // namespace

NodeId Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return NodeId{nodes_.size() - 1};
}

const Graph::Node& Graph::node(NodeId id) const {
    if (id.index >= nodes_.size()) {
        throw ContractError("Graph: unknown node id " + std::to_string(id.index));
    }
    return nodes_[id.index];
}

const Matrix& Graph::value(NodeId id) const { return node(id).value; }

Graph::Op Graph::op(NodeId id) const { return node(id).op; }

NodeId Graph::leaf(Matrix value) {
    Node n;
    n.op = Op::leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::matmul;
    n.lhs = a;
    n.rhs = b;
    n.value = molf::matmul(value(a), value(b));
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::add;
    n.lhs = a;
    n.rhs = b;
    n.value = molf::add(value(a), value(b));
    return push(std::move(n));
}

NodeId Graph::add_bias(NodeId x, NodeId bias) {
    Node n;
    n.op = Op::add_bias;
    n.lhs = x;
    n.rhs = bias;
    n.value = molf::add_bias(value(x), value(bias));
    return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double c) {
    Node n;
    n.op = Op::scale;
    n.lhs = x;
    n.constant = c;
    n.value = molf::scale(value(x), c);
    return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
    Node n;
    n.op = Op::relu;
    n.lhs = x;
    n.value = value(x);
    for (auto& v : n.value.data()) v = v > 0.0 ? v : 0.0;
    return push(std::move(n));
}

NodeId Graph::dropout(NodeId x, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ContractError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
    const Matrix& in = value(x);
    Matrix mask(in.rows(), in.cols(), 1.0);
    if (rate > 0.0) {
        const double keep_scale = 1.0 / (1.0 - rate);
        for (auto& m : mask.data()) m = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    return dropout_with_mask(x, std::move(mask));
}

NodeId Graph::dropout_with_mask(NodeId x, Matrix mask) {
    Node n;
    n.op = Op::dropout;
    n.lhs = x;
    n.value = hadamard(value(x), mask);
    n.aux = std::move(mask);
    return push(std::move(n));
}

NodeId Graph::mse(NodeId prediction, NodeId target) {
    const Matrix& p = value(prediction);
    const Matrix& t = value(target);
    if (!p.same_shape(t)) {
        throw DimensionError("mse: prediction " + p.shape_string() + " vs target " +
                             t.shape_string());
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        s += d * d;
    }
    Node n;
    n.op = Op::mse;
    n.lhs = prediction;
    n.rhs = target;
    n.value = Matrix(1, 1, s / static_cast<double>(p.size()));
    return push(std::move(n));
}

NodeId Graph::softmax_cross_entropy(NodeId logits, std::vector<std::size_t> labels) {
    const Matrix& z = value(logits);
    if (labels.size() != z.cols()) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(z.cols()) + " columns");
    }
    Matrix probs(z.rows(), z.cols());
    double loss = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
        if (labels[j] >= z.rows()) {
            throw ContractError("softmax_cross_entropy: label " + std::to_string(labels[j]) +
                                " out of range for " + std::to_string(z.rows()) + " classes");
        }
        double peak = z(0, j);
        for (std::size_t i = 1; i < z.rows(); ++i) peak = std::max(peak, z(i, j));
        double denom = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) {
            probs(i, j) = std::exp(z(i, j) - peak);
            denom += probs(i, j);
        }
        for (std::size_t i = 0; i < z.rows(); ++i) probs(i, j) /= denom;
        loss -= (z(labels[j], j) - peak) - std::log(denom);
    }
    Node n;
    n.op = Op::softmax_cross_entropy;
    n.lhs = logits;
    n.value = Matrix(1, 1, loss / static_cast<double>(z.cols()));
    n.aux = std::move(probs);
    n.labels = std::move(labels);
    return push(std::move(n));
}

std::vector<Matrix> Graph::backward(NodeId loss, std::span<const NodeId> leaves) const {
    const Node& root = node(loss);
    if (root.value.rows() != 1 || root.value.cols() != 1) {
        throw ContractError("backward: loss node must be scalar, got " +
                            root.value.shape_string());
    }
    for (NodeId id : leaves) {
        if (node(id).op != Op::leaf) {
            throw ContractError("backward: node " + std::to_string(id.index) + " is not a leaf");
        }
    }

    std::vector<Matrix> grads(loss.index + 1);
    grads[loss.index] = Matrix(1, 1, 1.0);

    for (std::size_t k = loss.index + 1; k-- > 0;) {
        const Node& n = nodes_[k];
        const Matrix& g = grads[k];
        if (g.empty() || n.op == Op::leaf) continue;

        switch (n.op) {
        case Op::matmul: {
            const Matrix& a = value(n.lhs);
            const Matrix& b = value(n.rhs);
            accumulate(grads[n.lhs.index], molf::matmul(g, transpose(b)));
            accumulate(grads[n.rhs.index], molf::matmul(transpose(a), g));
            break;
        }
        case Op::add:
            accumulate(grads[n.lhs.index], g);
            accumulate(grads[n.rhs.index], g);
            break;
        case Op::add_bias:
            accumulate(grads[n.lhs.index], g);
            accumulate(grads[n.rhs.index], row_sums(g));
            break;
        case Op::scale:
            accumulate(grads[n.lhs.index], molf::scale(g, n.constant));
            break;
        case Op::relu: {
            Matrix d = g;
            const Matrix& x = value(n.lhs);
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (!(x[i] > 0.0)) d[i] = 0.0;
            }
            accumulate(grads[n.lhs.index], d);
            break;
        }
        case Op::dropout:
            accumulate(grads[n.lhs.index], hadamard(g, n.aux));
            break;
        case Op::mse: {
            const Matrix& p = value(n.lhs);
            const Matrix& t = value(n.rhs);
            const double coeff = 2.0 * g[0] / static_cast<double>(p.size());
            Matrix d(p.rows(), p.cols());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = coeff * (p[i] - t[i]);
            accumulate(grads[n.rhs.index], molf::scale(d, -1.0));
            accumulate(grads[n.lhs.index], d);
            break;
        }
        case Op::softmax_cross_entropy: {
            Matrix d = n.aux;
            for (std::size_t j = 0; j < d.cols(); ++j) d(n.labels[j], j) -= 1.0;
            accumulate(grads[n.lhs.index], molf::scale(d, g[0] / static_cast<double>(d.cols())));
            break;
        }
        case Op::leaf:
            break;
        }
    }

    std::vector<Matrix> out;
    out.reserve(leaves.size());
    for (NodeId id : leaves) {
        if (id.index <= loss.index && !grads[id.index].empty()) {
            out.push_back(grads[id.index]);
        } else {
            const Matrix& v = value(id);
            out.emplace_back(v.rows(), v.cols());
        }
    }
    return out;
}

} // namespace molf
