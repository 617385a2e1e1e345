#include "uqimg/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace uqimg {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct MatDims {
    std::size_t m, k, n;
    bool a_vec, b_vec;
};

// Rank-1 operands are promoted to [1,k] on the left and [k,1] on the right.
MatDims matmul_dims(const Tensor& a, const Tensor& b) {
    if (a.rank() > 2 || b.rank() > 2 || a.rank() == 0 || b.rank() == 0)
        throw std::length_error("matmul: operands must be rank 1 or 2");
    MatDims d{};
    d.a_vec = a.rank() == 1;
    d.b_vec = b.rank() == 1;
    d.m = d.a_vec ? 1 : a.shape()[0];
    d.k = d.a_vec ? a.shape()[0] : a.shape()[1];
    std::size_t bk = d.b_vec ? b.shape()[0] : b.shape()[0];
    d.n = d.b_vec ? 1 : b.shape()[1];
    if (d.k != bk) throw std::length_error("matmul: inner dimensions disagree");
    return d;
}

Tensor matmul_forward(const Tensor& a, const Tensor& b, const MatDims& d) {
    std::vector<double> out(d.m * d.n, 0.0);
    for (std::size_t i = 0; i < d.m; ++i)
        for (std::size_t p = 0; p < d.k; ++p) {
            double av = a[i * d.k + p];
            if (av == 0.0) continue;
            const double* brow = b.data().data() + p * d.n;
            double* orow = out.data() + i * d.n;
            for (std::size_t j = 0; j < d.n; ++j) orow[j] += av * brow[j];
        }
    std::vector<std::size_t> shape;
    if (d.a_vec && d.b_vec)
        shape = {1};
    else if (d.a_vec)
        shape = {d.n};
    else if (d.b_vec)
        shape = {d.m};
    else
        shape = {d.m, d.n};
    return Tensor(std::move(shape), std::move(out), Tensor::Unchecked{});
}

}  // namespace

NodeId Tape::push(Op op, NodeId a, NodeId b, Tensor value) {
    nodes_.push_back(Node{op, a, b, std::move(value)});
    return nodes_.size() - 1;
}

NodeId Tape::leaf(Tensor value, bool trainable) {
    NodeId id = push(Op::Leaf, 0, 0, std::move(value));
    if (trainable) parameters_.push_back(id);
    return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "Tape::add");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tb[i];
    return push(Op::Add, a, b, std::move(out));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "Tape::sub");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= tb[i];
    return push(Op::Sub, a, b, std::move(out));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "Tape::mul");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= tb[i];
    return push(Op::Mul, a, b, std::move(out));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    MatDims d = matmul_dims(ta, tb);
    return push(Op::MatMul, a, b, matmul_forward(ta, tb, d));
}

NodeId Tape::unary(Op op, NodeId a) {
    const Tensor& ta = value(a);
    Tensor out = ta;
    switch (op) {
        case Op::Tanh:
            for (auto& v : out.data()) v = std::tanh(v);
            break;
        case Op::Silu:
            for (auto& v : out.data()) v = v * sigmoid(v);
            break;
        case Op::Exp:
            for (auto& v : out.data()) v = std::exp(v);
            break;
        case Op::Log:
            for (auto& v : out.data()) v = std::log(v);
            break;
        case Op::Abs:
            for (auto& v : out.data()) v = std::fabs(v);
            break;
        case Op::Square:
            for (auto& v : out.data()) v = v * v;
            break;
        default:
            throw std::logic_error("Tape::unary: not a unary op");
    }
    return push(op, a, 0, std::move(out));
}

NodeId Tape::tanh(NodeId a) { return unary(Op::Tanh, a); }
NodeId Tape::silu(NodeId a) { return unary(Op::Silu, a); }
NodeId Tape::exp(NodeId a) { return unary(Op::Exp, a); }
NodeId Tape::log(NodeId a) { return unary(Op::Log, a); }
NodeId Tape::abs(NodeId a) { return unary(Op::Abs, a); }
NodeId Tape::square(NodeId a) { return unary(Op::Square, a); }

NodeId Tape::sum(NodeId a) {
    double s = 0.0;
    for (double v : value(a).data()) s += v;
    return push(Op::Sum, a, 0, Tensor({1}, {s}, Tensor::Unchecked{}));
}

NodeId Tape::mean(NodeId a) {
    double s = 0.0;
    for (double v : value(a).data()) s += v;
    s /= static_cast<double>(value(a).size());
    return push(Op::Mean, a, 0, Tensor({1}, {s}, Tensor::Unchecked{}));
}

std::unordered_map<NodeId, Tensor> Tape::backward(NodeId output) const {
    if (output >= nodes_.size()) throw std::out_of_range("Tape::backward: bad node id");
    if (!value(output).is_scalar())
        throw std::invalid_argument("Tape::backward: output must be scalar");

    std::vector<Tensor> adjoint(nodes_.size());
    std::vector<bool> live(nodes_.size(), false);
    adjoint[output] = Tensor::scalar(1.0);
    live[output] = true;

    auto bump = [&](NodeId id, const Tensor& g) {
        if (!live[id]) {
            adjoint[id] = g;
            live[id] = true;
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) adjoint[id][i] += g[i];
        }
    };

    for (NodeId id = output + 1; id-- > 0;) {
        if (!live[id]) continue;
        const Node& node = nodes_[id];
        const Tensor& g = adjoint[id];
        switch (node.op) {
            case Op::Leaf:
                break;
            case Op::Add:
                bump(node.a, g);
                bump(node.b, g);
                break;
            case Op::Sub: {
                bump(node.a, g);
                Tensor gb = g;
                for (auto& v : gb.data()) v = -v;
                bump(node.b, std::move(gb));
                break;
            }
            case Op::Mul: {
                const Tensor& ta = nodes_[node.a].value;
                const Tensor& tb = nodes_[node.b].value;
                Tensor ga = g;
                Tensor gb = g;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] *= tb[i];
                    gb[i] *= ta[i];
                }
                bump(node.a, std::move(ga));
                bump(node.b, std::move(gb));
                break;
            }
            case Op::MatMul: {
                const Tensor& ta = nodes_[node.a].value;
                const Tensor& tb = nodes_[node.b].value;
                MatDims d = matmul_dims(ta, tb);
                // dA = g . B^T, dB = A^T . g with g reshaped to [m,n].
                Tensor ga = Tensor::zeros(ta.shape());
                Tensor gb = Tensor::zeros(tb.shape());
                for (std::size_t i = 0; i < d.m; ++i)
                    for (std::size_t j = 0; j < d.n; ++j) {
                        double gij = g[i * d.n + j];
                        if (gij == 0.0) continue;
                        for (std::size_t p = 0; p < d.k; ++p) {
                            ga[i * d.k + p] += gij * tb[p * d.n + j];
                            gb[p * d.n + j] += gij * ta[i * d.k + p];
                        }
                    }
                bump(node.a, std::move(ga));
                bump(node.b, std::move(gb));
                break;
            }
            case Op::Tanh: {
                Tensor ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    double t = node.value[i];
                    ga[i] *= 1.0 - t * t;
                }
                bump(node.a, std::move(ga));
                break;
            }
            case Op::Silu: {
                const Tensor& x = nodes_[node.a].value;
                Tensor ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    double s = sigmoid(x[i]);
                    ga[i] *= s * (1.0 + x[i] * (1.0 - s));
                }
                bump(node.a, std::move(ga));
                break;
            }
            case Op::Exp: {
                Tensor ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= node.value[i];
                bump(node.a, std::move(ga));
                break;
            }
            case Op::Log: {
                const Tensor& x = nodes_[node.a].value;
                Tensor ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] /= x[i];
                bump(node.a, std::move(ga));
                break;
            }
            case Op::Abs: {
                const Tensor& x = nodes_[node.a].value;
                Tensor ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i)
                    ga[i] *= x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
                bump(node.a, std::move(ga));
                break;
            }
            case Op::Sum: {
                Tensor ga = Tensor::full(nodes_[node.a].value.shape(), g[0]);
                bump(node.a, std::move(ga));
                break;
            }
            case Op::Mean: {
                double scale = g[0] / static_cast<double>(nodes_[node.a].value.size());
                Tensor ga = Tensor::full(nodes_[node.a].value.shape(), scale);
                bump(node.a, std::move(ga));
                break;
            }
            case Op::Square: {
                const Tensor& x = nodes_[node.a].value;
                Tensor ga = g;
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 2.0 * x[i];
                bump(node.a, std::move(ga));
                break;
            }
        }
    }

    std::unordered_map<NodeId, Tensor> grads;
    for (NodeId p : parameters_)
        grads.emplace(p, live[p] ? adjoint[p] : Tensor::zeros(nodes_[p].value.shape()));
    return grads;
}

double Tape::max_replay_deviation() const {
    double worst = 0.0;
    Tape replay;
    std::vector<NodeId> remap(nodes_.size());
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        const Node& node = nodes_[id];
        NodeId r;
        switch (node.op) {
            case Op::Leaf: r = replay.leaf(node.value); break;
            case Op::Add: r = replay.add(remap[node.a], remap[node.b]); break;
            case Op::Sub: r = replay.sub(remap[node.a], remap[node.b]); break;
            case Op::Mul: r = replay.mul(remap[node.a], remap[node.b]); break;
            case Op::MatMul: r = replay.matmul(remap[node.a], remap[node.b]); break;
            case Op::Tanh: r = replay.tanh(remap[node.a]); break;
            case Op::Silu: r = replay.silu(remap[node.a]); break;
            case Op::Exp: r = replay.exp(remap[node.a]); break;
            case Op::Log: r = replay.log(remap[node.a]); break;
            case Op::Sum: r = replay.sum(remap[node.a]); break;
            case Op::Mean: r = replay.mean(remap[node.a]); break;
            case Op::Abs: r = replay.abs(remap[node.a]); break;
            case Op::Square: r = replay.square(remap[node.a]); break;
            default: throw std::logic_error("Tape::max_replay_deviation: bad op");
        }
        remap[id] = r;
        const Tensor& got = replay.value(r);
        for (std::size_t i = 0; i < got.size(); ++i)
            worst = std::max(worst, std::fabs(got[i] - node.value[i]));
    }
    return worst;
}

}  // namespace uqimg
