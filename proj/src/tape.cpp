#include "pinnflow/tape.hpp"

#include <cmath>
#include <cstring>

namespace pinnflow {

Tape::Tape() {
    nodes_.reserve(1 << 12);
    val_.reserve(1 << 12);
    emit(Op::Const, 0, 0, 0, 0.0);  // kZero
    emit(Op::Const, 0, 0, 0, 1.0);  // kOne
}

NodeId Tape::add_params(std::span<const double> values) {
    if (param_end_ != param_begin_)
        throw ValidationError("tape: parameter block already installed");
    if (nodes_.size() != param_begin_)
        throw ValidationError("tape: parameters must be added before other nodes");
    for (double v : values) emit(Op::Param, 0, 0, 0, v);
    param_end_ = static_cast<NodeId>(nodes_.size());
    return param_begin_;
}

void Tape::set_param_values(std::span<const double> values) {
    if (values.size() != param_count())
        throw ValidationError("tape: parameter value count mismatch");
    std::memcpy(val_.data() + param_begin_, values.data(), values.size() * sizeof(double));
}

void Tape::rewind() {
    nodes_.resize(param_end_);
    val_.resize(param_end_);
}

void Tape::clear() {
    nodes_.clear();
    val_.clear();
    adj_.clear();
    param_begin_ = param_end_ = 2;
    emit(Op::Const, 0, 0, 0, 0.0);
    emit(Op::Const, 0, 0, 0, 1.0);
}

NodeId Tape::emit(Op op, NodeId a, NodeId b, NodeId c, double v) {
    nodes_.push_back(TapeNode{op, a, b, c});
    val_.push_back(v);
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::constant(double v) {
    if (v == 0.0) return kZero;
    if (v == 1.0) return kOne;
    return emit(Op::Const, 0, 0, 0, v);
}

NodeId Tape::add(NodeId a, NodeId b) {
    if (a == kZero) return b;
    if (b == kZero) return a;
    if (is_const(a) && is_const(b)) return constant(val_[a] + val_[b]);
    return emit(Op::Add, a, b, 0, val_[a] + val_[b]);
}

NodeId Tape::sub(NodeId a, NodeId b) {
    if (b == kZero) return a;
    if (a == b) return kZero;
    if (a == kZero) return neg(b);
    if (is_const(a) && is_const(b)) return constant(val_[a] - val_[b]);
    return emit(Op::Sub, a, b, 0, val_[a] - val_[b]);
}

NodeId Tape::mul(NodeId a, NodeId b) {
    if (a == kZero || b == kZero) return kZero;
    if (a == kOne) return b;
    if (b == kOne) return a;
    if (is_const(a) && is_const(b)) return constant(val_[a] * val_[b]);
    return emit(Op::Mul, a, b, 0, val_[a] * val_[b]);
}

NodeId Tape::fma(NodeId acc, NodeId a, NodeId b) {
    if (a == kZero || b == kZero) return acc;
    if (acc == kZero) return mul(a, b);
    if (is_const(acc) && is_const(a) && is_const(b))
        return constant(val_[acc] + val_[a] * val_[b]);
    return emit(Op::Fma, acc, a, b, val_[acc] + val_[a] * val_[b]);
}

NodeId Tape::neg(NodeId a) {
    if (a == kZero) return kZero;
    if (is_const(a)) return constant(-val_[a]);
    return emit(Op::Neg, a, 0, 0, -val_[a]);
}

NodeId Tape::tanh_(NodeId a) {
    if (is_const(a)) return constant(std::tanh(val_[a]));
    return emit(Op::Tanh, a, 0, 0, std::tanh(val_[a]));
}

NodeId Tape::sin_(NodeId a) {
    if (is_const(a)) return constant(std::sin(val_[a]));
    return emit(Op::Sin, a, 0, 0, std::sin(val_[a]));
}

NodeId Tape::cos_(NodeId a) {
    if (is_const(a)) return constant(std::cos(val_[a]));
    return emit(Op::Cos, a, 0, 0, std::cos(val_[a]));
}

void Tape::replay() {
    const std::size_t n = nodes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const TapeNode& nd = nodes_[i];
        switch (nd.op) {
            case Op::Const:
            case Op::Param:
                break;
            case Op::Add: val_[i] = val_[nd.a] + val_[nd.b]; break;
            case Op::Sub: val_[i] = val_[nd.a] - val_[nd.b]; break;
            case Op::Mul: val_[i] = val_[nd.a] * val_[nd.b]; break;
            case Op::Fma: val_[i] = val_[nd.a] + val_[nd.b] * val_[nd.c]; break;
            case Op::Neg: val_[i] = -val_[nd.a]; break;
            case Op::Tanh: val_[i] = std::tanh(val_[nd.a]); break;
            case Op::Sin: val_[i] = std::sin(val_[nd.a]); break;
            case Op::Cos: val_[i] = std::cos(val_[nd.a]); break;
        }
    }
}

void Tape::reverse(NodeId seed) {
    const std::size_t n = nodes_.size();
    if (seed >= n) throw ValidationError("tape: reverse seed out of range");
    adj_.assign(n, 0.0);
    adj_[seed] = 1.0;
    for (std::size_t i = seed + 1; i-- > 0;) {
        double g = adj_[i];
        if (g == 0.0) continue;
        const TapeNode& nd = nodes_[i];
        switch (nd.op) {
            case Op::Const:
            case Op::Param:
                break;
            case Op::Add:
                adj_[nd.a] += g;
                adj_[nd.b] += g;
                break;
            case Op::Sub:
                adj_[nd.a] += g;
                adj_[nd.b] -= g;
                break;
            case Op::Mul:
                adj_[nd.a] += g * val_[nd.b];
                adj_[nd.b] += g * val_[nd.a];
                break;
            case Op::Fma:
                adj_[nd.a] += g;
                adj_[nd.b] += g * val_[nd.c];
                adj_[nd.c] += g * val_[nd.b];
                break;
            case Op::Neg:
                adj_[nd.a] -= g;
                break;
            case Op::Tanh: {
                double t = val_[i];
                adj_[nd.a] += g * (1.0 - t * t);
                break;
            }
            case Op::Sin:
                adj_[nd.a] += g * std::cos(val_[nd.a]);
                break;
            case Op::Cos:
                adj_[nd.a] -= g * std::sin(val_[nd.a]);
                break;
        }
    }
}

void Tape::param_gradient(NodeId loss, std::span<double> out) {
    if (out.size() != param_count())
        throw ValidationError("tape: gradient output size mismatch");
    reverse(loss);
    std::memcpy(out.data(), adj_.data() + param_begin_, out.size() * sizeof(double));
}

std::size_t Tape::first_nonfinite() const {
    for (std::size_t i = 0; i < val_.size(); ++i)
        if (!std::isfinite(val_[i])) return i;
    return npos;
}

void Tape::check_finite(NodeId id) const {
    if (std::isfinite(val_[id])) return;
    std::size_t bad = first_nonfinite();
    throw NumericFault(bad, "non-finite value at tape node " + std::to_string(bad));
}

}  // namespace pinnflow
