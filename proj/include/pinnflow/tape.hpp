#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pinnflow/errors.hpp"

namespace pinnflow {

using NodeId = std::uint32_t;

enum class Op : std::uint8_t {
    Const,  // leaf, no adjoint flow
    Param,  // leaf, adjoint collected as the gradient
    Add,    // a + b
    Sub,    // a - b
    Mul,    // a * b
    Fma,    // a + b * c
    Neg,    // -a
    Tanh,
    Sin,
    Cos,
};

struct TapeNode {
    Op op;
    NodeId a = 0, b = 0, c = 0;
};

// ============================================================================
// Tape: record of scalar primitives supporting one reverse sweep.
//
// Layout: node 0 is the constant 0, node 1 the constant 1, and the trainable
// parameters sit in one contiguous block right after them, so a parameter
// gradient is just a slice of the adjoint buffer. rewind() truncates back to
// the parameter block (keeping capacity), which lets a training step re-record
// the batch without reallocating.
//
// Emission folds constants and algebraic identities (x+0, x*1, x*0, x-x) so
// derivative seeds that are structurally zero never materialize as work.
// ============================================================================
class Tape {
public:
    static constexpr NodeId kZero = 0;
    static constexpr NodeId kOne = 1;
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    Tape();

    // Installs the parameter block. Call once per tape (after construction or
    // a clear()); values can be refreshed later with set_param_values.
    NodeId add_params(std::span<const double> values);
    void set_param_values(std::span<const double> values);
    NodeId param_begin() const { return param_begin_; }
    std::size_t param_count() const { return param_end_ - param_begin_; }

    // Drops every node after the parameter block.
    void rewind();
    void clear();

    NodeId constant(double v);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId fma(NodeId acc, NodeId a, NodeId b);  // acc + a*b
    NodeId neg(NodeId a);
    NodeId tanh_(NodeId a);
    NodeId sin_(NodeId a);
    NodeId cos_(NodeId a);

    double value(NodeId id) const { return val_[id]; }
    Op op(NodeId id) const { return nodes_[id].op; }
    bool is_const(NodeId id) const { return nodes_[id].op == Op::Const; }
    std::size_t size() const { return nodes_.size(); }

    // Recomputes every non-leaf value in place; replay is bit-identical to
    // the values computed at emission.
    void replay();

    // Adjoint sweep seeded at `seed`. Zeroes previous adjoints first, so the
    // tape supports repeated sweeps (one per loss component).
    void reverse(NodeId seed);
    double adjoint(NodeId id) const { return adj_[id]; }

    // reverse() + copy of the parameter slice. out.size() must equal
    // param_count().
    void param_gradient(NodeId loss, std::span<double> out);

    // raw adjoint buffer (valid after reverse); used by the batch kernel to
    // accumulate parameter slices without copies
    const double* adjoint_data() const { return adj_.data(); }

    // Index of the first non-finite node value, or npos if the tape is clean.
    std::size_t first_nonfinite() const;

    // Throws NumericFault pointing at the first non-finite node. Called on
    // the scalar that is about to be differentiated; scanning only on demand
    // keeps the emit path branch-free.
    void check_finite(NodeId id) const;

private:
    NodeId emit(Op op, NodeId a, NodeId b, NodeId c, double v);

    std::vector<TapeNode> nodes_;
    std::vector<double> val_;
    std::vector<double> adj_;
    NodeId param_begin_ = 2;
    NodeId param_end_ = 2;
};

}  // namespace pinnflow
