#pragma once

#include <array>

#include "pinnflow/tape.hpp"

namespace pinnflow {

// How much derivative structure a forward pass propagates. Data losses only
// need values; Neumann/flux terms need first derivatives; PDE residuals with
// Laplacians need both.
enum class JetMode { value, grad, full };

// Value plus first and diagonal second derivatives with respect to the
// spatial inputs, each component a node on the tape. Mixed second
// derivatives are not tracked — Laplacians only need the diagonal. Unused
// slots stay at Tape::kZero, which the tape's identity folding turns into
// free rides.
struct Jet {
    NodeId v = Tape::kZero;
    std::array<NodeId, 3> d1{Tape::kZero, Tape::kZero, Tape::kZero};
    std::array<NodeId, 3> d2{Tape::kZero, Tape::kZero, Tape::kZero};
};

// Small evaluation context threading the tape, the spatial dimension (1..3)
// and the propagation mode through layer code.
struct JetCtx {
    Tape* tape;
    int dim;
    JetMode mode;

    JetCtx(Tape& t, int d, JetMode m) : tape(&t), dim(d), mode(m) {
        if (d < 0 || d > 3) throw ValidationError("jet: spatial dimension must be 0..3");
    }
    bool want_d1() const { return mode != JetMode::value; }
    bool want_d2() const { return mode == JetMode::full; }
};

inline Jet jet_const(JetCtx& c, double v) {
    Jet j;
    j.v = c.tape->constant(v);
    return j;
}

// Seed jet for spatial input axis `axis` carrying value `v`; `scale` is
// dv/dx for that axis (1 for raw coordinates, 1/std under input
// normalization). Second derivatives of an affine map are zero.
inline Jet jet_input(JetCtx& c, double v, int axis, double scale) {
    Jet j;
    j.v = c.tape->constant(v);
    if (c.want_d1() && axis >= 0 && axis < c.dim) j.d1[axis] = c.tape->constant(scale);
    return j;
}

inline Jet jet_add(JetCtx& c, const Jet& a, const Jet& b) {
    Jet r;
    r.v = c.tape->add(a.v, b.v);
    if (c.want_d1())
        for (int k = 0; k < c.dim; ++k) r.d1[k] = c.tape->add(a.d1[k], b.d1[k]);
    if (c.want_d2())
        for (int k = 0; k < c.dim; ++k) r.d2[k] = c.tape->add(a.d2[k], b.d2[k]);
    return r;
}

inline Jet jet_scale(JetCtx& c, const Jet& a, NodeId s) {
    Jet r;
    r.v = c.tape->mul(a.v, s);
    if (c.want_d1())
        for (int k = 0; k < c.dim; ++k) r.d1[k] = c.tape->mul(a.d1[k], s);
    if (c.want_d2())
        for (int k = 0; k < c.dim; ++k) r.d2[k] = c.tape->mul(a.d2[k], s);
    return r;
}

inline Jet jet_shift(JetCtx& c, const Jet& a, NodeId offset) {
    Jet r = a;
    r.v = c.tape->add(a.v, offset);
    return r;
}

// product rule: (ab)' = a'b + ab', (ab)'' = a''b + 2a'b' + ab''
inline Jet jet_mul(JetCtx& c, const Jet& a, const Jet& b) {
    Tape& t = *c.tape;
    Jet r;
    r.v = t.mul(a.v, b.v);
    if (c.want_d1())
        for (int k = 0; k < c.dim; ++k)
            r.d1[k] = t.fma(t.mul(a.d1[k], b.v), a.v, b.d1[k]);
    if (c.want_d2())
        for (int k = 0; k < c.dim; ++k) {
            NodeId cross = t.mul(a.d1[k], b.d1[k]);
            NodeId s = t.fma(t.mul(a.d2[k], b.v), a.v, b.d2[k]);
            s = t.fma(s, t.constant(2.0), cross);
            r.d2[k] = s;
        }
    return r;
}

// chain rule for unary f: d1 -> f'(v) d1, d2 -> f''(v) d1^2 + f'(v) d2
inline Jet jet_unary(JetCtx& c, const Jet& a, NodeId fv, NodeId fp, NodeId fpp) {
    Tape& t = *c.tape;
    Jet r;
    r.v = fv;
    if (c.want_d1())
        for (int k = 0; k < c.dim; ++k) r.d1[k] = t.mul(fp, a.d1[k]);
    if (c.want_d2())
        for (int k = 0; k < c.dim; ++k) {
            NodeId sq = t.mul(a.d1[k], a.d1[k]);
            r.d2[k] = t.fma(t.mul(fp, a.d2[k]), fpp, sq);
        }
    return r;
}

inline Jet jet_tanh(JetCtx& c, const Jet& a) {
    Tape& t = *c.tape;
    NodeId v = t.tanh_(a.v);
    NodeId fp = Tape::kZero, fpp = Tape::kZero;
    if (c.want_d1()) fp = t.sub(Tape::kOne, t.mul(v, v));  // 1 - tanh^2
    if (c.want_d2()) fpp = t.mul(t.mul(t.constant(-2.0), v), fp);  // -2 tanh (1 - tanh^2)
    return jet_unary(c, a, v, fp, fpp);
}

inline Jet jet_sin(JetCtx& c, const Jet& a) {
    Tape& t = *c.tape;
    NodeId v = t.sin_(a.v);
    NodeId fp = Tape::kZero, fpp = Tape::kZero;
    if (c.want_d1()) fp = t.cos_(a.v);
    if (c.want_d2()) fpp = t.neg(v);
    return jet_unary(c, a, v, fp, fpp);
}

inline Jet jet_cos(JetCtx& c, const Jet& a) {
    Tape& t = *c.tape;
    NodeId v = t.cos_(a.v);
    NodeId fp = Tape::kZero, fpp = Tape::kZero;
    if (c.want_d1()) fp = t.neg(t.sin_(a.v));
    if (c.want_d2()) fpp = t.neg(v);
    return jet_unary(c, a, v, fp, fpp);
}

}  // namespace pinnflow
