#include "pinnflow/physics.hpp"

#include <cmath>

namespace pinnflow {

void MaterialProps::validate() const {
    if (!(rho > 0.0)) throw ValidationError("material: rho must be > 0");
    if (!(nu > 0.0)) throw ValidationError("material: nu must be > 0");
    if (!(k > 0.0)) throw ValidationError("material: k must be > 0");
    if (!(s > 0.0)) throw ValidationError("material: s must be > 0");
    if (q_src < 0.0) throw ValidationError("material: q_src must be >= 0");
}

void LossBreakdown::compose() {
    double t = residual;
    for (const auto& [name, value] : parts) {
        auto it = lambdas.find(name);
        double lam = it == lambdas.end() ? 1.0 : it->second;
        if (lam < 0.0) throw ValidationError("loss: negative weight for component '" + name + "'");
        t += lam * value;
    }
    total = t;
}

std::vector<NodeId> ns_residual(Tape& tape, std::span<const Jet> vel, const Jet& p, int dim,
                                const MaterialProps& props, double nu_t, JetMode mode) {
    props.validate();
    if (dim < 2 || dim > 3) throw ValidationError("ns_residual: dim must be 2 or 3");
    if (static_cast<int>(vel.size()) != dim)
        throw ValidationError("ns_residual: velocity component count mismatch");
    if (mode != JetMode::full)
        throw ValidationError("ns_residual: missing second derivatives (needs JetMode::full)");
    if (nu_t < 0.0) throw ValidationError("ns_residual: nu_t must be >= 0");

    std::vector<NodeId> res;
    res.reserve(dim + 1);

    // continuity: sum_j du_j/dx_j
    NodeId cont = Tape::kZero;
    for (int j = 0; j < dim; ++j) cont = tape.add(cont, vel[j].d1[j]);
    res.push_back(cont);

    NodeId inv_rho = tape.constant(1.0 / props.rho);
    NodeId nu_eff = tape.constant(props.nu + nu_t);
    for (int i = 0; i < dim; ++i) {
        // (u . grad) u_i
        NodeId conv = Tape::kZero;
        for (int j = 0; j < dim; ++j) conv = tape.fma(conv, vel[j].v, vel[i].d1[j]);
        // lap(u_i)
        NodeId lap = Tape::kZero;
        for (int j = 0; j < dim; ++j) lap = tape.add(lap, vel[i].d2[j]);
        NodeId r = tape.fma(conv, inv_rho, p.d1[i]);
        r = tape.sub(r, tape.mul(nu_eff, lap));
        res.push_back(r);
    }
    return res;
}

NodeId energy_residual(Tape& tape, const Jet& T, std::span<const double> u, int dim,
                       const MaterialProps& props, JetMode mode) {
    props.validate();
    if (dim < 1 || dim > 3) throw ValidationError("energy_residual: dim must be 1..3");
    if (static_cast<int>(u.size()) != dim)
        throw ValidationError("energy_residual: velocity size mismatch");
    if (mode != JetMode::full)
        throw ValidationError("energy_residual: missing second derivatives (needs JetMode::full)");

    NodeId lap = Tape::kZero;
    for (int j = 0; j < dim; ++j) lap = tape.add(lap, T.d2[j]);
    NodeId adv = Tape::kZero;
    for (int j = 0; j < dim; ++j) adv = tape.fma(adv, tape.constant(u[j]), T.d1[j]);
    NodeId r = tape.fma(tape.constant(props.q_src), tape.constant(props.k), lap);
    r = tape.fma(r, tape.constant(-props.rho * props.s), adv);
    return r;
}

NodeId tape_mean(Tape& tape, std::span<const NodeId> terms) {
    if (terms.empty()) throw ValidationError("loss: empty point set");
    NodeId sum = Tape::kZero;
    for (NodeId t : terms) sum = tape.add(sum, t);
    return tape.mul(sum, tape.constant(1.0 / static_cast<double>(terms.size())));
}

NodeId residual_point_term(Tape& tape, std::span<const NodeId> components) {
    NodeId sum = Tape::kZero;
    for (NodeId r : components) sum = tape.fma(sum, r, r);
    return sum;
}

NodeId residual_loss(Tape& tape, std::span<const NodeId> point_terms) {
    return tape_mean(tape, point_terms);
}

NodeId boundary_point_term(Tape& tape, const Jet& jet, const BoundarySpec& spec, double g,
                           std::span<const double> normal, int dim, JetMode mode) {
    NodeId phi;
    if (spec.kind == BoundarySpec::Kind::dirichlet) {
        phi = jet.v;
    } else {
        if (mode == JetMode::value)
            throw ValidationError("boundary: Neumann condition needs first derivatives");
        if (static_cast<int>(normal.size()) < dim)
            throw ValidationError("boundary: Neumann point without a normal");
        double len2 = 0.0;
        for (int j = 0; j < dim; ++j) len2 += normal[j] * normal[j];
        if (std::abs(std::sqrt(len2) - 1.0) > 1e-6)
            throw ValidationError("boundary: Neumann point normal is not unit length");
        phi = Tape::kZero;
        for (int j = 0; j < dim; ++j) phi = tape.fma(phi, jet.d1[j], tape.constant(normal[j]));
    }
    NodeId diff = tape.sub(phi, tape.constant(g));
    return tape.mul(diff, diff);
}

NodeId boundary_loss(Tape& tape, std::span<const NodeId> point_terms) {
    return tape_mean(tape, point_terms);
}

NodeId data_point_term(Tape& tape, std::span<const Jet> pred, std::span<const double> measured) {
    if (pred.size() != measured.size())
        throw ValidationError("data: channel count mismatch");
    if (pred.empty()) throw ValidationError("data: no channels supplied");
    NodeId sum = Tape::kZero;
    for (std::size_t c = 0; c < pred.size(); ++c) {
        NodeId diff = tape.sub(pred[c].v, tape.constant(measured[c]));
        sum = tape.fma(sum, diff, diff);
    }
    return sum;
}

NodeId data_loss(Tape& tape, std::span<const NodeId> point_terms, int n_channels) {
    if (n_channels <= 0) throw ValidationError("data: no channels supplied");
    if (point_terms.empty()) throw ValidationError("data: empty point set");
    NodeId sum = Tape::kZero;
    for (NodeId t : point_terms) sum = tape.add(sum, t);
    return tape.mul(sum, tape.constant(1.0 / (static_cast<double>(point_terms.size()) * n_channels)));
}

NodeId interface_flux_term(Tape& tape, const Jet& T1, const Jet& T2, double k1, double k2,
                           std::span<const double> n1, int dim, JetMode mode) {
    if (mode == JetMode::value)
        throw ValidationError("interface: flux term needs first derivatives");
    if (!(k1 > 0.0) || !(k2 > 0.0))
        throw ValidationError("interface: conductivities must be > 0");
    if (static_cast<int>(n1.size()) < dim)
        throw ValidationError("interface: point without a normal");
    // (k2 grad T2 - k1 grad T1) . n1  ==  f1.n1 + f2.n2 with f = -k grad T
    NodeId mismatch = Tape::kZero;
    for (int j = 0; j < dim; ++j) {
        NodeId gj = tape.sub(tape.mul(tape.constant(k2), T2.d1[j]),
                             tape.mul(tape.constant(k1), T1.d1[j]));
        mismatch = tape.fma(mismatch, gj, tape.constant(n1[j]));
    }
    return tape.mul(mismatch, mismatch);
}

NodeId interface_value_term(Tape& tape, const Jet& T1, const Jet& T2) {
    NodeId m = tape.mul(tape.add(T1.v, T2.v), tape.constant(0.5));
    NodeId a = tape.sub(T1.v, m);
    NodeId b = tape.sub(T2.v, m);
    return tape.fma(tape.mul(a, a), b, b);
}

InterfaceLossNodes interface_losses(Tape& tape, std::span<const NodeId> flux_terms,
                                    std::span<const NodeId> value_terms) {
    if (flux_terms.empty() || flux_terms.size() != value_terms.size())
        throw ValidationError("interface: empty or inconsistent point set");
    InterfaceLossNodes out;
    out.flux = tape_mean(tape, flux_terms);
    // mean over points and the two sides
    NodeId sum = Tape::kZero;
    for (NodeId t : value_terms) sum = tape.add(sum, t);
    out.value = tape.mul(sum, tape.constant(1.0 / (2.0 * static_cast<double>(value_terms.size()))));
    return out;
}

NodeId total_loss(Tape& tape, NodeId residual,
                  std::span<const std::pair<NodeId, double>> weighted_parts) {
    NodeId t = residual;
    for (const auto& [node, lam] : weighted_parts) {
        if (lam < 0.0) throw ValidationError("loss: negative component weight");
        t = tape.fma(t, tape.constant(lam), node);
    }
    return t;
}

}  // namespace pinnflow
