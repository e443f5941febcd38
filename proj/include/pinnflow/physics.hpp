#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pinnflow/jet.hpp"

namespace pinnflow {

// Material and source properties for one subdomain. Units are whatever the
// point cloud uses; the residuals are assembled in physical units.
struct MaterialProps {
    double rho = 1.0;    // density, > 0
    double nu = 1.0;     // kinematic viscosity, > 0
    double k = 1.0;      // thermal conductivity, > 0
    double s = 1.0;      // specific heat, > 0
    double q_src = 0.0;  // volumetric source, >= 0

    void validate() const;
};

// One boundary condition: a linear observation Phi(u_hat) pinned to g(x) on
// every point of a tag. Dirichlet reads the output value, Neumann the normal
// derivative. g is constant, a parabolic inlet profile, or per-point values
// taken from the cloud's solution columns.
struct BoundarySpec {
    enum class Kind { dirichlet, neumann };
    enum class Profile { constant, parabola, from_data };

    std::string tag;      // boundary tag in the cloud, without the "boundary:" prefix
    std::string output;   // which network output the condition applies to
    Kind kind = Kind::dirichlet;
    Profile profile = Profile::constant;
    double value = 0.0;   // constant value, or peak for the parabola
};

// Per-component losses and weights. `parts` holds the unweighted component
// values keyed "b:<tag>", "d", "flux", "val"; `lambdas` the matching weights.
// The residual loss always enters the total with weight 1.
struct LossBreakdown {
    double residual = 0.0;
    std::map<std::string, double> parts;
    std::map<std::string, double> lambdas;
    double total = 0.0;

    // total = residual + sum_i lambda_i * part_i, composed in sorted key
    // order. Components without an entry in `lambdas` default to weight 1.
    void compose();
};

// ---------------------------------------------------------------------------
// Residuals. Jets must carry the derivative structure the residual needs:
// the momentum/energy Laplacians require JetMode::full.
// ---------------------------------------------------------------------------

// Steady incompressible Navier-Stokes. `vel` holds the velocity jets (dim
// entries), `p` the pressure jet. Returns dim+1 residual nodes: continuity
// first, then momentum components:
//   continuity: div u
//   momentum_i: (u . grad) u_i + (1/rho) dp/dx_i - (nu + nu_t) lap(u_i)
// nu_t is the per-point eddy viscosity (0 for laminar); it is data, not a
// differentiated quantity.
std::vector<NodeId> ns_residual(Tape& tape, std::span<const Jet> vel, const Jet& p, int dim,
                                const MaterialProps& props, double nu_t, JetMode mode);

// Steady advection-diffusion energy balance with the advecting velocity
// supplied per point (not differentiated):
//   k lap(T) + q_src - rho s (u . grad T)
NodeId energy_residual(Tape& tape, const Jet& T, std::span<const double> u, int dim,
                       const MaterialProps& props, JetMode mode);

// ---------------------------------------------------------------------------
// Per-point squared terms and set-level means. The set-level forms are the
// serial reference path: they record the whole reduction on the tape.
// ---------------------------------------------------------------------------

// Ordered mean of term nodes (fixed summation order -> reproducible).
NodeId tape_mean(Tape& tape, std::span<const NodeId> terms);

// sum of squares of the residual components of one point
NodeId residual_point_term(Tape& tape, std::span<const NodeId> components);

// L_r: mean over points of the per-point sum of squared residual components.
NodeId residual_loss(Tape& tape, std::span<const NodeId> point_terms);

// (Phi(u_hat) - g)^2 for one point. For Neumann, `jet` must carry first
// derivatives and `normal` the outward unit normal.
NodeId boundary_point_term(Tape& tape, const Jet& jet, const BoundarySpec& spec, double g,
                           std::span<const double> normal, int dim, JetMode mode);

// mean over points of precomputed boundary terms
NodeId boundary_loss(Tape& tape, std::span<const NodeId> point_terms);

// sum over channels of (pred - measured)^2 for one point
NodeId data_point_term(Tape& tape, std::span<const Jet> pred, std::span<const double> measured);

// L_d: mean over points and channels.
NodeId data_loss(Tape& tape, std::span<const NodeId> point_terms, int n_channels);

// Conductive flux continuity across an interface: with f = -k grad T and
// n2 = -n1, the per-point mismatch is (k2 grad T2 - k1 grad T1) . n1 and the
// term its square. Jets need first derivatives.
NodeId interface_flux_term(Tape& tape, const Jet& T1, const Jet& T2, double k1, double k2,
                           std::span<const double> n1, int dim, JetMode mode);

// Two-side value agreement: sum over sides of (T_side - mean)^2; the loss
// divides by points*sides.
NodeId interface_value_term(Tape& tape, const Jet& T1, const Jet& T2);

struct InterfaceLossNodes {
    NodeId flux;
    NodeId value;
};

// L_flux = mean over points of flux terms; L_val = mean over points and
// sides of value deviations.
InterfaceLossNodes interface_losses(Tape& tape, std::span<const NodeId> flux_terms,
                                    std::span<const NodeId> value_terms);

// total = L_r + sum_i lambda_i L_i on the tape. Negative weights are
// rejected.
NodeId total_loss(Tape& tape, NodeId residual,
                  std::span<const std::pair<NodeId, double>> weighted_parts);

}  // namespace pinnflow
