#pragma once

#include <string>
#include <vector>

#include "pinnflow/cloud.hpp"
#include "pinnflow/network.hpp"
#include "pinnflow/physics.hpp"

namespace pinnflow {

// One network with its physics, material and region identity. `physics` is
// one of poisson | ns | rans | energy | conjugate:
//   poisson    k lap(T) + q = 0 (no advection)
//   ns         laminar Navier-Stokes, outputs u v [w] p
//   rans       ns with the per-point nu_t column as frozen eddy viscosity
//   energy     advection-diffusion with u,v[,w] columns as frozen velocity
//   conjugate  alias of energy; the conjugate part is the interface coupling
struct Subdomain {
    std::string region;  // "" for single-domain models
    std::string physics = "poisson";
    NetworkConfig config;
    Normalization norm;
    ParameterStore params;
    MaterialProps props;
    std::size_t param_offset = 0;  // into the model-wide flat vector
};

// Thermal coupling between two subdomains across an interface tag. Normals
// stored on the interface points are the side-1 normals; side 2 is the exact
// negation.
struct ModelInterface {
    std::string name;
    std::string region1, region2;
};

struct Model {
    int spatial_dim = 2;
    std::vector<Subdomain> subdomains;
    std::vector<ModelInterface> interfaces;
    // boundary tag -> owning subdomain index (defaults to 0)
    std::map<std::string, std::size_t> boundary_owner;

    std::size_t total_params() const;
    void finalize();  // assigns param offsets, validates

    std::size_t subdomain_index(const std::string& region) const;
    // routes an interior/data tag to its subdomain
    std::size_t route_tag(const std::string& tag) const;
    std::size_t route_boundary(const std::string& name) const;
    const ModelInterface& interface_by_name(const std::string& name) const;

    // concatenated parameter values / write-back
    std::vector<double> gather_params() const;
    void scatter_params(std::span<const double> flat);
};

void save_model_checkpoint(const std::string& path, const Model& model);
Model load_model_checkpoint(const std::string& path);

// Tape-free prediction of one subdomain's outputs at a point.
std::vector<double> model_eval(const Model& model, std::size_t sub, std::span<const double> x);

}  // namespace pinnflow
