#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pinnflow/model.hpp"
#include "pinnflow/pso.hpp"
#include "pinnflow/trainer.hpp"

namespace pinnflow {

// One network/physics region as declared in the config file
// (subdomain.<region>.* keys).
struct SubdomainSpec {
    std::string region;
    std::string physics = "poisson";
    std::vector<int> hidden{32, 32};
    std::vector<std::string> outputs{"T"};
    int embedding = 0;          // Fourier frequency count, 0 = plain inputs
    double embedding_sigma = 1.0;
    int extra_inputs = 0;       // non-spatial inputs (surrogate design axes)
    MaterialProps props;
    // empty = identity; otherwise sized like the inputs/outputs
    std::vector<double> in_mean, in_std, out_mean, out_std;
};

struct InterfaceSpec {
    std::string name;
    std::string region1, region2;
};

// sample.* keys: mode "domain" draws a point cloud from a shape, mode "doe"
// draws a maximin Latin hypercube from a design-space file.
struct SampleSpec {
    std::string mode = "domain";
    std::size_t n_interior = 1000;
    std::size_t n_boundary = 100;
    std::size_t n_interface = 0;
    double wall_refine = 0.0;
    ShapeSpec shape;
    std::string design_space;
    std::size_t n = 10;
    std::size_t iters = 2000;
};

struct ProbeSpec {
    std::string region;          // "" = first subdomain
    std::vector<double> start, end;
    std::size_t n = 100;
};

struct EvalSpec {
    std::vector<double> thresholds{0.001, 0.01, 0.1};
};

// pso.* keys. Objective grammar "axis:<name>:min|max"; constraint grammar
// "axis:<name> <= <bound>" or "metric:delta_p:<boundary tag> <= <bound>" or
// "metric:t_max[:<region>] <= <bound>" (metric constraints need pso.model
// and pso.eval_cloud).
struct PsoSpec {
    std::string design_space;
    std::string objective;
    std::vector<std::pair<std::string, std::string>> constraints;  // name -> grammar
    PsoConfig config;
    std::string model;
    std::string eval_cloud;
};

struct RunConfig {
    std::string name;
    std::string out_dir;         // default runs/<name>
    std::string cloud;           // domain cloud CSV
    std::string data_cloud;      // optional measurement cloud
    int dim = 2;
    std::uint64_t seed = 0;

    std::vector<SubdomainSpec> subdomains;
    std::vector<InterfaceSpec> interfaces;
    std::vector<BoundarySpec> boundaries;
    std::map<std::string, std::string> boundary_region;  // tag -> owning region

    // train.* keys
    std::size_t steps = 10000;
    double warm_fraction = 0.2;
    double lr0 = 1e-3;
    double lr_decay = 0.9;
    std::size_t lr_decay_every = 10000;
    double clip_norm = 1.0;
    double batch_fraction = 0.01;
    std::size_t resample_every = 5000;
    std::size_t anneal_every = 100;
    double anneal_alpha = 0.1;
    double anneal_threshold = 1e-5;
    std::map<std::string, double> anneal_thresholds;
    double divergence_threshold = 1e6;

    double sparse_fraction = 0.01;  // sparse.* keys
    EvalSpec eval;
    ProbeSpec probe;
    SampleSpec sample;
    PsoSpec pso;

    // soft diagnostics gathered at parse time (e.g. batch_fraction above the
    // 5% guidance)
    std::vector<std::string> warnings;
};

// Parses and fully validates a key=value config. Every violation is
// collected and reported at once, each prefixed with its key. Referenced
// files must exist at parse time.
RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);

// Canonical text with every effective value spelled out;
// parse(serialize(cfg)) == cfg (modulo warnings) and serialize is a fixed
// point after one round trip.
std::string serialize_run_config(const RunConfig& cfg);

// Fresh model per the config: Xavier-initialized networks, interfaces,
// boundary ownership, parameter offsets assigned.
Model build_model(const RunConfig& cfg);

TrainConfig build_train_config(const RunConfig& cfg, bool has_data);

}  // namespace pinnflow
