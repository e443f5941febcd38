#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pinnflow/annealing.hpp"
#include "pinnflow/batch.hpp"

namespace pinnflow {

// Adam moment buffers. Step count lives here so bias correction is always
// consistent with the number of applied updates.
struct AdamState {
    std::vector<double> m, v;
    std::size_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// One Adam update in place. Returns false (and leaves everything untouched)
// when the gradient contains a non-finite entry.
bool adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               double lr);

// Scales grad to max_norm when its l2 norm exceeds it. Returns the pre-clip
// norm.
double clip_global_norm(std::span<double> grad, double max_norm);

// Rows drawn per category each step: round(fraction * n) with a floor of 32,
// capped at the category size.
std::size_t minibatch_size(std::size_t n, double fraction);

// One training phase: which loss families are active and for how many steps.
struct TrainPhase {
    std::string name;
    bool use_physics = true;  // collocation + boundary + interface losses
    bool use_data = true;
    std::size_t steps = 0;
};

struct TrainConfig {
    std::vector<TrainPhase> phases;
    double lr0 = 1e-3;
    double lr_decay = 0.9;
    std::size_t lr_decay_every = 10000;
    double clip_norm = 1.0;
    double batch_fraction = 0.01;       // of each point category, floor 32
    std::size_t resample_every = 5000;  // optimizer steps
    std::size_t anneal_every = 100;     // physics phases only
    double anneal_alpha = 0.1;
    double anneal_threshold = 1e-5;     // gate for every weighted component
    std::map<std::string, double> anneal_thresholds;  // per-component overrides
    double divergence_threshold = 1e6;
    std::uint64_t seed = 0;
    std::string checkpoint_dir;  // empty: no phase-boundary checkpoints

    void validate() const;
};

// warm-start split: a data-only phase of round(warm_fraction * total) steps
// followed by a hybrid phase. warm_fraction 0 or no data -> single phase.
std::vector<TrainPhase> default_phases(std::size_t total_steps, double warm_fraction,
                                       bool has_data);

struct TrainRecord {
    std::size_t step = 0;  // global optimizer step, 1-based
    double residual = 0.0;
    bool has_residual = false;
    std::map<std::string, double> losses;   // unweighted, evaluated components only
    std::map<std::string, double> lambdas;
    double total = 0.0;
    double lr = 0.0;
    double grad_norm = 0.0;  // pre-clip
    double wall_seconds = 0.0;
};

struct TrainHistory {
    std::vector<TrainRecord> records;
    std::vector<std::string> events;  // skipped steps, phase transitions
};

// step,L_r,loss columns,lambda columns,lr,grad_norm — wall time is kept in
// memory only. Cells for components a row never evaluated stay empty.
void save_history_csv(const std::string& path, const TrainHistory& history);

// Runs the configured phases. The model behind `evaluator` is updated in
// place; throws DivergenceError after restoring the last finite parameter
// state (and writing it as a checkpoint when a directory is configured).
TrainHistory train(BatchEvaluator& evaluator, Model& model, const TrainConfig& cfg);

}  // namespace pinnflow
