#pragma once

#include <deque>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pinnflow {

// Threshold-gated adaptive loss weighting. Every weighted component keeps a
// running weight lambda; an update pulls it toward the gradient-balance
// target lambda_hat = max|grad L_r| / mean|grad L_i|, except that components
// already below their loss threshold get lambda_hat = 0 and decay
// geometrically until they matter again.
struct AnnealingState {
    std::map<std::string, double> lambdas;     // component -> weight, init 1
    std::map<std::string, double> thresholds;  // component -> gate, default 1e-5
    double alpha = 0.1;
    double default_threshold = 1e-5;
    std::size_t history_cap = 16;
    // most recent lambda snapshots, newest last
    std::deque<std::map<std::string, double>> history;

    double lambda(const std::string& key) const;
    double threshold(const std::string& key) const;
};

// max|grad_r| / mean|grad_i|; 0 when either the residual gradient vanishes
// or mean|grad_i| is 0 (the component is already extremized).
double compute_lambda_hat(std::span<const double> grad_r, std::span<const double> grad_i);

// One Algorithm-style update over all components present in `grads`
// (residual key "r" excluded from reweighting). losses are the current
// unweighted component values used for the threshold gate.
void annealing_update(AnnealingState& state, const std::map<std::string, double>& losses,
                      const std::map<std::string, std::vector<double>>& grads);

}  // namespace pinnflow
