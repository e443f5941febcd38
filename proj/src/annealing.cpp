#include "pinnflow/annealing.hpp"

#include <cmath>
#include <vector>

#include "pinnflow/errors.hpp"

namespace pinnflow {

double AnnealingState::lambda(const std::string& key) const {
    auto it = lambdas.find(key);
    return it == lambdas.end() ? 1.0 : it->second;
}

double AnnealingState::threshold(const std::string& key) const {
    auto it = thresholds.find(key);
    return it == thresholds.end() ? default_threshold : it->second;
}

double compute_lambda_hat(std::span<const double> grad_r, std::span<const double> grad_i) {
    if (grad_r.size() != grad_i.size())
        throw ValidationError("annealing: gradient sizes differ");
    double mx = 0.0;
    for (double g : grad_r) mx = std::max(mx, std::fabs(g));
    if (mx == 0.0) return 0.0;
    double mean = 0.0;
    for (double g : grad_i) mean += std::fabs(g);
    mean /= static_cast<double>(grad_i.size());
    if (mean == 0.0) return 0.0;
    return mx / mean;
}

void annealing_update(AnnealingState& state, const std::map<std::string, double>& losses,
                      const std::map<std::string, std::vector<double>>& grads) {
    auto gr = grads.find("r");
    if (gr == grads.end()) throw ValidationError("annealing: residual gradient \"r\" missing");

    for (const auto& [key, grad] : grads) {
        if (key == "r") continue;
        auto li = losses.find(key);
        if (li == losses.end())
            throw ValidationError("annealing: no loss value for component '" + key + "'");
        double hat = 0.0;
        if (li->second > state.threshold(key)) hat = compute_lambda_hat(gr->second, grad);
        double lam = state.lambda(key);
        state.lambdas[key] = (1.0 - state.alpha) * lam + state.alpha * hat;
    }

    state.history.push_back(state.lambdas);
    while (state.history.size() > state.history_cap) state.history.pop_front();
}

}  // namespace pinnflow
