#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pinnflow/cloud.hpp"
#include "pinnflow/rng.hpp"

namespace pinnflow {

struct PsoConfig {
    std::size_t n_particles = 30;
    double w = 0.7;              // inertia
    double c1 = 1.5, c2 = 1.5;   // cognitive / social pull
    double lambda_penalty = 1e3;
    double beta = 1e4;           // flat cost per violated constraint
    std::size_t max_iters = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

// One inequality constraint g(u) <= bound. The violation is normalized by
// |bound| before squaring so differently scaled constraints see comparable
// penalties.
struct ConstraintSpec {
    std::string name;
    std::function<double(std::span<const double>)> metric;
    double bound = 0.0;
};

// f(u) plus, per violated constraint (strictly g > bound),
// lambda * ((g - bound)/max(|bound|, 1e-9))^2 + beta. A metric or objective
// that throws marks the point infeasible with +inf fitness.
double penalty_objective(const std::function<double(std::span<const double>)>& f,
                         std::span<const ConstraintSpec> constraints, std::span<const double> u,
                         const PsoConfig& cfg);

struct Particle {
    std::vector<double> x, v;
    std::vector<double> best_x;
    double best_fit = 0.0;
    double fit = 0.0;
    bool feasible = false;
};

struct Swarm {
    std::vector<Particle> particles;
    std::vector<double> gbest_x;
    double gbest_fit = 0.0;
};

struct PsoSnapshot {
    std::size_t iter = 0;
    std::vector<std::vector<double>> positions;
    std::vector<double> fitness;
    std::vector<char> feasible;
};

struct PsoResult {
    std::vector<double> best_x;  // best feasible point, or best penalized if none
    double best_f = 0.0;         // raw objective at best_x when feasible, else penalized
    bool feasible = false;
    Swarm swarm;                            // final state
    std::vector<PsoSnapshot> snapshots;     // iterations 0, mid, final
    std::vector<double> gbest_history;      // penalized best per iteration
};

// One velocity/position update for every particle. r1, r2 are scalar draws
// per particle per step from that particle's own stream; velocities are
// clamped to half the axis range, positions to the axis bounds (zeroing the
// velocity on any clamped axis). Fitness of the new positions is evaluated
// and bests are refreshed (global best by value, lowest particle index on
// ties).
void pso_step(Swarm& swarm, const DesignSpace& space, const PsoConfig& cfg,
              std::vector<Rng>& streams,
              const std::function<double(std::span<const double>)>& fitness,
              const std::function<bool(std::span<const double>)>& is_feasible);

PsoResult optimize(const std::function<double(std::span<const double>)>& objective,
                   std::span<const ConstraintSpec> constraints, const DesignSpace& space,
                   const PsoConfig& cfg);

void save_snapshots_csv(const std::string& path, const DesignSpace& space,
                        std::span<const PsoSnapshot> snapshots);

}  // namespace pinnflow
