#include "pinnflow/pso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "pinnflow/util.hpp"

namespace pinnflow {

void PsoConfig::validate() const {
    if (n_particles < 2) throw ValidationError("pso: need at least 2 particles");
    if (w < 0.0 || c1 < 0.0 || c2 < 0.0)
        throw ValidationError("pso: w, c1, c2 must be nonnegative");
    if (lambda_penalty < 0.0 || beta < 0.0)
        throw ValidationError("pso: penalty weights must be nonnegative");
    if (max_iters == 0) throw ValidationError("pso: max_iters must be positive");
}

double penalty_objective(const std::function<double(std::span<const double>)>& f,
                         std::span<const ConstraintSpec> constraints, std::span<const double> u,
                         const PsoConfig& cfg) {
    try {
        double total = f(u);
        for (const ConstraintSpec& c : constraints) {
            if (!std::isfinite(c.bound)) throw ValidationError("pso: constraint bound not finite");
            const double g = c.metric(u);
            if (g > c.bound) {
                const double v = (g - c.bound) / std::max(std::fabs(c.bound), 1e-9);
                total += cfg.lambda_penalty * v * v + cfg.beta;
            }
        }
        if (!std::isfinite(total)) return std::numeric_limits<double>::infinity();
        return total;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
    }
}

namespace {

bool all_satisfied(std::span<const ConstraintSpec> constraints, std::span<const double> u) {
    try {
        for (const ConstraintSpec& c : constraints)
            if (c.metric(u) > c.bound) return false;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

void refresh_gbest(Swarm& swarm) {
    for (const Particle& p : swarm.particles) {
        if (swarm.gbest_x.empty() || p.best_fit < swarm.gbest_fit) {
            swarm.gbest_fit = p.best_fit;
            swarm.gbest_x = p.best_x;
        }
    }
}

PsoSnapshot snapshot(std::size_t iter, const Swarm& swarm) {
    PsoSnapshot s;
    s.iter = iter;
    for (const Particle& p : swarm.particles) {
        s.positions.push_back(p.x);
        s.fitness.push_back(p.fit);
        s.feasible.push_back(p.feasible ? 1 : 0);
    }
    return s;
}

}  // namespace

void pso_step(Swarm& swarm, const DesignSpace& space, const PsoConfig& cfg,
              std::vector<Rng>& streams,
              const std::function<double(std::span<const double>)>& fitness,
              const std::function<bool(std::span<const double>)>& is_feasible) {
    const std::size_t d = space.axes.size();
    for (std::size_t pi = 0; pi < swarm.particles.size(); ++pi) {
        Particle& p = swarm.particles[pi];
        const double r1 = streams[pi].uniform();
        const double r2 = streams[pi].uniform();
        for (std::size_t k = 0; k < d; ++k) {
            const double range = space.axes[k].hi - space.axes[k].lo;
            double v = cfg.w * p.v[k] + cfg.c1 * r1 * (p.best_x[k] - p.x[k]) +
                       cfg.c2 * r2 * (swarm.gbest_x[k] - p.x[k]);
            const double vmax = 0.5 * range;
            v = std::clamp(v, -vmax, vmax);
            double x = p.x[k] + v;
            if (x < space.axes[k].lo) {
                x = space.axes[k].lo;
                v = 0.0;
            } else if (x > space.axes[k].hi) {
                x = space.axes[k].hi;
                v = 0.0;
            }
            p.v[k] = v;
            p.x[k] = x;
        }
    }
    // fitness is pure; evaluations can fan out
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long pi = 0; pi < static_cast<long long>(swarm.particles.size()); ++pi) {
        Particle& p = swarm.particles[static_cast<std::size_t>(pi)];
        p.fit = fitness(p.x);
        p.feasible = is_feasible(p.x);
    }
    for (Particle& p : swarm.particles) {
        if (p.fit < p.best_fit) {
            p.best_fit = p.fit;
            p.best_x = p.x;
        }
    }
    refresh_gbest(swarm);
}

PsoResult optimize(const std::function<double(std::span<const double>)>& objective,
                   std::span<const ConstraintSpec> constraints, const DesignSpace& space,
                   const PsoConfig& cfg) {
    cfg.validate();
    space.validate();
    const std::size_t d = space.axes.size();

    auto fitness = [&](std::span<const double> u) {
        return penalty_objective(objective, constraints, u, cfg);
    };
    auto feasible = [&](std::span<const double> u) { return all_satisfied(constraints, u); };

    // one stream per particle so particle trajectories do not depend on
    // evaluation order
    std::vector<Rng> streams;
    streams.reserve(cfg.n_particles);
    for (std::size_t p = 0; p < cfg.n_particles; ++p)
        streams.emplace_back(mix_seed(cfg.seed, 0x50534f00ull + p));

    Swarm swarm;
    swarm.particles.resize(cfg.n_particles);
    for (std::size_t pi = 0; pi < cfg.n_particles; ++pi) {
        Particle& p = swarm.particles[pi];
        p.x.resize(d);
        p.v.assign(d, 0.0);
        for (std::size_t k = 0; k < d; ++k)
            p.x[k] = space.axes[k].lo + streams[pi].uniform() * (space.axes[k].hi - space.axes[k].lo);
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long pi = 0; pi < static_cast<long long>(swarm.particles.size()); ++pi) {
        Particle& p = swarm.particles[static_cast<std::size_t>(pi)];
        p.fit = fitness(p.x);
        p.feasible = feasible(p.x);
        p.best_x = p.x;
        p.best_fit = p.fit;
    }
    refresh_gbest(swarm);

    PsoResult result;
    std::vector<double> best_feas_x;
    double best_feas_f = std::numeric_limits<double>::infinity();
    auto track_feasible = [&] {
        for (const Particle& p : swarm.particles) {
            if (!p.feasible) continue;
            try {
                const double raw = objective(p.x);
                if (raw < best_feas_f) {
                    best_feas_f = raw;
                    best_feas_x = p.x;
                }
            } catch (const std::exception&) {
            }
        }
    };

    result.snapshots.push_back(snapshot(0, swarm));
    result.gbest_history.push_back(swarm.gbest_fit);
    track_feasible();

    const std::size_t mid = cfg.max_iters / 2;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        pso_step(swarm, space, cfg, streams, fitness, feasible);
        track_feasible();
        result.gbest_history.push_back(swarm.gbest_fit);
        if (it == mid || it == cfg.max_iters) result.snapshots.push_back(snapshot(it, swarm));
    }

    result.swarm = swarm;
    if (!best_feas_x.empty()) {
        result.best_x = best_feas_x;
        result.best_f = best_feas_f;
        result.feasible = true;
    } else {
        result.best_x = swarm.gbest_x;
        result.best_f = swarm.gbest_fit;
        result.feasible = false;
    }
    return result;
}

void save_snapshots_csv(const std::string& path, const DesignSpace& space,
                        std::span<const PsoSnapshot> snapshots) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "iteration,particle";
    for (const DesignAxis& a : space.axes) f << ',' << a.name;
    f << ",fitness,feasible\n";
    for (const PsoSnapshot& s : snapshots)
        for (std::size_t p = 0; p < s.positions.size(); ++p) {
            f << s.iter << ',' << p;
            for (double x : s.positions[p]) f << ',' << fmt_g17(x);
            f << ',' << fmt_g17(s.fitness[p]) << ',' << int(s.feasible[p]) << '\n';
        }
    if (!f.good()) throw IoError("short write on " + path);
}

}  // namespace pinnflow
