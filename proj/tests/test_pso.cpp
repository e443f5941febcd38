#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pinnflow/pso.hpp"

using namespace pinnflow;
namespace fs = std::filesystem;

namespace {

DesignSpace cube(std::size_t d, double lo = -1.0, double hi = 1.0) {
    DesignSpace s;
    const char* names[] = {"a", "b", "c", "d"};
    for (std::size_t k = 0; k < d; ++k) s.axes.push_back({names[k], "", lo, hi});
    return s;
}

double sphere(std::span<const double> u) {
    double s = 0.0;
    for (double x : u) s += x * x;
    return s;
}

}  // namespace

TEST_CASE("penalty adds the scaled square plus the flat charge per violation") {
    PsoConfig cfg;
    cfg.lambda_penalty = 10.0;
    cfg.beta = 100.0;
    auto f = [](std::span<const double> u) { return u[0]; };

    ConstraintSpec c;
    c.name = "cap";
    c.bound = 1.0;
    c.metric = [](std::span<const double> u) { return u[1]; };
    std::vector<ConstraintSpec> cs{c};

    // violated by exactly one bound-width: f + 10*1^2 + 100
    std::vector<double> u{3.0, 2.0};
    CHECK(penalty_objective(f, cs, u, cfg) == doctest::Approx(113.0).epsilon(1e-15));

    // sitting on the bound is allowed (strict inequality)
    u[1] = 1.0;
    CHECK(penalty_objective(f, cs, u, cfg) == 3.0);
    u[1] = 0.5;
    CHECK(penalty_objective(f, cs, u, cfg) == 3.0);

    // no constraints at all
    CHECK(penalty_objective(f, {}, u, cfg) == 3.0);

    // negative bound normalizes by its magnitude
    cs[0].bound = -2.0;
    u[1] = -1.0;  // violation 1, scaled by |−2| -> 0.5
    CHECK(penalty_objective(f, cs, u, cfg) ==
          doctest::Approx(3.0 + 10.0 * 0.25 + 100.0).epsilon(1e-15));

    // two violated constraints charge twice
    cs[0].bound = 1.0;
    cs.push_back(cs[0]);
    u[1] = 2.0;
    CHECK(penalty_objective(f, cs, u, cfg) == doctest::Approx(3.0 + 2 * 110.0).epsilon(1e-15));
}

TEST_CASE("throwing metrics or objectives poison the point with +inf") {
    PsoConfig cfg;
    auto f = [](std::span<const double>) { return 1.0; };
    ConstraintSpec c;
    c.name = "broken";
    c.bound = 0.0;
    c.metric = [](std::span<const double>) -> double { throw std::runtime_error("no model"); };
    std::vector<ConstraintSpec> cs{c};
    std::vector<double> u{0.0};
    CHECK(std::isinf(penalty_objective(f, cs, u, cfg)));

    auto bad_f = [](std::span<const double>) -> double { throw std::runtime_error("boom"); };
    CHECK(std::isinf(penalty_objective(bad_f, {}, u, cfg)));

    // a non-finite bound is a configuration error, not a bad point
    cs[0].metric = [](std::span<const double>) { return 0.0; };
    cs[0].bound = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(penalty_objective(f, cs, u, cfg), ValidationError);
}

TEST_CASE("pure inertia moves particles by exactly their velocity") {
    DesignSpace space = cube(2, -10.0, 10.0);
    PsoConfig cfg;
    cfg.w = 1.0;
    cfg.c1 = cfg.c2 = 0.0;

    Swarm swarm;
    swarm.particles.resize(2);
    swarm.particles[0].x = {1.0, 2.0};
    swarm.particles[0].v = {0.5, -0.25};
    swarm.particles[1].x = {0.0, 0.0};
    swarm.particles[1].v = {0.0, 1.0};
    for (Particle& p : swarm.particles) {
        p.best_x = p.x;
        p.best_fit = sphere(p.x);
    }
    swarm.gbest_x = swarm.particles[1].x;
    swarm.gbest_fit = swarm.particles[1].best_fit;

    std::vector<Rng> streams;
    streams.emplace_back(1);
    streams.emplace_back(2);
    auto feasible = [](std::span<const double>) { return true; };
    pso_step(swarm, space, cfg, streams, sphere, feasible);

    CHECK(swarm.particles[0].x == std::vector<double>{1.5, 1.75});
    CHECK(swarm.particles[0].v == std::vector<double>{0.5, -0.25});
    CHECK(swarm.particles[1].x == std::vector<double>{0.0, 1.0});
    CHECK(swarm.particles[0].fit == doctest::Approx(sphere(swarm.particles[0].x)));
    // global best refreshed from the new personal bests
    CHECK(swarm.gbest_fit <= 1.0);
}

TEST_CASE("a particle resting on the global best stays put") {
    DesignSpace space = cube(2);
    PsoConfig cfg;  // any pull coefficients
    Swarm swarm;
    swarm.particles.resize(2);
    for (Particle& p : swarm.particles) {
        p.x = {0.25, -0.5};
        p.v = {0.0, 0.0};
        p.best_x = p.x;
        p.best_fit = sphere(p.x);
    }
    swarm.gbest_x = swarm.particles[0].x;
    swarm.gbest_fit = swarm.particles[0].best_fit;

    std::vector<Rng> streams;
    streams.emplace_back(7);
    streams.emplace_back(8);
    auto feasible = [](std::span<const double>) { return true; };
    pso_step(swarm, space, cfg, streams, sphere, feasible);
    for (const Particle& p : swarm.particles) {
        CHECK(p.x == std::vector<double>{0.25, -0.5});
        CHECK(p.v == std::vector<double>{0.0, 0.0});
    }
}

TEST_CASE("velocity and position clamps keep particles inside the box") {
    DesignSpace space = cube(1, 0.0, 2.0);  // range 2, vmax 1
    PsoConfig cfg;
    cfg.w = 1.0;
    cfg.c1 = cfg.c2 = 0.0;
    Swarm swarm;
    swarm.particles.resize(2);
    swarm.particles[0].x = {0.5};
    swarm.particles[0].v = {100.0};  // clamped to 1, lands at 1.5
    swarm.particles[1].x = {1.8};
    swarm.particles[1].v = {0.9};  // would land at 2.7, clamped to hi with zeroed velocity
    for (Particle& p : swarm.particles) {
        p.best_x = p.x;
        p.best_fit = sphere(p.x);
    }
    swarm.gbest_x = swarm.particles[0].x;
    swarm.gbest_fit = swarm.particles[0].best_fit;

    std::vector<Rng> streams;
    streams.emplace_back(3);
    streams.emplace_back(4);
    auto feasible = [](std::span<const double>) { return true; };
    pso_step(swarm, space, cfg, streams, sphere, feasible);

    CHECK(swarm.particles[0].x[0] == 1.5);
    CHECK(swarm.particles[0].v[0] == 1.0);
    CHECK(swarm.particles[1].x[0] == 2.0);
    CHECK(swarm.particles[1].v[0] == 0.0);
}

TEST_CASE("unconstrained sphere search finds the origin") {
    PsoConfig cfg;
    cfg.seed = 17;
    PsoResult res = optimize(sphere, {}, cube(3), cfg);
    CHECK(res.feasible);
    REQUIRE(res.best_x.size() == 3);
    for (double x : res.best_x) CHECK(std::fabs(x) < 1e-3);
    CHECK(res.best_f < 1e-5);

    // the penalized best-so-far trace never worsens and spans every iteration
    REQUIRE(res.gbest_history.size() == cfg.max_iters + 1);
    for (std::size_t i = 1; i < res.gbest_history.size(); ++i)
        CHECK(res.gbest_history[i] <= res.gbest_history[i - 1]);
}

TEST_CASE("axis floor constraint pins the sphere optimum to the wall") {
    ConstraintSpec floor;
    floor.name = "a_floor";
    floor.bound = -0.5;  // -a <= -0.5, i.e. a >= 0.5
    floor.metric = [](std::span<const double> u) { return -u[0]; };
    std::vector<ConstraintSpec> cs{floor};

    PsoConfig cfg;
    cfg.seed = 23;
    PsoResult res = optimize(sphere, cs, cube(3), cfg);
    REQUIRE(res.feasible);
    CHECK(std::fabs(res.best_x[0] - 0.5) < 1e-2);
    CHECK(std::fabs(res.best_x[1]) < 1e-2);
    CHECK(std::fabs(res.best_x[2]) < 1e-2);
    CHECK(res.best_f == doctest::Approx(0.25).epsilon(0.05));
    // reported objective is the raw value, no penalty mixed in
    CHECK(res.best_f == doctest::Approx(sphere(res.best_x)).epsilon(1e-12));
}

TEST_CASE("identical seeds reproduce the whole search") {
    PsoConfig cfg;
    cfg.seed = 41;
    cfg.max_iters = 40;
    PsoResult a = optimize(sphere, {}, cube(2), cfg);
    PsoResult b = optimize(sphere, {}, cube(2), cfg);
    CHECK(a.best_x == b.best_x);
    CHECK(a.gbest_history == b.gbest_history);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t s = 0; s < a.snapshots.size(); ++s)
        CHECK(a.snapshots[s].positions == b.snapshots[s].positions);

    cfg.seed = 42;
    PsoResult c = optimize(sphere, {}, cube(2), cfg);
    CHECK(a.gbest_history != c.gbest_history);
}

TEST_CASE("snapshots record start, midpoint and final swarm inside bounds") {
    PsoConfig cfg;
    cfg.seed = 5;
    cfg.max_iters = 50;
    cfg.n_particles = 8;
    DesignSpace space = cube(2, 0.5, 2.5);
    PsoResult res = optimize(sphere, {}, space, cfg);

    REQUIRE(res.snapshots.size() == 3);
    CHECK(res.snapshots[0].iter == 0);
    CHECK(res.snapshots[1].iter == 25);
    CHECK(res.snapshots[2].iter == 50);
    for (const PsoSnapshot& s : res.snapshots) {
        REQUIRE(s.positions.size() == 8);
        REQUIRE(s.fitness.size() == 8);
        REQUIRE(s.feasible.size() == 8);
        for (const auto& pos : s.positions) {
            REQUIRE(pos.size() == 2);
            for (std::size_t k = 0; k < 2; ++k) {
                CHECK(pos[k] >= 0.5);
                CHECK(pos[k] <= 2.5);
            }
        }
    }
    // constrained to the box, the sphere optimum sits at the lower corner
    CHECK(res.best_x[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(res.best_x[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("an unsatisfiable constraint is reported, not hidden") {
    ConstraintSpec never;
    never.name = "impossible";
    never.bound = -1.0;
    never.metric = [](std::span<const double>) { return 0.0; };  // 0 <= -1 never holds
    std::vector<ConstraintSpec> cs{never};

    PsoConfig cfg;
    cfg.seed = 9;
    cfg.max_iters = 20;
    PsoResult res = optimize(sphere, cs, cube(2), cfg);
    CHECK_FALSE(res.feasible);
    // every point pays the flat charge, so the penalized best reflects it
    CHECK(res.best_f >= cfg.beta);
    for (const Particle& p : res.swarm.particles) CHECK_FALSE(p.feasible);
}

TEST_CASE("swarm configuration is validated up front") {
    PsoConfig cfg;
    cfg.n_particles = 1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = PsoConfig{};
    cfg.w = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = PsoConfig{};
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = PsoConfig{};
    cfg.beta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK_NOTHROW(PsoConfig{}.validate());
}

TEST_CASE("snapshot csv lists one row per particle per kept iteration") {
    PsoConfig cfg;
    cfg.seed = 3;
    cfg.n_particles = 4;
    cfg.max_iters = 10;
    DesignSpace space = cube(2, 0.0, 1.0);
    PsoResult res = optimize(sphere, {}, space, cfg);

    fs::path dir = fs::temp_directory_path() / "pinnflow_pso_csv";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string path = (dir / "swarm.csv").string();
    save_snapshots_csv(path, space, res.snapshots);

    std::ifstream f(path);
    std::string line;
    REQUIRE(std::getline(f, line));
    CHECK(line == "iteration,particle,a,b,fitness,feasible");
    std::size_t rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 3 * 4);
    fs::remove_all(dir);
}
