#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "pinnflow/runconfig.hpp"

using namespace pinnflow;

namespace {

const char* kMinimal = R"(# minimal heat setup
name = demo

subdomain.main.physics = poisson
)";

const char* kTwoRegion = R"(name = slab-pair
dim = 2
seed = 42

subdomain.slab1.physics = conjugate
subdomain.slab1.outputs = T
subdomain.slab1.hidden = 12,12
subdomain.slab1.k = 2

subdomain.slab2.physics = conjugate
subdomain.slab2.outputs = T
subdomain.slab2.hidden = 12,12

interface.gap = slab1,slab2

boundary.left.T = dirichlet:1
boundary.right.T = dirichlet:0
boundary.left.region = slab1
boundary.right.region = slab2

train.steps = 500
train.warm_fraction = 0
sample.shape = two-slab
)";

}  // namespace

TEST_CASE("minimal config fills every default") {
    RunConfig cfg = parse_run_config_text(kMinimal, "inline");
    CHECK(cfg.name == "demo");
    CHECK(cfg.out_dir == "runs/demo");
    CHECK(cfg.dim == 2);
    CHECK(cfg.seed == 0);
    REQUIRE(cfg.subdomains.size() == 1);
    CHECK(cfg.subdomains[0].region == "main");
    CHECK(cfg.subdomains[0].physics == "poisson");
    CHECK(cfg.subdomains[0].hidden == std::vector<int>{32, 32});
    CHECK(cfg.subdomains[0].outputs == std::vector<std::string>{"T"});
    CHECK(cfg.subdomains[0].embedding == 0);
    CHECK(cfg.steps == 10000);
    CHECK(cfg.warm_fraction == 0.2);
    CHECK(cfg.lr0 == 1e-3);
    CHECK(cfg.batch_fraction == 0.01);
    CHECK(cfg.anneal_threshold == 1e-5);
    CHECK(cfg.sparse_fraction == 0.01);
    CHECK(cfg.eval.thresholds == std::vector<double>{0.001, 0.01, 0.1});
    CHECK(cfg.pso.config.n_particles == 30);
    CHECK(cfg.pso.config.w == 0.7);
    CHECK(cfg.pso.config.c1 == 1.5);
    CHECK(cfg.pso.config.lambda_penalty == 1e3);
    CHECK(cfg.pso.config.beta == 1e4);
    CHECK(cfg.pso.config.max_iters == 200);
    CHECK(cfg.warnings.empty());

    // and the defaults are spelled out when written back
    std::string text = serialize_run_config(cfg);
    CHECK(text.find("train.steps = 10000\n") != std::string::npos);
    CHECK(text.find("train.batch_fraction = 0.01\n") != std::string::npos);
    CHECK(text.find("pso.w = 0.69999999999999996\n") != std::string::npos);
    CHECK(text.find("sample.shape = box\n") != std::string::npos);
}

TEST_CASE("unknown keys are rejected by name") {
    std::string text = std::string(kMinimal) + "turbulence_model = sst\n";
    try {
        parse_run_config_text(text, "inline");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("turbulence_model: unknown key") != std::string::npos);
    }
}

TEST_CASE("every violation is listed in one report") {
    std::string text = std::string(kMinimal) +
                       "train.warm_fraction = 1.5\n"
                       "train.lr0 = -1\n"
                       "wibble = 3\n";
    try {
        parse_run_config_text(text, "inline");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("3 problems") != std::string::npos);
        CHECK(msg.find("train.warm_fraction: must be in [0, 1)") != std::string::npos);
        CHECK(msg.find("train.lr0: must be positive") != std::string::npos);
        CHECK(msg.find("wibble: unknown key") != std::string::npos);
    }
}

TEST_CASE("oversized batch fraction warns without failing") {
    std::string text = std::string(kMinimal) + "train.batch_fraction = 0.5\n";
    RunConfig cfg = parse_run_config_text(text, "inline");
    CHECK(cfg.batch_fraction == 0.5);
    REQUIRE(cfg.warnings.size() == 1);
    CHECK(cfg.warnings[0].find("train.batch_fraction") != std::string::npos);
    CHECK(cfg.warnings[0].find("guidance") != std::string::npos);

    // at the 5% edge there is nothing to warn about
    RunConfig quiet =
        parse_run_config_text(std::string(kMinimal) + "train.batch_fraction = 0.05\n", "inline");
    CHECK(quiet.warnings.empty());
}

TEST_CASE("serialization is a fixed point after one round trip") {
    RunConfig cfg = parse_run_config_text(kTwoRegion, "inline");
    std::string once = serialize_run_config(cfg);
    RunConfig reparsed = parse_run_config_text(once, "round-trip");
    std::string twice = serialize_run_config(reparsed);
    CHECK(once == twice);

    // structure survives
    REQUIRE(reparsed.subdomains.size() == 2);
    CHECK(reparsed.subdomains[0].region == "slab1");
    CHECK(reparsed.subdomains[0].props.k == 2.0);
    REQUIRE(reparsed.interfaces.size() == 1);
    CHECK(reparsed.interfaces[0].name == "gap");
    CHECK(reparsed.interfaces[0].region1 == "slab1");
    REQUIRE(reparsed.boundaries.size() == 2);
    CHECK(reparsed.boundary_region.at("left") == "slab1");
    CHECK(reparsed.sample.shape.kind == ShapeSpec::Kind::two_slab);
}

TEST_CASE("boundary condition grammar covers all four forms") {
    std::string text = "name = grammar\n"
                       "subdomain.main.outputs = u,v,p,T\n"
                       "subdomain.main.physics = ns\n"
                       "boundary.inlet.u = dirichlet:parabola:0.3\n"
                       "boundary.inlet.v = dirichlet:0\n"
                       "boundary.wall.u = dirichlet:from_data\n"
                       "boundary.outlet.p = neumann:0.5\n";
    // ns needs u,v,p; T rides along for the grammar check
    RunConfig cfg = parse_run_config_text(text, "inline");
    REQUIRE(cfg.boundaries.size() == 4);
    std::map<std::string, const BoundarySpec*> by_key;
    for (const BoundarySpec& b : cfg.boundaries) by_key[b.tag + "." + b.output] = &b;

    const BoundarySpec* inlet_u = by_key.at("inlet.u");
    CHECK(inlet_u->kind == BoundarySpec::Kind::dirichlet);
    CHECK(inlet_u->profile == BoundarySpec::Profile::parabola);
    CHECK(inlet_u->value == 0.3);
    CHECK(by_key.at("inlet.v")->profile == BoundarySpec::Profile::constant);
    CHECK(by_key.at("wall.u")->profile == BoundarySpec::Profile::from_data);
    const BoundarySpec* outlet_p = by_key.at("outlet.p");
    CHECK(outlet_p->kind == BoundarySpec::Kind::neumann);
    CHECK(outlet_p->value == 0.5);
}

TEST_CASE("malformed boundary lines name the offending key") {
    auto expect_contains = [](const std::string& extra, const std::string& needle) {
        try {
            parse_run_config_text(std::string(kMinimal) + extra, "inline");
            FAIL_CHECK("expected a validation error for: " << extra);
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_contains("boundary.inlet.q = dirichlet:1\n", "boundary.inlet.q: unknown output");
    expect_contains("boundary.inlet.T = slip:1\n", "unknown condition kind 'slip'");
    expect_contains("boundary.inlet.T = dirichlet\n", "boundary.inlet.T");
    expect_contains("boundary.inlet.T = dirichlet:parabola:tall\n", "bad peak");
    expect_contains("boundary.inlet.region = elsewhere\n", "unknown region 'elsewhere'");
    expect_contains("boundary.inlet = dirichlet:1\n",
                    "expected boundary.<tag>.<output> = <condition>");
}

TEST_CASE("physics kinds constrain the output list") {
    auto expect_contains = [](const std::string& text, const std::string& needle) {
        try {
            parse_run_config_text(text, "inline");
            FAIL_CHECK("expected a validation error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_contains("name = x\nsubdomain.main.physics = ns\nsubdomain.main.outputs = u,p\n",
                    "ns needs 'v'");
    expect_contains("name = x\nsubdomain.main.physics = ns\nsubdomain.main.outputs = u,v,p\ndim = 3\n",
                    "ns needs 'w' in 3D");
    expect_contains("name = x\nsubdomain.main.physics = energy\nsubdomain.main.outputs = u\n",
                    "energy needs 'T'");
    expect_contains("name = x\nsubdomain.main.physics = sst\n", "unknown kind 'sst'");
    expect_contains("name = x\nsubdomain.main.outputs = T,T\n", "duplicate field 'T'");
    expect_contains("name = x\nsubdomain.main.outputs = zeta\n", "unknown field 'zeta'");
}

TEST_CASE("repeated keys are reported as duplicates") {
    std::string text = std::string(kMinimal) + "subdomain.main.physics = energy\n";
    try {
        parse_run_config_text(text, "inline");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("subdomain.main.physics: duplicate key") !=
              std::string::npos);
    }
}

TEST_CASE("referenced files must exist at parse time") {
    std::string text = std::string(kMinimal) + "cloud = /no/such/cloud.csv\n";
    try {
        parse_run_config_text(text, "inline");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("cloud: file not found") != std::string::npos);
    }
}

TEST_CASE("model construction is deterministic in the config seed") {
    RunConfig cfg = parse_run_config_text(kTwoRegion, "inline");
    Model a = build_model(cfg);
    Model b = build_model(cfg);
    REQUIRE(a.subdomains.size() == 2);
    CHECK(a.subdomains[0].region == "slab1");
    CHECK(a.subdomains[1].region == "slab2");
    CHECK(a.subdomains[0].param_offset == 0);
    CHECK(a.subdomains[1].param_offset > 0);
    CHECK(a.boundary_owner.at("left") == 0);
    CHECK(a.boundary_owner.at("right") == 1);
    REQUIRE(a.interfaces.size() == 1);

    std::vector<double> pa = a.gather_params(), pb = b.gather_params();
    REQUIRE(pa.size() == pb.size());
    CHECK(std::memcmp(pa.data(), pb.data(), pa.size() * sizeof(double)) == 0);

    // the two regions start from different weights despite equal shapes
    std::span<const double> s1(pa.data(), a.subdomains[1].param_offset);
    std::span<const double> s2(pa.data() + a.subdomains[1].param_offset,
                               pa.size() - a.subdomains[1].param_offset);
    REQUIRE(s1.size() == s2.size());
    CHECK(std::memcmp(s1.data(), s2.data(), s1.size() * sizeof(double)) != 0);

    RunConfig other = cfg;
    other.seed = cfg.seed + 1;
    std::vector<double> pc = build_model(other).gather_params();
    CHECK(std::memcmp(pa.data(), pc.data(), pa.size() * sizeof(double)) != 0);
}

TEST_CASE("embedding request reaches the network construction") {
    std::string text = std::string(kMinimal) +
                       "subdomain.main.embedding = 16\n"
                       "subdomain.main.embedding_sigma = 10\n";
    RunConfig cfg = parse_run_config_text(text, "inline");
    Model m = build_model(cfg);
    REQUIRE(m.subdomains[0].config.embedding.has_value());
    CHECK(m.subdomains[0].config.embedding->m == 16);
    CHECK(m.subdomains[0].config.first_layer_in() == 32);

    // a plain model keeps the raw inputs
    Model plain = build_model(parse_run_config_text(kMinimal, "inline"));
    CHECK_FALSE(plain.subdomains[0].config.embedding.has_value());
    CHECK(plain.subdomains[0].config.first_layer_in() == 2);
}

TEST_CASE("train plan derives from the parsed step budget") {
    RunConfig cfg = parse_run_config_text(kMinimal, "inline");
    cfg.steps = 1000;
    cfg.warm_fraction = 0.2;
    TrainConfig with_data = build_train_config(cfg, true);
    REQUIRE(with_data.phases.size() == 2);
    CHECK(with_data.phases[0].name == "warm");
    CHECK(with_data.phases[0].steps == 200);
    CHECK(with_data.phases[1].steps == 800);
    CHECK(with_data.lr0 == cfg.lr0);
    CHECK(with_data.seed == cfg.seed);

    TrainConfig without = build_train_config(cfg, false);
    REQUIRE(without.phases.size() == 1);
    CHECK(without.phases[0].use_physics);
    CHECK_FALSE(without.phases[0].use_data);
    CHECK(without.phases[0].steps == 1000);
}

TEST_CASE("interface declarations are validated against regions") {
    auto expect_contains = [](const std::string& text, const std::string& needle) {
        try {
            parse_run_config_text(text, "inline");
            FAIL_CHECK("expected a validation error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_contains(std::string(kMinimal) + "interface.gap = main,elsewhere\n",
                    "unknown region 'elsewhere'");
    expect_contains(std::string(kMinimal) + "interface.gap = main,main\n",
                    "regions must differ");
    expect_contains(std::string(kMinimal) + "interface.gap = main\n", "expected two regions");
}
