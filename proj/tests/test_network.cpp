#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "pinnflow/network.hpp"
#include "pinnflow/rng.hpp"

using namespace pinnflow;

namespace {

NetworkConfig tiny_cfg(int in, std::vector<int> hidden, std::vector<std::string> outs,
                       std::uint64_t seed = 1) {
    NetworkConfig cfg;
    cfg.input_dim = in;
    cfg.hidden = std::move(hidden);
    cfg.output_names = std::move(outs);
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("zero-weight network: outputs are the denormalization means, jets flat") {
    NetworkConfig cfg = tiny_cfg(2, {4}, {"u", "v"});
    Normalization norm = Normalization::identity(2, 2);
    norm.out_mean = {1.5, -2.0};
    ParameterStore params(cfg.widths());  // zero-initialized

    std::vector<double> x{0.3, -0.7};
    std::vector<double> y = net_eval(params, cfg, norm, x);
    CHECK(y[0] == 1.5);
    CHECK(y[1] == -2.0);

    Tape t;
    t.add_params(params.flat());
    auto jets = net_forward_jets(t, t.param_begin(), params, cfg, norm, x, 2, JetMode::full);
    REQUIRE(jets.size() == 2);
    CHECK(t.value(jets[0].v) == 1.5);
    for (int k = 0; k < 2; ++k) {
        CHECK(t.value(jets[0].d1[k]) == 0.0);
        CHECK(t.value(jets[0].d2[k]) == 0.0);
    }
}

TEST_CASE("identity affine then tanh at x = 0: value 0, d1 = 1, d2 = 0") {
    NetworkConfig cfg = tiny_cfg(1, {1}, {"u"});
    Normalization norm = Normalization::identity(1, 1);
    ParameterStore params(cfg.widths());
    params[params.w_index(0, 0, 0)] = 1.0;  // hidden weight
    params[params.w_index(1, 0, 0)] = 1.0;  // output weight

    Tape t;
    t.add_params(params.flat());
    std::vector<double> x{0.0};
    auto jets = net_forward_jets(t, t.param_begin(), params, cfg, norm, x, 1, JetMode::full);
    CHECK(t.value(jets[0].v) == 0.0);
    CHECK(t.value(jets[0].d1[0]) == 1.0);
    CHECK(t.value(jets[0].d2[0]) == 0.0);
}

TEST_CASE("random 3-layer tanh nets match central differences") {
    for (std::uint64_t seed : {11u, 22u, 33u}) {
        NetworkConfig cfg = tiny_cfg(2, {16, 16, 16}, {"u", "v", "p"}, seed);
        Normalization norm = Normalization::identity(2, 3);
        ParameterStore params = init_xavier(cfg);
        Rng rng(mix_seed(seed, 99));
        std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        FiniteDiffReport rep = finite_diff_check(params, cfg, norm, x, 2, 1e-4);
        CHECK(rep.max_rel_d1 < 1e-6);
        CHECK(rep.max_rel_d2 < 1e-4);
    }
}

TEST_CASE("finite difference check with normalization and 3D inputs") {
    NetworkConfig cfg = tiny_cfg(3, {12, 12}, {"u", "v", "w", "p"}, 5);
    Normalization norm;
    norm.in_mean = {0.5, -0.5, 1.0};
    norm.in_std = {2.0, 0.5, 1.5};
    norm.out_mean = {1.0, 2.0, 3.0, 4.0};
    norm.out_std = {0.5, 2.0, 1.0, 3.0};
    ParameterStore params = init_xavier(cfg);
    std::vector<double> x{0.2, -0.1, 0.8};
    FiniteDiffReport rep = finite_diff_check(params, cfg, norm, x, 3, 1e-4);
    CHECK(rep.max_rel_d1 < 1e-6);
    CHECK(rep.max_rel_d2 < 1e-4);
}

TEST_CASE("finite_diff_check rejects h = 0 and reports 0 for constant nets") {
    NetworkConfig cfg = tiny_cfg(2, {4}, {"u"});
    Normalization norm = Normalization::identity(2, 1);
    ParameterStore params(cfg.widths());
    std::vector<double> x{0.1, 0.2};
    CHECK_THROWS_AS(finite_diff_check(params, cfg, norm, x, 2, 0.0), ValidationError);
    FiniteDiffReport rep = finite_diff_check(params, cfg, norm, x, 2, 1e-4);
    CHECK(rep.max_rel_d1 == 0.0);
    CHECK(rep.max_rel_d2 == 0.0);
}

TEST_CASE("xavier init: bounds, zero biases, seed determinism") {
    NetworkConfig cfg = tiny_cfg(4, {4}, {"u", "v", "w", "p"}, 77);
    ParameterStore a = init_xavier(cfg);
    ParameterStore b = init_xavier(cfg);
    REQUIRE(a.total_count() == b.total_count());
    const double bound = std::sqrt(6.0 / 8.0);  // fan_in = fan_out = 4
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        const LayerShape& s = a.layer(l);
        for (int r = 0; r < s.out; ++r) {
            for (int c = 0; c < s.in; ++c) {
                double w = a[a.w_index(l, r, c)];
                CHECK(std::fabs(w) <= bound);
            }
            CHECK(a[a.b_index(l, r)] == 0.0);
        }
    }
    for (std::size_t i = 0; i < a.total_count(); ++i) CHECK(a[i] == b[i]);

    NetworkConfig other = cfg;
    other.seed = 78;
    ParameterStore c = init_xavier(other);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.total_count(); ++i) any_diff |= a[i] != c[i];
    CHECK(any_diff);
}

TEST_CASE("fourier embedding values") {
    FourierEmbedding emb = make_fourier_embedding(3, 2, 1.0, 4);
    REQUIRE(emb.b.size() == 6);

    std::vector<double> zero{0.0, 0.0};
    std::vector<double> g = fourier_embed(zero, emb);
    REQUIRE(g.size() == 6);
    for (int j = 0; j < 3; ++j) {
        CHECK(g[2 * j] == 1.0);      // cos 0
        CHECK(g[2 * j + 1] == 0.0);  // sin 0
    }

    // one frequency with b.v = 0.25 -> [cos(pi/2), sin(pi/2)] = [0, 1]
    FourierEmbedding one = make_fourier_embedding(1, 1, 1.0, 4);
    one.b = {0.25};
    std::vector<double> v{1.0};
    std::vector<double> gv = fourier_embed(v, one);
    CHECK(std::fabs(gv[0]) < 1e-15);
    CHECK(gv[1] == doctest::Approx(1.0).epsilon(1e-15));

    Rng rng(9);
    std::vector<double> any{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    std::vector<double> ga = fourier_embed(any, emb);
    CHECK(ga.size() == 6);
    for (double e : ga) CHECK(std::fabs(e) <= 1.0);
}

TEST_CASE("embedding spatial derivatives are analytic through the jet path") {
    NetworkConfig cfg = tiny_cfg(1, {1}, {"u"});
    cfg.embedding = make_fourier_embedding(1, 1, 1.0, 3);
    cfg.embedding->b = {0.3};
    Normalization norm = Normalization::identity(1, 1);
    ParameterStore params(cfg.widths());  // first layer in = 2m = 2

    const double xv = 0.45, tau = 2.0 * M_PI * 0.3;
    struct Pick {
        int col;
        double a, da;  // embedding coordinate and its x-derivative
    };
    Pick picks[2] = {
        {0, std::cos(tau * xv), -tau * std::sin(tau * xv)},
        {1, std::sin(tau * xv), tau * std::cos(tau * xv)},
    };
    for (const Pick& pk : picks) {
        ParameterStore p(cfg.widths());
        p[p.w_index(0, 0, pk.col)] = 1.0;  // route one embedding coordinate
        p[p.w_index(1, 0, 0)] = 1.0;
        Tape t;
        t.add_params(p.flat());
        std::vector<double> x{xv};
        auto jets = net_forward_jets(t, t.param_begin(), p, cfg, norm, x, 1, JetMode::full);
        const double a = pk.a;
        const double want_v = std::tanh(a);
        const double want_d1 = (1 - want_v * want_v) * pk.da;
        CHECK(t.value(jets[0].v) == doctest::Approx(want_v).epsilon(1e-12));
        CHECK(t.value(jets[0].d1[0]) == doctest::Approx(want_d1).epsilon(1e-10));
    }
    (void)params;
}

TEST_CASE("tape-free forward agrees with the taped values") {
    NetworkConfig cfg = tiny_cfg(2, {8, 8}, {"u", "p"}, 13);
    cfg.embedding = make_fourier_embedding(4, 2, 1.5, 13);
    Normalization norm;
    norm.in_mean = {0.1, 0.2};
    norm.in_std = {1.1, 0.9};
    norm.out_mean = {0.5, -0.5};
    norm.out_std = {2.0, 0.25};
    ParameterStore params = init_xavier(cfg);
    std::vector<double> x{0.33, -0.21};

    std::vector<double> plain = net_eval(params, cfg, norm, x);
    Tape t;
    t.add_params(params.flat());
    auto jets = net_forward_jets(t, t.param_begin(), params, cfg, norm, x, 2, JetMode::value);
    REQUIRE(plain.size() == jets.size());
    for (std::size_t i = 0; i < plain.size(); ++i)
        CHECK(plain[i] == doctest::Approx(t.value(jets[i].v)).epsilon(1e-12));
}

TEST_CASE("network block round-trips bit-exact through text") {
    NetworkConfig cfg = tiny_cfg(2, {6, 5}, {"u", "v", "p"}, 21);
    cfg.embedding = make_fourier_embedding(3, 2, 2.5, 21);
    Normalization norm;
    norm.in_mean = {0.1, -0.2};
    norm.in_std = {1.5, 2.5};
    norm.out_mean = {1.0 / 3.0, 0.7, -0.9};
    norm.out_std = {0.3, 1.0, 2.0};
    ParameterStore params = init_xavier(cfg);

    std::stringstream ss;
    save_network_block(ss, "main", cfg, norm, params);
    NetworkBlock blk;
    REQUIRE(load_network_block(ss, blk));
    CHECK(blk.name == "main");
    CHECK(blk.config.input_dim == 2);
    CHECK(blk.config.hidden == cfg.hidden);
    CHECK(blk.config.output_names == cfg.output_names);
    REQUIRE(blk.config.embedding.has_value());
    CHECK(blk.config.embedding->m == 3);
    REQUIRE(blk.config.embedding->b.size() == cfg.embedding->b.size());
    for (std::size_t i = 0; i < cfg.embedding->b.size(); ++i)
        CHECK(blk.config.embedding->b[i] == cfg.embedding->b[i]);
    for (std::size_t i = 0; i < norm.out_mean.size(); ++i)
        CHECK(blk.norm.out_mean[i] == norm.out_mean[i]);
    REQUIRE(blk.params.total_count() == params.total_count());
    for (std::size_t i = 0; i < params.total_count(); ++i) CHECK(blk.params[i] == params[i]);

    NetworkBlock none;
    CHECK_FALSE(load_network_block(ss, none));  // EOF
}

TEST_CASE("config and normalization validation") {
    NetworkConfig cfg = tiny_cfg(2, {4}, {});
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.output_names = {"u", "u"};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.output_names = {"u", "zeta"};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.output_names = {"u"};
    cfg.hidden = {0};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);

    Normalization norm = Normalization::identity(2, 1);
    norm.in_std[0] = 0.0;
    CHECK_THROWS_AS(norm.validate(2, 1), ValidationError);
}
