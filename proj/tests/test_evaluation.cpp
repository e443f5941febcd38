#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "pinnflow/evaluation.hpp"

using namespace pinnflow;
namespace fs = std::filesystem;

namespace {

// zero-weight network: predicts exactly norm.out_mean everywhere
Model make_constant_model(std::vector<std::string> outputs, std::vector<double> means,
                          std::string physics = "ns") {
    Model m;
    m.spatial_dim = 2;
    Subdomain sd;
    sd.physics = std::move(physics);
    sd.config.input_dim = 2;
    sd.config.hidden = {4};
    sd.config.output_names = std::move(outputs);
    sd.norm = Normalization::identity(2, static_cast<int>(means.size()));
    sd.norm.out_mean = std::move(means);
    sd.params = ParameterStore(sd.config.widths());
    m.subdomains.push_back(std::move(sd));
    m.finalize();
    return m;
}

std::string tmp_dir(const std::string& stem) {
    fs::path p = fs::temp_directory_path() / ("pinnflow_eval_" + stem);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

}  // namespace

TEST_CASE("root-mean error matches the hand examples") {
    std::vector<double> same{0.5, -1.0, 2.0};
    CHECK(rms_error(same, same) == 0.0);

    std::vector<double> one_pred{1.0}, one_truth{0.0};
    CHECK(rms_error(one_pred, one_truth) == 1.0);

    // errors 1 and 0 -> sqrt((1 + 0)/2)
    std::vector<double> p{1.0, 2.0}, t{0.0, 2.0};
    CHECK(rms_error(p, t) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

    std::vector<double> short_t{0.0};
    CHECK_THROWS_AS(rms_error(p, short_t), ValidationError);
    CHECK_THROWS_AS(rms_error({}, {}), ValidationError);
}

TEST_CASE("exceedance curve counts strict threshold crossings") {
    std::vector<double> p{0.1, 0.3}, t{0.0, 0.0};

    std::vector<double> at{0.2};
    auto curve = mae_exceedance(p, t, at);
    REQUIRE(curve.size() == 1);
    CHECK(curve[0].first == 0.2);
    CHECK(curve[0].second == 0.5);

    // every |error| beats a negative threshold
    std::vector<double> neg{-1.0};
    CHECK(mae_exceedance(p, t, neg)[0].second == 1.0);

    // exact prediction never exceeds a nonnegative threshold (strict >)
    std::vector<double> zero{0.0, 0.1};
    auto exact = mae_exceedance(t, t, zero);
    CHECK(exact[0].second == 0.0);
    CHECK(exact[1].second == 0.0);

    // nonincreasing over an ascending grid
    std::vector<double> grid{0.0, 0.05, 0.1, 0.2, 0.3, 1.0};
    auto c = mae_exceedance(p, t, grid);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i].second <= c[i - 1].second);
    CHECK(c.back().second == 0.0);

    std::vector<double> descending{0.3, 0.2};
    CHECK_THROWS_AS(mae_exceedance(p, t, descending), ValidationError);
}

TEST_CASE("line probe spaces samples evenly and keeps the endpoints") {
    Model m = make_constant_model({"u", "v", "p"}, {1.5, -0.5, 3.0});
    std::vector<double> a{0.0, 1.0}, b{2.0, 0.0};
    ProbeResult pr = line_probe(m, 0, a, b, 5);
    REQUIRE(pr.size() == 5);
    REQUIRE(pr.output_names == std::vector<std::string>{"u", "v", "p"});
    CHECK(pr.dim == 2);
    // endpoints are exact
    CHECK(pr.xs[0] == 0.0);
    CHECK(pr.xs[1] == 1.0);
    CHECK(pr.xs[8] == 2.0);
    CHECK(pr.xs[9] == 0.0);
    // interior samples at i/(n-1)
    CHECK(pr.xs[4] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pr.xs[5] == doctest::Approx(0.5).epsilon(1e-15));
    // constant model: every row carries the output means
    for (std::size_t i = 0; i < pr.size(); ++i) {
        CHECK(pr.values[i * 3 + 0] == 1.5);
        CHECK(pr.values[i * 3 + 1] == -0.5);
        CHECK(pr.values[i * 3 + 2] == 3.0);
    }

    // two samples are exactly the endpoints
    ProbeResult two = line_probe(m, 0, a, b, 2);
    CHECK(two.size() == 2);
    CHECK(two.xs == std::vector<double>{0.0, 1.0, 2.0, 0.0});

    CHECK_THROWS_AS(line_probe(m, 0, a, b, 1), ValidationError);
    CHECK_THROWS_AS(line_probe(m, 0, a, a, 5), ValidationError);  // zero length
    CHECK_THROWS_AS(line_probe(m, 1, a, b, 5), ValidationError);  // no such subdomain
    std::vector<double> c3{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(line_probe(m, 0, c3, c3, 5), ValidationError);
}

TEST_CASE("metric report aggregates per-field and vector velocity errors") {
    Model m = make_constant_model({"u", "v", "p"}, {1.0, 0.0, 2.0});
    PointCloud cloud;
    cloud.dim = 2;
    const double us[] = {1.0, 0.5, 2.0, 1.5};
    const double vs[] = {0.0, 0.5, -0.5, 0.0};
    for (int i = 0; i < 4; ++i) {
        cloud.xs.insert(cloud.xs.end(), {0.1 * i, 0.2});
        cloud.tags.push_back("data");
        cloud.cols["u"].push_back(us[i]);
        cloud.cols["v"].push_back(vs[i]);
    }

    std::vector<double> thresholds{0.25, 0.75};
    MetricReport rep = compute_metrics(m, cloud, thresholds);
    CHECK(rep.n_points == 4);
    REQUIRE(rep.fields.size() == 2);  // p has no truth column

    const FieldMetrics& fu = rep.fields[0];
    CHECK(fu.field == "u");
    double expect_u = 0.0;
    for (double uv : us) expect_u += (1.0 - uv) * (1.0 - uv);
    expect_u = std::sqrt(expect_u / 4.0);
    CHECK(fu.mse == doctest::Approx(expect_u).epsilon(1e-15));
    CHECK(fu.pred_min == 1.0);
    CHECK(fu.pred_max == 1.0);
    CHECK(fu.truth_min == 0.5);
    CHECK(fu.truth_max == 2.0);
    REQUIRE(fu.exceedance.size() == 2);
    CHECK(fu.exceedance[0].second == 0.75);  // errors 0, .5, 1, .5 -> three above 0.25
    CHECK(fu.exceedance[1].second == 0.25);  // one above 0.75

    // vector velocity: sqrt(mean over points of |du|^2 + |dv|^2)
    REQUIRE(rep.has_velocity);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
        acc += (1.0 - us[i]) * (1.0 - us[i]) + (0.0 - vs[i]) * (0.0 - vs[i]);
    CHECK(rep.velocity_mse == doctest::Approx(std::sqrt(acc / 4.0)).epsilon(1e-15));

    PointCloud empty;
    empty.dim = 2;
    CHECK_THROWS_AS(compute_metrics(m, empty, thresholds), ValidationError);

    PointCloud unrelated = cloud;
    unrelated.cols.erase("u");
    unrelated.cols.erase("v");
    unrelated.cols["T"] = std::vector<double>(4, 0.0);
    CHECK_THROWS_AS(compute_metrics(m, unrelated, thresholds), ValidationError);
}

TEST_CASE("boundary pressure averages the tagged rows only") {
    Model m = make_constant_model({"u", "v", "p"}, {0.0, 0.0, 11.0});
    PointCloud cloud;
    cloud.dim = 2;
    auto add = [&](double x, double y, const std::string& tag) {
        cloud.xs.insert(cloud.xs.end(), {x, y});
        cloud.tags.push_back(tag);
        cloud.cols["nx"].push_back(tag.rfind("boundary:", 0) == 0 ? -1.0 : 0.0);
        cloud.cols["ny"].push_back(0.0);
    };
    add(0.0, 0.2, "boundary:inlet");
    add(0.0, 0.5, "boundary:inlet");
    add(0.0, 0.8, "boundary:inlet");
    add(3.0, 0.5, "boundary:outlet");
    add(1.0, 0.5, "interior");

    CHECK(mean_boundary_pressure(m, cloud, "inlet") == 11.0);
    CHECK_THROWS_AS(mean_boundary_pressure(m, cloud, "lid"), ValidationError);

    Model no_p = make_constant_model({"T"}, {1.0}, "poisson");
    CHECK_THROWS_AS(mean_boundary_pressure(no_p, cloud, "inlet"), ValidationError);
}

TEST_CASE("peak temperature scans interior and data rows of a region") {
    Model m = make_constant_model({"T"}, {350.0}, "poisson");
    PointCloud cloud;
    cloud.dim = 2;
    cloud.xs = {0.2, 0.2, 0.8, 0.8};
    cloud.tags = {"interior", "data"};
    CHECK(max_region_temperature(m, cloud, "") == 350.0);
    CHECK_THROWS_AS(max_region_temperature(m, cloud, "fin"), ValidationError);

    // boundary-only cloud has no usable rows
    PointCloud walls;
    walls.dim = 2;
    walls.xs = {0.0, 0.0};
    walls.tags = {"boundary:xmin"};
    walls.cols["nx"] = {-1.0};
    walls.cols["ny"] = {0.0};
    CHECK_THROWS_AS(max_region_temperature(m, walls, ""), ValidationError);
}

TEST_CASE("metric and probe files round-trip through disk") {
    Model m = make_constant_model({"u", "v", "p"}, {1.0, 0.0, 2.0});
    PointCloud cloud;
    cloud.dim = 2;
    for (int i = 0; i < 3; ++i) {
        cloud.xs.insert(cloud.xs.end(), {0.3 * i, 0.1});
        cloud.tags.push_back("data");
        cloud.cols["u"].push_back(0.5 * i);
        cloud.cols["v"].push_back(0.0);
    }
    std::vector<double> thresholds{0.1};
    MetricReport rep = compute_metrics(m, cloud, thresholds);

    std::string dir = tmp_dir("io");
    save_metrics_csv(dir + "/metrics.csv", rep);
    save_metrics_summary(dir + "/summary.txt", rep);
    ProbeResult pr = line_probe(m, 0, std::vector<double>{0.0, 0.0},
                                std::vector<double>{1.0, 1.0}, 3);
    save_probe_csv(dir + "/probe.csv", pr);

    std::ifstream mf(dir + "/metrics.csv");
    std::string line;
    REQUIRE(std::getline(mf, line));
    CHECK(line == "field,mse,pred_min,pred_max,truth_min,truth_max");
    std::size_t lines = 0;
    bool velocity_row = false, exceedance_header = false;
    while (std::getline(mf, line)) {
        ++lines;
        if (line.rfind("velocity,", 0) == 0) velocity_row = true;
        if (line == "field,threshold,fraction_above") exceedance_header = true;
    }
    CHECK(velocity_row);
    CHECK(exceedance_header);
    CHECK(lines >= 6);  // u,v rows + velocity + blank + header + 2 curve rows

    std::ifstream pf(dir + "/probe.csv");
    REQUIRE(std::getline(pf, line));
    CHECK(line == "x,y,u,v,p");
    lines = 0;
    while (std::getline(pf, line)) ++lines;
    CHECK(lines == 3);

    std::ifstream sf(dir + "/summary.txt");
    REQUIRE(std::getline(sf, line));
    CHECK(line == "evaluation over 3 points");
    fs::remove_all(dir);
}
