#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "pinnflow/cloud.hpp"
#include "pinnflow/util.hpp"

using namespace pinnflow;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
}

}  // namespace

TEST_CASE("unit box interior points are strictly inside and tagged interior") {
    ShapeSpec shape;  // default box [0,1]^2
    PointCloud c = sample_domain(shape, 1000, 0, 0, 0.0, 3);
    REQUIRE(c.size() == 1000);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c.tags[i] == "interior");
        auto p = c.point(i);
        for (double v : p) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("boundary sampling: points on faces with outward unit normals") {
    ShapeSpec shape;
    PointCloud c = sample_domain(shape, 10, 25, 0, 0.0, 5);
    std::size_t n_bnd = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto name = tag_boundary_name(c.tags[i]);
        if (!name) continue;
        ++n_bnd;
        std::vector<double> nrm = c.normal(i);
        double len = std::hypot(nrm[0], nrm[1]);
        CHECK(len == doctest::Approx(1.0).epsilon(1e-12));
        // outward: stepping along the normal leaves the box
        auto p = c.point(i);
        std::vector<double> outside{p[0] + 1e-3 * nrm[0], p[1] + 1e-3 * nrm[1]};
        CHECK_FALSE(shape.inside(outside));
    }
    CHECK(n_bnd == 4 * 25);
}

TEST_CASE("normals agree with the signed distance gradient") {
    for (auto kind : {ShapeSpec::Kind::box, ShapeSpec::Kind::channel_obstacle,
                      ShapeSpec::Kind::tube}) {
        ShapeSpec shape;
        shape.kind = kind;
        PointCloud c = sample_domain(shape, 5, 40, 0, 0.0, 11);
        const double h = 1e-6;
        const int dim = shape.spatial_dim();
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (!tag_boundary_name(c.tags[i])) continue;
            std::vector<double> nrm = c.normal(i);
            std::vector<double> g(dim);
            double norm2 = 0.0;
            for (int k = 0; k < dim; ++k) {
                std::vector<double> hi(c.point(i).begin(), c.point(i).end());
                std::vector<double> lo = hi;
                hi[k] += h;
                lo[k] -= h;
                g[k] = (shape.sdf(hi) - shape.sdf(lo)) / (2 * h);
                norm2 += g[k] * g[k];
            }
            REQUIRE(norm2 > 0.0);
            for (int k = 0; k < dim; ++k)
                CHECK(std::fabs(g[k] / std::sqrt(norm2) - nrm[k]) < 1e-3);
        }
    }
}

TEST_CASE("constricted tube: throat radius is 0.6x the inlet radius") {
    ShapeSpec shape;
    shape.kind = ShapeSpec::Kind::tube;
    shape.tube_radius = 0.5;
    shape.area_ratio = 0.36;
    // at the bump center the radius shrinks to sqrt(0.36) = 0.6 of nominal
    const double throat = 0.6 * shape.tube_radius;
    std::vector<double> just_in{shape.bump_center, throat - 1e-6, 0.0};
    std::vector<double> just_out{shape.bump_center, throat + 1e-6, 0.0};
    CHECK(shape.inside(just_in));
    CHECK_FALSE(shape.inside(just_out));
    // far from the bump the full radius is back
    std::vector<double> wide{0.05, 0.45, 0.0};
    CHECK(shape.inside(wide));
}

TEST_CASE("two-slab shape splits regions and owns an interface") {
    ShapeSpec shape;
    shape.kind = ShapeSpec::Kind::two_slab;
    shape.split = 0.5;
    CHECK(shape.region_of(std::vector<double>{0.2, 0.5}) == "slab1");
    CHECK(shape.region_of(std::vector<double>{0.8, 0.5}) == "slab2");
    CHECK(shape.interface_tags() == std::vector<std::string>{"gap"});

    PointCloud c = sample_domain(shape, 40, 10, 15, 0.0, 7);
    std::size_t n_iface = 0;
    bool saw_slab1 = false, saw_slab2 = false;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (tag_interface_name(c.tags[i])) {
            ++n_iface;
            CHECK(c.point(i)[0] == doctest::Approx(0.5).epsilon(1e-12));
            // interface normals point from slab1 into slab2
            CHECK(c.normal(i)[0] == doctest::Approx(1.0).epsilon(1e-12));
        }
        if (c.tags[i] == "interior:slab1") saw_slab1 = true;
        if (c.tags[i] == "interior:slab2") saw_slab2 = true;
    }
    CHECK(n_iface == 15);
    CHECK(saw_slab1);
    CHECK(saw_slab2);
}

TEST_CASE("same seed reproduces the identical cloud") {
    ShapeSpec shape;
    shape.kind = ShapeSpec::Kind::channel_obstacle;
    PointCloud a = sample_domain(shape, 200, 30, 0, 0.2, 17);
    PointCloud b = sample_domain(shape, 200, 30, 0, 0.2, 17);
    REQUIRE(a.size() == b.size());
    CHECK(a.xs == b.xs);
    CHECK(a.tags == b.tags);
    PointCloud c = sample_domain(shape, 200, 30, 0, 0.2, 18);
    CHECK(a.xs != c.xs);
}

TEST_CASE("sparse selection: size, determinism, subset property") {
    ShapeSpec shape;
    PointCloud c = sample_domain(shape, 500, 0, 0, 0.0, 2);
    c.cols["T"] = std::vector<double>(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) c.cols["T"][i] = double(i);

    PointCloud s = select_sparse_data(c, 0.01, 9);
    CHECK(s.size() == 5);  // lround(0.01 * 500)
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(tag_is_data(s.tags[i]));

    // rows are a subset of the original (T column tracks the source row)
    std::set<double> picked;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double key = s.col("T", i);
        CHECK(picked.insert(key).second);  // no duplicates
        std::size_t src = static_cast<std::size_t>(key);
        REQUIRE(src < c.size());
        CHECK(s.point(i)[0] == c.point(src)[0]);
        CHECK(s.point(i)[1] == c.point(src)[1]);
    }

    PointCloud again = select_sparse_data(c, 0.01, 9);
    CHECK(again.xs == s.xs);

    PointCloud all = select_sparse_data(c, 1.0, 4);
    CHECK(all.size() == c.size());

    CHECK_THROWS_AS(select_sparse_data(c, 1e-9, 4), ValidationError);
    PointCloud bare = sample_domain(shape, 10, 0, 0, 0.0, 2);
    CHECK_THROWS_AS(select_sparse_data(bare, 0.5, 4), ValidationError);
}

TEST_CASE("cloud csv round-trip is lossless") {
    ShapeSpec shape;
    shape.kind = ShapeSpec::Kind::two_slab;
    PointCloud c = sample_domain(shape, 50, 8, 6, 0.0, 21);
    c.cols["T"] = std::vector<double>(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) c.cols["T"][i] = std::sin(double(i)) / 3.0;

    const std::string path = tmp_path("roundtrip_cloud.csv");
    save_cloud(path, c);
    PointCloud r = load_cloud(path);
    CHECK(r.dim == c.dim);
    CHECK(r.xs == c.xs);          // bit-exact through 17 significant digits
    CHECK(r.tags == c.tags);
    REQUIRE(r.has_col("T"));
    CHECK(r.cols.at("T") == c.cols.at("T"));
    CHECK(r.cols.at("nx") == c.cols.at("nx"));
    fs::remove(path);
}

TEST_CASE("cloud csv rejects malformed input with row numbers") {
    const std::string path = tmp_path("bad_cloud.csv");

    write_file(path, "y,tag\n0.5,interior\n");
    CHECK_THROWS_WITH_AS(load_cloud(path), doctest::Contains("x"), ValidationError);

    write_file(path, "x,y,tag,vorticity\n0,0,interior,1\n");
    CHECK_THROWS_WITH_AS(load_cloud(path), doctest::Contains("vorticity"), ValidationError);

    // rows are numbered by file line, header included
    write_file(path, "x,y,tag\n0.1,0.2,interior\n0.3,interior\n");
    CHECK_THROWS_WITH_AS(load_cloud(path), doctest::Contains("row 3"), ValidationError);

    write_file(path, "x,y,tag\n0.1,nan,interior\n");
    CHECK_THROWS_WITH_AS(load_cloud(path), doctest::Contains("row 2"), ValidationError);

    // non-unit normal on a boundary row
    write_file(path, "x,y,tag,nx,ny\n0,0,boundary:left,0.5,0.1\n");
    CHECK_THROWS_AS(load_cloud(path), ValidationError);
    fs::remove(path);
}

TEST_CASE("design space io and validation") {
    DesignSpace space;
    space.axes = {{"vel", "m/s", 3.0, 7.0}, {"fin", "mm", 15.0, 23.0}, {"power", "W", 30.0, 60.0}};
    CHECK_NOTHROW(space.validate());

    const std::string path = tmp_path("space.csv");
    save_design_space(path, space);
    DesignSpace r = load_design_space(path);
    REQUIRE(r.axes.size() == 3);
    CHECK(r.axes[1].name == "fin");
    CHECK(r.axes[1].unit == "mm");
    CHECK(r.axes[1].lo == 15.0);
    CHECK(r.axes[1].hi == 23.0);
    fs::remove(path);

    DesignSpace bad = space;
    bad.axes[0].hi = bad.axes[0].lo;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    DesignSpace dup = space;
    dup.axes[2].name = "vel";
    CHECK_THROWS_AS(dup.validate(), ValidationError);
}

TEST_CASE("latin hypercube: stratification and maximin improvement") {
    DesignSpace space;
    space.axes = {{"a", "", 0.0, 1.0}, {"b", "", 0.0, 1.0}, {"c", "", 0.0, 1.0}};

    SUBCASE("n = 2 puts one sample in each half per axis") {
        auto rows = maximin_lhs(space, 2, 5, 0);
        REQUIRE(rows.size() == 2);
        for (std::size_t k = 0; k < 3; ++k) {
            std::vector<double> v{rows[0][k], rows[1][k]};
            std::sort(v.begin(), v.end());
            CHECK(v[0] < 0.5);
            CHECK(v[1] >= 0.5);
        }
    }

    SUBCASE("marginal property holds for larger n after optimization") {
        const std::size_t n = 8;
        auto rows = maximin_lhs(space, n, 31, 500);
        REQUIRE(rows.size() == n);
        for (std::size_t k = 0; k < 3; ++k) {
            std::vector<int> strata(n, 0);
            for (auto& r : rows) {
                auto& axis = space.axes[k];
                double u = (r[k] - axis.lo) / (axis.hi - axis.lo);
                int s = std::min<int>(int(u * n), int(n) - 1);
                ++strata[s];
            }
            for (int count : strata) CHECK(count == 1);
        }
    }

    SUBCASE("swap optimization never worsens the minimum pairwise distance") {
        auto min_dist = [&](const std::vector<std::vector<double>>& rows) {
            double best = 1e300;
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (std::size_t j = i + 1; j < rows.size(); ++j) {
                    double d2 = 0.0;
                    for (std::size_t k = 0; k < 3; ++k) {
                        double d = (rows[i][k] - rows[j][k]) /
                                   (space.axes[k].hi - space.axes[k].lo);
                        d2 += d * d;
                    }
                    best = std::min(best, d2);
                }
            return best;
        };
        auto raw = maximin_lhs(space, 10, 13, 0);
        auto opt = maximin_lhs(space, 10, 13, 400);
        CHECK(min_dist(opt) >= min_dist(raw) - 1e-15);
    }

    SUBCASE("deterministic per seed") {
        auto a = maximin_lhs(space, 6, 77, 100);
        auto b = maximin_lhs(space, 6, 77, 100);
        CHECK(a == b);
    }
}

TEST_CASE("doe table save emits one named column per axis") {
    DesignSpace space;
    space.axes = {{"vel", "m/s", 3.0, 7.0}, {"power", "W", 30.0, 60.0}};
    auto rows = maximin_lhs(space, 4, 3, 50);
    const std::string path = tmp_path("doe.csv");
    save_doe(path, space, rows);

    std::FILE* f = std::fopen(path.c_str(), "r");
    REQUIRE(f);
    char line[256];
    REQUIRE(std::fgets(line, sizeof line, f));
    CHECK(std::string(line).find("vel") != std::string::npos);
    CHECK(std::string(line).find("power") != std::string::npos);
    std::size_t rows_seen = 0;
    while (std::fgets(line, sizeof line, f)) ++rows_seen;
    std::fclose(f);
    CHECK(rows_seen == 4);
    fs::remove(path);
}
