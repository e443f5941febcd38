#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinnflow/errors.hpp"

namespace pinnflow {

// Point-set container shared by sampling, training and evaluation. Tags
// follow the grammar
//   interior[:<region>] | boundary:<name> | interface:<name> | data[:<region>]
// Columns are whole-file optional: a column either exists for every row or
// not at all (the CSV schema has no per-cell blanks). Normals, when present,
// are unit length on boundary/interface rows and zero elsewhere.
class PointCloud {
public:
    int dim = 2;                  // spatial dimension (2 or 3)
    std::vector<double> xs;       // n x dim, row-major
    std::vector<std::string> tags;
    std::map<std::string, std::vector<double>> cols;  // u v w p T nu_t nx ny nz

    std::size_t size() const { return tags.size(); }
    std::span<const double> point(std::size_t i) const { return {xs.data() + i * dim, static_cast<std::size_t>(dim)}; }
    bool has_col(const std::string& name) const { return cols.count(name) != 0; }
    double col(const std::string& name, std::size_t i) const { return cols.at(name)[i]; }

    // normal of row i (nx, ny[, nz]); zero vector when columns are absent
    std::vector<double> normal(std::size_t i) const;

    void append(const PointCloud& other);
    void validate() const;
};

// tag helpers
bool tag_is_interior(const std::string& tag);
bool tag_is_data(const std::string& tag);
std::optional<std::string> tag_boundary_name(const std::string& tag);
std::optional<std::string> tag_interface_name(const std::string& tag);
// region qualifier of interior:<region> / data:<region>, empty if none
std::string tag_region(const std::string& tag);

// ---------------------------------------------------------------------------
// CSV I/O. Header is exactly x,y[,z],tag[,u,v,w,p,T,nu_t,nx,ny,nz] with the
// optional columns in that relative order. Values are written with 17
// significant digits so load(save(c)) == c including bit-exact floats.
// ---------------------------------------------------------------------------
void save_cloud(const std::string& path, const PointCloud& cloud);
PointCloud load_cloud(const std::string& path);

// ---------------------------------------------------------------------------
// Domain shapes. Every shape knows an inside predicate, a signed distance
// (negative inside), its boundary tags and how to sample them with outward
// unit normals.
// ---------------------------------------------------------------------------
struct ShapeSpec {
    enum class Kind { box, channel_obstacle, tube, two_slab };
    Kind kind = Kind::box;

    // box: [min, max]^dim, dim 2 or 3
    int dim = 2;
    std::vector<double> box_min{0.0, 0.0};
    std::vector<double> box_max{1.0, 1.0};

    // channel_obstacle (2D): [0,L]x[0,H] minus [ox0,ox1]x[oy0,oy1]
    double length = 3.0, height = 1.0;
    double obs_x0 = 1.0, obs_x1 = 1.5, obs_y0 = 0.3, obs_y1 = 0.7;

    // tube (3D, axis x): radius profile R outside a cosine bump of width
    // `bump_width` centered at `bump_center`; throat radius is
    // sqrt(area_ratio) * R (area_ratio 0.36 -> radius ratio 0.6).
    double tube_length = 4.0, tube_radius = 0.5;
    double area_ratio = 0.36;
    double bump_center = 2.0, bump_width = 2.0;

    // two_slab (2D): [0,1]^2 split at x = split into regions slab1 | slab2
    double split = 0.5;

    void validate() const;
    int spatial_dim() const;
    // signed distance, negative inside
    double sdf(std::span<const double> x) const;
    bool inside(std::span<const double> x) const { return sdf(x) < 0.0; }
    std::vector<std::string> boundary_tags() const;
    std::vector<std::string> interface_tags() const;
    // region tag suffix for an interior point ("" for single-region shapes)
    std::string region_of(std::span<const double> x) const;
};

ShapeSpec parse_shape_kind(const std::string& name, ShapeSpec spec = {});

// Interior points by rejection sampling inside the shape (error with the
// observed acceptance rate if the budget of attempts is exhausted), plus
// n_boundary points per boundary tag with outward unit normals, plus
// n_interface points per interface. wall_refine in [0,1) biases that
// fraction of interior points into the near-wall band (closest 10% of the
// bounding extent).
PointCloud sample_domain(const ShapeSpec& shape, std::size_t n_interior, std::size_t n_boundary,
                         std::size_t n_interface, double wall_refine, std::uint64_t seed);

// Uniform random subset without replacement, size lround(fraction * n),
// re-tagged "data". Requires the cloud to carry at least one solution
// column; errors if the rounded size is zero.
PointCloud select_sparse_data(const PointCloud& cloud, double fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Design-of-experiments sampling.
// ---------------------------------------------------------------------------
struct DesignAxis {
    std::string name;
    std::string unit;
    double lo = 0.0, hi = 1.0;
};

struct DesignSpace {
    std::vector<DesignAxis> axes;
    void validate() const;
    std::size_t dim() const { return axes.size(); }
};

DesignSpace load_design_space(const std::string& path);
void save_design_space(const std::string& path, const DesignSpace& space);

// Latin hypercube with one stratum per sample per axis, improved by random
// coordinate swaps accepted only when they do not decrease the minimum
// pairwise distance and strictly improve the Morris-Mitchell phi_2 score
// (distances on axes normalized to [0,1]).
std::vector<std::vector<double>> maximin_lhs(const DesignSpace& space, std::size_t n,
                                             std::uint64_t seed, std::size_t iterations);

void save_doe(const std::string& path, const DesignSpace& space,
              const std::vector<std::vector<double>>& rows);

}  // namespace pinnflow
