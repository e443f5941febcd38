#include "pinnflow/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pinnflow/rng.hpp"
#include "pinnflow/util.hpp"

namespace pinnflow {

namespace {

const char* kOptionalCols[] = {"u", "v", "w", "p", "T", "nu_t", "nx", "ny", "nz"};

constexpr double kPi = 3.14159265358979323846;

bool valid_tag(const std::string& tag) {
    if (tag == "interior" || tag == "data") return true;
    if (starts_with(tag, "interior:") || starts_with(tag, "data:")) return tag.size() > tag.find(':') + 1;
    if (starts_with(tag, "boundary:") || starts_with(tag, "interface:")) return tag.size() > tag.find(':') + 1;
    return false;
}

double parse_double_field(const std::string& field, std::size_t row, const std::string& col) {
    const std::string t = trim(field);
    if (t.empty())
        throw ValidationError("cloud: row " + std::to_string(row) + ": empty value in column '" + col + "'");
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        throw ValidationError("cloud: row " + std::to_string(row) + ": bad number '" + t +
                              "' in column '" + col + "'");
    if (!std::isfinite(v))
        throw ValidationError("cloud: row " + std::to_string(row) + ": non-finite value in column '" +
                              col + "'");
    return v;
}

}  // namespace

bool tag_is_interior(const std::string& tag) {
    return tag == "interior" || starts_with(tag, "interior:");
}

bool tag_is_data(const std::string& tag) {
    return tag == "data" || starts_with(tag, "data:");
}

std::optional<std::string> tag_boundary_name(const std::string& tag) {
    if (starts_with(tag, "boundary:")) return tag.substr(9);
    return std::nullopt;
}

std::optional<std::string> tag_interface_name(const std::string& tag) {
    if (starts_with(tag, "interface:")) return tag.substr(10);
    return std::nullopt;
}

std::string tag_region(const std::string& tag) {
    if (starts_with(tag, "interior:")) return tag.substr(9);
    if (starts_with(tag, "data:")) return tag.substr(5);
    return "";
}

std::vector<double> PointCloud::normal(std::size_t i) const {
    std::vector<double> n(dim, 0.0);
    if (has_col("nx")) n[0] = col("nx", i);
    if (dim >= 2 && has_col("ny")) n[1] = col("ny", i);
    if (dim >= 3 && has_col("nz")) n[2] = col("nz", i);
    return n;
}

void PointCloud::append(const PointCloud& other) {
    if (other.dim != dim) throw ValidationError("cloud: cannot append, dimension mismatch");
    if (cols.size() != other.cols.size())
        throw ValidationError("cloud: cannot append, column sets differ");
    for (const auto& [name, vals] : other.cols) {
        auto it = cols.find(name);
        if (it == cols.end()) throw ValidationError("cloud: cannot append, column sets differ");
        it->second.insert(it->second.end(), vals.begin(), vals.end());
    }
    xs.insert(xs.end(), other.xs.begin(), other.xs.end());
    tags.insert(tags.end(), other.tags.begin(), other.tags.end());
}

void PointCloud::validate() const {
    if (dim != 2 && dim != 3) throw ValidationError("cloud: dim must be 2 or 3");
    if (xs.size() != tags.size() * static_cast<std::size_t>(dim))
        throw ValidationError("cloud: coordinate/tag count mismatch");
    for (const auto& [name, vals] : cols) {
        bool known = false;
        for (const char* c : kOptionalCols) known = known || name == c;
        if (!known) throw ValidationError("cloud: unknown column '" + name + "'");
        if (vals.size() != tags.size())
            throw ValidationError("cloud: column '" + name + "' length mismatch");
    }
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (!valid_tag(tags[i]))
            throw ValidationError("cloud: row " + std::to_string(i + 1) + ": bad tag '" + tags[i] + "'");
        for (int k = 0; k < dim; ++k)
            if (!std::isfinite(xs[i * dim + k]))
                throw ValidationError("cloud: row " + std::to_string(i + 1) + ": non-finite coordinate");
    }
    if (has_col("nx")) {
        for (std::size_t i = 0; i < tags.size(); ++i) {
            if (!tag_boundary_name(tags[i]) && !tag_interface_name(tags[i])) continue;
            std::vector<double> n = normal(i);
            double len = 0.0;
            for (double c : n) len += c * c;
            len = std::sqrt(len);
            if (len != 0.0 && std::abs(len - 1.0) > 1e-6)
                throw ValidationError("cloud: row " + std::to_string(i + 1) +
                                      ": boundary normal is not unit length (|n| = " + fmt_g17(len) + ")");
        }
    }
}

// ===========================================================================
// CSV
// ===========================================================================

void save_cloud(const std::string& path, const PointCloud& cloud) {
    cloud.validate();
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);

    std::vector<std::string> opt;
    for (const char* c : kOptionalCols)
        if (cloud.has_col(c)) opt.push_back(c);

    os << "x,y";
    if (cloud.dim == 3) os << ",z";
    os << ",tag";
    for (const std::string& c : opt) os << ',' << c;
    os << '\n';
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int k = 0; k < cloud.dim; ++k) os << (k ? "," : "") << fmt_g17(cloud.xs[i * cloud.dim + k]);
        os << ',' << cloud.tags[i];
        for (const std::string& c : opt) os << ',' << fmt_g17(cloud.cols.at(c)[i]);
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

PointCloud load_cloud(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);

    std::string line;
    if (!std::getline(is, line)) throw ValidationError("cloud: " + path + ": empty file");
    std::vector<std::string> header = split(trim(line), ',');
    for (std::string& h : header) h = trim(h);

    PointCloud cloud;
    std::size_t pos = 0;
    auto need = [&](const char* name) {
        if (pos >= header.size() || header[pos] != name)
            throw ValidationError("cloud: " + path + ": header must start x,y[,z],tag");
        ++pos;
    };
    need("x");
    need("y");
    if (pos < header.size() && header[pos] == "z") {
        cloud.dim = 3;
        ++pos;
    }
    need("tag");

    // remaining columns must be a subsequence of the canonical order
    std::vector<std::string> opt;
    std::size_t canon = 0;
    for (; pos < header.size(); ++pos) {
        const std::string& name = header[pos];
        bool known = false;
        for (const char* c : kOptionalCols) known = known || name == c;
        if (!known) throw ValidationError("cloud: " + path + ": unknown column '" + name + "'");
        while (canon < std::size(kOptionalCols) && kOptionalCols[canon] != name) ++canon;
        if (canon == std::size(kOptionalCols))
            throw ValidationError("cloud: " + path + ": column '" + name + "' out of schema order");
        ++canon;
        opt.push_back(name);
        cloud.cols[name] = {};
    }

    const std::size_t n_fields = static_cast<std::size_t>(cloud.dim) + 1 + opt.size();
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string> fields = split(t, ',');
        if (fields.size() != n_fields)
            throw ValidationError("cloud: " + path + ": row " + std::to_string(row) + ": expected " +
                                  std::to_string(n_fields) + " fields, got " +
                                  std::to_string(fields.size()));
        std::size_t f = 0;
        const char* coord_names[] = {"x", "y", "z"};
        for (int k = 0; k < cloud.dim; ++k)
            cloud.xs.push_back(parse_double_field(fields[f++], row, coord_names[k]));
        std::string tag = trim(fields[f++]);
        if (!valid_tag(tag))
            throw ValidationError("cloud: " + path + ": row " + std::to_string(row) + ": bad tag '" +
                                  tag + "'");
        cloud.tags.push_back(tag);
        for (const std::string& c : opt)
            cloud.cols[c].push_back(parse_double_field(fields[f++], row, c));
    }
    cloud.validate();
    return cloud;
}

// ===========================================================================
// Shapes
// ===========================================================================

namespace {

double box_sdf(std::span<const double> x, std::span<const double> lo, std::span<const double> hi) {
    double inside = -1e300;
    double out2 = 0.0;
    bool outside = false;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double d = std::max(lo[k] - x[k], x[k] - hi[k]);
        inside = std::max(inside, d);
        if (d > 0.0) {
            outside = true;
            out2 += d * d;
        }
    }
    return outside ? std::sqrt(out2) : inside;
}

}  // namespace

void ShapeSpec::validate() const {
    switch (kind) {
        case Kind::box:
            if (dim != 2 && dim != 3) throw ValidationError("shape: box dim must be 2 or 3");
            if (box_min.size() != static_cast<std::size_t>(dim) ||
                box_max.size() != static_cast<std::size_t>(dim))
                throw ValidationError("shape: box bounds size mismatch");
            for (int k = 0; k < dim; ++k)
                if (!(box_min[k] < box_max[k]))
                    throw ValidationError("shape: box min must be < max on every axis");
            break;
        case Kind::channel_obstacle:
            if (!(length > 0.0) || !(height > 0.0))
                throw ValidationError("shape: channel dimensions must be > 0");
            if (!(obs_x0 < obs_x1) || !(obs_y0 < obs_y1))
                throw ValidationError("shape: obstacle box is degenerate");
            if (obs_x0 < 0.0 || obs_x1 > length || obs_y0 < 0.0 || obs_y1 > height)
                throw ValidationError("shape: obstacle must sit inside the channel");
            break;
        case Kind::tube:
            if (!(tube_length > 0.0) || !(tube_radius > 0.0))
                throw ValidationError("shape: tube dimensions must be > 0");
            if (!(area_ratio > 0.0) || area_ratio > 1.0)
                throw ValidationError("shape: area_ratio must be in (0, 1]");
            if (!(bump_width > 0.0) || bump_center - bump_width / 2 < 0.0 ||
                bump_center + bump_width / 2 > tube_length)
                throw ValidationError("shape: constriction bump must sit inside the tube");
            break;
        case Kind::two_slab:
            if (!(split > 0.0) || !(split < 1.0))
                throw ValidationError("shape: slab split must be in (0, 1)");
            break;
    }
}

int ShapeSpec::spatial_dim() const {
    switch (kind) {
        case Kind::box: return dim;
        case Kind::channel_obstacle: return 2;
        case Kind::tube: return 3;
        case Kind::two_slab: return 2;
    }
    return 2;
}

namespace {

// cosine-bump radius profile of the constricted tube
double tube_r(const ShapeSpec& s, double x) {
    double rt = s.tube_radius * std::sqrt(s.area_ratio);
    double t = (x - s.bump_center) / s.bump_width;
    if (std::abs(t) >= 0.5) return s.tube_radius;
    double bump = 0.5 * (1.0 + std::cos(2.0 * kPi * t));
    return s.tube_radius - (s.tube_radius - rt) * bump;
}

double tube_r_prime(const ShapeSpec& s, double x) {
    double rt = s.tube_radius * std::sqrt(s.area_ratio);
    double t = (x - s.bump_center) / s.bump_width;
    if (std::abs(t) >= 0.5) return 0.0;
    return (s.tube_radius - rt) * kPi * std::sin(2.0 * kPi * t) / s.bump_width;
}

}  // namespace

double ShapeSpec::sdf(std::span<const double> x) const {
    switch (kind) {
        case Kind::box:
            return box_sdf(x, box_min, box_max);
        case Kind::channel_obstacle: {
            double lo[2] = {0.0, 0.0}, hi[2] = {length, height};
            double olo[2] = {obs_x0, obs_y0}, ohi[2] = {obs_x1, obs_y1};
            return std::max(box_sdf(x, lo, hi), -box_sdf(x, olo, ohi));
        }
        case Kind::tube: {
            double rad = std::sqrt(x[1] * x[1] + x[2] * x[2]);
            double side = rad - tube_r(*this, x[0]);
            return std::max({side, -x[0], x[0] - tube_length});
        }
        case Kind::two_slab: {
            double lo[2] = {0.0, 0.0}, hi[2] = {1.0, 1.0};
            return box_sdf(x, lo, hi);
        }
    }
    return 0.0;
}

std::vector<std::string> ShapeSpec::boundary_tags() const {
    switch (kind) {
        case Kind::box: {
            std::vector<std::string> t{"xmin", "xmax", "ymin", "ymax"};
            if (dim == 3) {
                t.push_back("zmin");
                t.push_back("zmax");
            }
            return t;
        }
        case Kind::channel_obstacle: return {"inlet", "outlet", "wall"};
        case Kind::tube: return {"inlet", "outlet", "wall"};
        case Kind::two_slab: return {"left", "right", "side1", "side2"};
    }
    return {};
}

std::vector<std::string> ShapeSpec::interface_tags() const {
    return kind == Kind::two_slab ? std::vector<std::string>{"gap"} : std::vector<std::string>{};
}

std::string ShapeSpec::region_of(std::span<const double> x) const {
    if (kind != Kind::two_slab) return "";
    return x[0] < split ? "slab1" : "slab2";
}

ShapeSpec parse_shape_kind(const std::string& name, ShapeSpec spec) {
    if (name == "box")
        spec.kind = ShapeSpec::Kind::box;
    else if (name == "channel-obstacle")
        spec.kind = ShapeSpec::Kind::channel_obstacle;
    else if (name == "tube")
        spec.kind = ShapeSpec::Kind::tube;
    else if (name == "two-slab")
        spec.kind = ShapeSpec::Kind::two_slab;
    else
        throw ValidationError("shape: unknown kind '" + name +
                              "' (expected box | channel-obstacle | tube | two-slab)");
    return spec;
}

// ===========================================================================
// Sampling
// ===========================================================================

namespace {

void bounding_box(const ShapeSpec& s, std::vector<double>& lo, std::vector<double>& hi) {
    switch (s.kind) {
        case ShapeSpec::Kind::box:
            lo = s.box_min;
            hi = s.box_max;
            break;
        case ShapeSpec::Kind::channel_obstacle:
            lo = {0.0, 0.0};
            hi = {s.length, s.height};
            break;
        case ShapeSpec::Kind::tube:
            lo = {0.0, -s.tube_radius, -s.tube_radius};
            hi = {s.tube_length, s.tube_radius, s.tube_radius};
            break;
        case ShapeSpec::Kind::two_slab:
            lo = {0.0, 0.0};
            hi = {1.0, 1.0};
            break;
    }
}

void push_point(PointCloud& c, std::span<const double> x, const std::string& tag,
                std::span<const double> n) {
    for (int k = 0; k < c.dim; ++k) c.xs.push_back(x[k]);
    c.tags.push_back(tag);
    c.cols["nx"].push_back(n.size() > 0 ? n[0] : 0.0);
    c.cols["ny"].push_back(n.size() > 1 ? n[1] : 0.0);
    if (c.dim == 3) c.cols["nz"].push_back(n.size() > 2 ? n[2] : 0.0);
}

void sample_boundary_tag(const ShapeSpec& s, const std::string& tag, std::size_t n, Rng& rng,
                         PointCloud& c) {
    std::vector<double> x(c.dim), nrm(c.dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        switch (s.kind) {
            case ShapeSpec::Kind::box: {
                int axis = tag[0] == 'x' ? 0 : tag[0] == 'y' ? 1 : 2;
                bool max_side = tag.substr(1) == "max";
                for (int k = 0; k < c.dim; ++k) x[k] = rng.uniform(s.box_min[k], s.box_max[k]);
                x[axis] = max_side ? s.box_max[axis] : s.box_min[axis];
                std::fill(nrm.begin(), nrm.end(), 0.0);
                nrm[axis] = max_side ? 1.0 : -1.0;
                break;
            }
            case ShapeSpec::Kind::channel_obstacle: {
                if (tag == "inlet") {
                    x = {0.0, rng.uniform(0.0, s.height)};
                    nrm = {-1.0, 0.0};
                } else if (tag == "outlet") {
                    x = {s.length, rng.uniform(0.0, s.height)};
                    nrm = {1.0, 0.0};
                } else {
                    // channel walls plus the four obstacle faces, picked by length
                    double seg[6] = {s.length, s.length, s.obs_y1 - s.obs_y0, s.obs_y1 - s.obs_y0,
                                     s.obs_x1 - s.obs_x0, s.obs_x1 - s.obs_x0};
                    double total = 0.0;
                    for (double l : seg) total += l;
                    while (true) {
                        double pick = rng.uniform(0.0, total);
                        int which = 0;
                        while (which < 5 && pick > seg[which]) pick -= seg[which++];
                        switch (which) {
                            case 0: x = {rng.uniform(0.0, s.length), 0.0}; nrm = {0.0, -1.0}; break;
                            case 1: x = {rng.uniform(0.0, s.length), s.height}; nrm = {0.0, 1.0}; break;
                            case 2: x = {s.obs_x0, rng.uniform(s.obs_y0, s.obs_y1)}; nrm = {1.0, 0.0}; break;
                            case 3: x = {s.obs_x1, rng.uniform(s.obs_y0, s.obs_y1)}; nrm = {-1.0, 0.0}; break;
                            case 4: x = {rng.uniform(s.obs_x0, s.obs_x1), s.obs_y0}; nrm = {0.0, 1.0}; break;
                            case 5: x = {rng.uniform(s.obs_x0, s.obs_x1), s.obs_y1}; nrm = {0.0, -1.0}; break;
                        }
                        // redraw channel-wall points buried under a flush obstacle
                        bool buried = (which == 0 && s.obs_y0 == 0.0 && x[0] > s.obs_x0 && x[0] < s.obs_x1) ||
                                      (which == 1 && s.obs_y1 == s.height && x[0] > s.obs_x0 && x[0] < s.obs_x1);
                        if (!buried) break;
                    }
                }
                break;
            }
            case ShapeSpec::Kind::tube: {
                if (tag == "inlet" || tag == "outlet") {
                    bool in = tag == "inlet";
                    double xx = in ? 0.0 : s.tube_length;
                    double rad = tube_r(s, xx) * std::sqrt(rng.uniform());
                    double th = rng.uniform(0.0, 2.0 * kPi);
                    x = {xx, rad * std::cos(th), rad * std::sin(th)};
                    nrm = {in ? -1.0 : 1.0, 0.0, 0.0};
                } else {
                    double xx = rng.uniform(0.0, s.tube_length);
                    double th = rng.uniform(0.0, 2.0 * kPi);
                    double r = tube_r(s, xx), rp = tube_r_prime(s, xx);
                    x = {xx, r * std::cos(th), r * std::sin(th)};
                    double inv = 1.0 / std::sqrt(1.0 + rp * rp);
                    nrm = {-rp * inv, std::cos(th) * inv, std::sin(th) * inv};
                }
                break;
            }
            case ShapeSpec::Kind::two_slab: {
                if (tag == "left") {
                    x = {0.0, rng.uniform()};
                    nrm = {-1.0, 0.0};
                } else if (tag == "right") {
                    x = {1.0, rng.uniform()};
                    nrm = {1.0, 0.0};
                } else {
                    bool first = tag == "side1";
                    double x0 = first ? 0.0 : s.split, x1 = first ? s.split : 1.0;
                    bool top = rng.uniform() < 0.5;
                    x = {rng.uniform(x0, x1), top ? 1.0 : 0.0};
                    nrm = {0.0, top ? 1.0 : -1.0};
                }
                break;
            }
        }
        push_point(c, x, "boundary:" + tag, nrm);
    }
}

}  // namespace

PointCloud sample_domain(const ShapeSpec& shape, std::size_t n_interior, std::size_t n_boundary,
                         std::size_t n_interface, double wall_refine, std::uint64_t seed) {
    shape.validate();
    if (wall_refine < 0.0 || wall_refine >= 1.0)
        throw ValidationError("sampling: wall_refine must be in [0, 1)");

    PointCloud cloud;
    cloud.dim = shape.spatial_dim();
    cloud.cols["nx"] = {};
    cloud.cols["ny"] = {};
    if (cloud.dim == 3) cloud.cols["nz"] = {};

    Rng rng(mix_seed(seed, 0x53414d50ull));

    std::vector<double> lo, hi;
    bounding_box(shape, lo, hi);
    double min_extent = 1e300;
    for (int k = 0; k < cloud.dim; ++k) min_extent = std::min(min_extent, hi[k] - lo[k]);
    const double band = 0.1 * min_extent;

    // interior: rejection sampling against the bounding box
    std::size_t n_near = static_cast<std::size_t>(wall_refine * static_cast<double>(n_interior));
    std::vector<double> x(cloud.dim);
    std::size_t accepted = 0, attempts = 0;
    const std::size_t budget = 1000 + 400 * n_interior;
    while (accepted < n_interior) {
        if (attempts >= budget) {
            double rate = attempts ? 100.0 * static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0;
            throw ValidationError("sampling: accepted " + std::to_string(accepted) + " of " +
                                  std::to_string(n_interior) + " interior points after " +
                                  std::to_string(attempts) + " attempts (acceptance rate " +
                                  fmt_g17(rate) + "%)");
        }
        ++attempts;
        for (int k = 0; k < cloud.dim; ++k) x[k] = rng.uniform(lo[k], hi[k]);
        double d = shape.sdf(x);
        if (d >= 0.0) continue;
        if (accepted < n_near && -d > band) continue;  // near-wall slots want the wall band
        std::string region = shape.region_of(x);
        push_point(cloud, x, region.empty() ? "interior" : "interior:" + region, {});
        ++accepted;
    }

    for (const std::string& tag : shape.boundary_tags())
        sample_boundary_tag(shape, tag, n_boundary, rng, cloud);

    for (const std::string& tag : shape.interface_tags()) {
        for (std::size_t i = 0; i < n_interface; ++i) {
            // two_slab gap: vertical line at the split, side-1 normal +x
            double pt[2] = {shape.split, rng.uniform()};
            double nn[2] = {1.0, 0.0};
            push_point(cloud, pt, "interface:" + tag, nn);
        }
    }

    cloud.validate();
    return cloud;
}

PointCloud select_sparse_data(const PointCloud& cloud, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ValidationError("sparse-select: fraction must be in (0, 1]");
    bool any_solution = false;
    for (const char* c : {"u", "v", "w", "p", "T"}) any_solution = any_solution || cloud.has_col(c);
    if (!any_solution)
        throw ValidationError("sparse-select: cloud has no solution columns");

    const std::size_t n = cloud.size();
    const std::size_t m = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    if (m == 0)
        throw ValidationError("sparse-select: fraction " + fmt_g17(fraction) + " of " +
                              std::to_string(n) + " points rounds to zero");

    // partial Fisher-Yates, then ascending order for a stable output
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(mix_seed(seed, 0x53504152ull));
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());

    PointCloud out;
    out.dim = cloud.dim;
    for (const auto& [name, vals] : cloud.cols) out.cols[name] = {};
    for (std::size_t i : idx) {
        for (int k = 0; k < cloud.dim; ++k) out.xs.push_back(cloud.xs[i * cloud.dim + k]);
        std::string region = tag_region(cloud.tags[i]);
        out.tags.push_back(region.empty() ? "data" : "data:" + region);
        for (auto& [name, vals] : out.cols) vals.push_back(cloud.cols.at(name)[i]);
    }
    out.validate();
    return out;
}

// ===========================================================================
// Design of experiments
// ===========================================================================

void DesignSpace::validate() const {
    if (axes.empty()) throw ValidationError("design space: no axes");
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (axes[i].name.empty()) throw ValidationError("design space: axis without a name");
        if (!(axes[i].lo < axes[i].hi))
            throw ValidationError("design space: axis '" + axes[i].name + "' needs min < max");
        for (std::size_t j = 0; j < i; ++j)
            if (axes[j].name == axes[i].name)
                throw ValidationError("design space: duplicate axis '" + axes[i].name + "'");
    }
}

DesignSpace load_design_space(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line))
        throw ValidationError("design space: " + path + ": empty file");
    std::vector<std::string> header = split(trim(line), ',');
    for (std::string& h : header) h = trim(h);
    if (header != std::vector<std::string>{"name", "unit", "min", "max"})
        throw ValidationError("design space: " + path + ": header must be name,unit,min,max");
    DesignSpace space;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string> f = split(t, ',');
        if (f.size() != 4)
            throw ValidationError("design space: " + path + ": row " + std::to_string(row) +
                                  ": expected 4 fields");
        DesignAxis ax;
        ax.name = trim(f[0]);
        ax.unit = trim(f[1]);
        ax.lo = parse_double_field(f[2], row, "min");
        ax.hi = parse_double_field(f[3], row, "max");
        space.axes.push_back(ax);
    }
    space.validate();
    return space;
}

void save_design_space(const std::string& path, const DesignSpace& space) {
    space.validate();
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "name,unit,min,max\n";
    for (const DesignAxis& ax : space.axes)
        os << ax.name << ',' << ax.unit << ',' << fmt_g17(ax.lo) << ',' << fmt_g17(ax.hi) << '\n';
}

namespace {

// min pairwise distance and Morris-Mitchell score (sum of d^-2) on axes
// normalized to [0,1]
void lhs_scores(const std::vector<std::vector<double>>& pts, const DesignSpace& space,
                double& min_d, double& phi2) {
    min_d = 1e300;
    phi2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < space.dim(); ++k) {
                double scale = space.axes[k].hi - space.axes[k].lo;
                double d = (pts[i][k] - pts[j][k]) / scale;
                d2 += d * d;
            }
            double d = std::sqrt(d2);
            min_d = std::min(min_d, d);
            phi2 += d2 > 0.0 ? 1.0 / d2 : 1e300;
        }
}

}  // namespace

std::vector<std::vector<double>> maximin_lhs(const DesignSpace& space, std::size_t n,
                                             std::uint64_t seed, std::size_t iterations) {
    space.validate();
    if (n == 0) throw ValidationError("lhs: sample count must be > 0");

    Rng rng(mix_seed(seed, 0x4c485321ull));
    const std::size_t d = space.dim();

    // stratified start: one sample per stratum per axis, jittered
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
        for (std::size_t i = 0; i < n; ++i) {
            double u = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
            pts[i][k] = space.axes[k].lo + u * (space.axes[k].hi - space.axes[k].lo);
        }
    }
    if (n == 1) return pts;

    double min_d, phi2;
    lhs_scores(pts, space, min_d, phi2);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::size_t k = rng.below(d);
        std::size_t i = rng.below(n);
        std::size_t j = rng.below(n - 1);
        if (j >= i) ++j;
        std::swap(pts[i][k], pts[j][k]);  // swap one coordinate: marginals preserved
        double new_min, new_phi;
        lhs_scores(pts, space, new_min, new_phi);
        if (new_min >= min_d && new_phi < phi2) {
            min_d = new_min;
            phi2 = new_phi;
        } else {
            std::swap(pts[i][k], pts[j][k]);
        }
    }
    return pts;
}

void save_doe(const std::string& path, const DesignSpace& space,
              const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    for (std::size_t k = 0; k < space.dim(); ++k) os << (k ? "," : "") << space.axes[k].name;
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << fmt_g17(r[k]);
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace pinnflow
