#include "pinnflow/runconfig.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pinnflow/rng.hpp"
#include "pinnflow/util.hpp"

namespace pinnflow {

namespace {

bool parse_num(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty() || s[0] == '-') return false;
    char* end = nullptr;
    out = std::strtoull(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

// ordered key=value store; getters mark keys consumed so leftovers can be
// reported as unknown
class Reader {
public:
    Reader(const std::string& text, const std::string& origin, std::vector<std::string>& viol)
        : viol_(viol) {
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                viol_.push_back(origin + ":" + std::to_string(lineno) + ": expected key = value");
                continue;
            }
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                viol_.push_back(origin + ":" + std::to_string(lineno) + ": empty key");
                continue;
            }
            for (const Entry& e : entries_)
                if (e.key == key)
                    viol_.push_back(key + ": duplicate key (line " + std::to_string(lineno) + ")");
            entries_.push_back({key, value, false});
        }
    }

    bool has(const std::string& key) const {
        for (const Entry& e : entries_)
            if (e.key == key) return true;
        return false;
    }

    std::string str(const std::string& key, const std::string& def) {
        Entry* e = find(key);
        return e ? e->value : def;
    }

    double num(const std::string& key, double def) {
        Entry* e = find(key);
        if (!e) return def;
        double v;
        if (!parse_num(e->value, v)) {
            viol_.push_back(key + ": not a number: '" + e->value + "'");
            return def;
        }
        return v;
    }

    std::uint64_t u64(const std::string& key, std::uint64_t def) {
        Entry* e = find(key);
        if (!e) return def;
        std::uint64_t v;
        if (!parse_u64(e->value, v)) {
            viol_.push_back(key + ": not an unsigned integer: '" + e->value + "'");
            return def;
        }
        return v;
    }

    int integer(const std::string& key, int def) {
        Entry* e = find(key);
        if (!e) return def;
        double v;
        if (!parse_num(e->value, v) || v != std::floor(v) || std::fabs(v) > 1e9) {
            viol_.push_back(key + ": not an integer: '" + e->value + "'");
            return def;
        }
        return static_cast<int>(v);
    }

    std::vector<double> num_list(const std::string& key, std::vector<double> def) {
        Entry* e = find(key);
        if (!e) return def;
        std::vector<double> out;
        for (const std::string& part : split(e->value, ',')) {
            double v;
            if (!parse_num(trim(part), v)) {
                viol_.push_back(key + ": not a number list: '" + e->value + "'");
                return def;
            }
            out.push_back(v);
        }
        return out;
    }

    std::vector<std::string> str_list(const std::string& key, std::vector<std::string> def) {
        Entry* e = find(key);
        if (!e) return def;
        std::vector<std::string> out;
        for (const std::string& part : split(e->value, ',')) {
            std::string t = trim(part);
            if (t.empty()) {
                viol_.push_back(key + ": empty list element");
                continue;
            }
            out.push_back(t);
        }
        return out;
    }

    // unconsumed keys sharing a prefix, in file order
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (const Entry& e : entries_)
            if (!e.used && starts_with(e.key, prefix)) out.push_back(e.key);
        return out;
    }

    void flag_unknown() {
        for (const Entry& e : entries_)
            if (!e.used) viol_.push_back(e.key + ": unknown key");
    }

private:
    struct Entry {
        std::string key, value;
        bool used;
    };

    Entry* find(const std::string& key) {
        for (Entry& e : entries_)
            if (e.key == key) {
                e.used = true;
                return &e;
            }
        return nullptr;
    }

    std::vector<Entry> entries_;
    std::vector<std::string>& viol_;
};

const std::set<std::string> kOutputNames = {"u", "v", "w", "p", "T"};
const std::set<std::string> kPhysicsKindSet = {"poisson", "ns", "rans", "energy", "conjugate"};

void check_file(const std::string& key, const std::string& path, std::vector<std::string>& viol) {
    if (path.empty()) return;
    if (!std::filesystem::exists(path)) viol.push_back(key + ": file not found: " + path);
}

// "dirichlet:<v>" | "dirichlet:parabola:<peak>" | "dirichlet:from_data" | "neumann:<v>"
bool parse_condition(const std::string& text, BoundarySpec& spec, std::string& err) {
    std::vector<std::string> parts = split(text, ':');
    for (std::string& p : parts) p = trim(p);
    if (parts.empty()) {
        err = "empty condition";
        return false;
    }
    if (parts[0] == "dirichlet") {
        spec.kind = BoundarySpec::Kind::dirichlet;
        if (parts.size() == 2 && parts[1] == "from_data") {
            spec.profile = BoundarySpec::Profile::from_data;
            return true;
        }
        if (parts.size() == 2) {
            spec.profile = BoundarySpec::Profile::constant;
            if (!parse_num(parts[1], spec.value)) {
                err = "bad value '" + parts[1] + "'";
                return false;
            }
            return true;
        }
        if (parts.size() == 3 && parts[1] == "parabola") {
            spec.profile = BoundarySpec::Profile::parabola;
            if (!parse_num(parts[2], spec.value)) {
                err = "bad peak '" + parts[2] + "'";
                return false;
            }
            return true;
        }
        err = "expected dirichlet:<value> | dirichlet:parabola:<peak> | dirichlet:from_data";
        return false;
    }
    if (parts[0] == "neumann") {
        spec.kind = BoundarySpec::Kind::neumann;
        spec.profile = BoundarySpec::Profile::constant;
        if (parts.size() != 2 || !parse_num(parts[1], spec.value)) {
            err = "expected neumann:<value>";
            return false;
        }
        return true;
    }
    err = "unknown condition kind '" + parts[0] + "'";
    return false;
}

std::string condition_text(const BoundarySpec& spec) {
    if (spec.kind == BoundarySpec::Kind::neumann) return "neumann:" + fmt_g17(spec.value);
    switch (spec.profile) {
        case BoundarySpec::Profile::from_data: return "dirichlet:from_data";
        case BoundarySpec::Profile::parabola: return "dirichlet:parabola:" + fmt_g17(spec.value);
        default: return "dirichlet:" + fmt_g17(spec.value);
    }
}

std::string join_num_list(std::span<const double> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt_g17(v[i]);
    }
    return out;
}

std::string join_int_list(std::span<const int> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_str_list(std::span<const std::string> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v[i];
    }
    return out;
}

// third dotted segment of "prefix<mid>.rest"
bool split_scoped(const std::string& key, const std::string& prefix, std::string& mid,
                  std::string& rest) {
    if (!starts_with(key, prefix)) return false;
    std::string tail = key.substr(prefix.size());
    auto dot = tail.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= tail.size()) return false;
    mid = tail.substr(0, dot);
    rest = tail.substr(dot + 1);
    return true;
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_run_config_text(buf.str(), path);
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    std::vector<std::string> viol;
    Reader r(text, origin, viol);
    RunConfig cfg;

    cfg.name = r.str("name", "");
    if (cfg.name.empty()) viol.push_back("name: required");
    cfg.out_dir = r.str("out_dir", cfg.name.empty() ? "runs/run" : "runs/" + cfg.name);
    cfg.cloud = r.str("cloud", "");
    cfg.data_cloud = r.str("data_cloud", "");
    check_file("cloud", cfg.cloud, viol);
    check_file("data_cloud", cfg.data_cloud, viol);
    cfg.dim = r.integer("dim", 2);
    if (cfg.dim != 2 && cfg.dim != 3) viol.push_back("dim: must be 2 or 3");
    cfg.seed = r.u64("seed", 0);

    // ---- subdomains, in order of first appearance
    std::vector<std::string> regions;
    for (const std::string& key : r.keys_with_prefix("subdomain.")) {
        std::string region, rest;
        if (!split_scoped(key, "subdomain.", region, rest)) {
            viol.push_back(key + ": expected subdomain.<region>.<field>");
            continue;
        }
        if (std::find(regions.begin(), regions.end(), region) == regions.end())
            regions.push_back(region);
    }
    if (regions.empty()) viol.push_back("subdomain: at least one subdomain.<region>.* block required");
    for (const std::string& region : regions) {
        const std::string base = "subdomain." + region + ".";
        SubdomainSpec sd;
        sd.region = region;
        sd.physics = r.str(base + "physics", sd.physics);
        if (!kPhysicsKindSet.count(sd.physics))
            viol.push_back(base + "physics: unknown kind '" + sd.physics +
                           "' (poisson | ns | rans | energy | conjugate)");
        std::vector<double> hidden = r.num_list(base + "hidden", {32, 32});
        sd.hidden.clear();
        for (double h : hidden) {
            if (h < 1 || h != std::floor(h)) {
                viol.push_back(base + "hidden: widths must be positive integers");
                break;
            }
            sd.hidden.push_back(static_cast<int>(h));
        }
        if (sd.hidden.empty()) viol.push_back(base + "hidden: at least one hidden layer");
        sd.outputs = r.str_list(base + "outputs", sd.outputs);
        std::set<std::string> seen;
        for (const std::string& o : sd.outputs) {
            if (!kOutputNames.count(o))
                viol.push_back(base + "outputs: unknown field '" + o + "' (u, v, w, p, T)");
            if (!seen.insert(o).second) viol.push_back(base + "outputs: duplicate field '" + o + "'");
        }
        if (sd.physics == "ns" || sd.physics == "rans") {
            const char* need2[] = {"u", "v", "p"};
            for (const char* n : need2)
                if (!seen.count(n)) viol.push_back(base + "outputs: " + sd.physics + " needs '" + n + "'");
            if (cfg.dim == 3 && !seen.count("w"))
                viol.push_back(base + "outputs: " + sd.physics + " needs 'w' in 3D");
        } else if (!seen.count("T")) {
            viol.push_back(base + "outputs: " + sd.physics + " needs 'T'");
        }
        sd.embedding = r.integer(base + "embedding", 0);
        if (sd.embedding < 0) viol.push_back(base + "embedding: must be >= 0");
        sd.embedding_sigma = r.num(base + "embedding_sigma", 1.0);
        if (!(sd.embedding_sigma > 0.0)) viol.push_back(base + "embedding_sigma: must be positive");
        sd.extra_inputs = r.integer(base + "extra_inputs", 0);
        if (sd.extra_inputs < 0) viol.push_back(base + "extra_inputs: must be >= 0");
        sd.props.rho = r.num(base + "rho", 1.0);
        sd.props.nu = r.num(base + "nu", 1.0);
        sd.props.k = r.num(base + "k", 1.0);
        sd.props.s = r.num(base + "s", 1.0);
        sd.props.q_src = r.num(base + "q_src", 0.0);
        if (!(sd.props.rho > 0.0)) viol.push_back(base + "rho: must be positive");
        if (!(sd.props.nu > 0.0)) viol.push_back(base + "nu: must be positive");
        if (!(sd.props.k > 0.0)) viol.push_back(base + "k: must be positive");
        if (!(sd.props.s > 0.0)) viol.push_back(base + "s: must be positive");
        if (sd.props.q_src < 0.0) viol.push_back(base + "q_src: must be >= 0");
        sd.in_mean = r.num_list(base + "in_mean", {});
        sd.in_std = r.num_list(base + "in_std", {});
        sd.out_mean = r.num_list(base + "out_mean", {});
        sd.out_std = r.num_list(base + "out_std", {});
        const std::size_t n_in = static_cast<std::size_t>(cfg.dim + sd.extra_inputs);
        const std::size_t n_out = sd.outputs.size();
        if (!sd.in_mean.empty() && sd.in_mean.size() != n_in)
            viol.push_back(base + "in_mean: expected " + std::to_string(n_in) + " values");
        if (!sd.in_std.empty() && sd.in_std.size() != n_in)
            viol.push_back(base + "in_std: expected " + std::to_string(n_in) + " values");
        if (!sd.out_mean.empty() && sd.out_mean.size() != n_out)
            viol.push_back(base + "out_mean: expected " + std::to_string(n_out) + " values");
        if (!sd.out_std.empty() && sd.out_std.size() != n_out)
            viol.push_back(base + "out_std: expected " + std::to_string(n_out) + " values");
        for (double v : sd.in_std)
            if (!(v > 0.0)) viol.push_back(base + "in_std: entries must be positive");
        for (double v : sd.out_std)
            if (!(v > 0.0)) viol.push_back(base + "out_std: entries must be positive");
        cfg.subdomains.push_back(std::move(sd));
    }

    auto region_exists = [&](const std::string& name) {
        return std::find(regions.begin(), regions.end(), name) != regions.end();
    };

    // ---- interfaces
    for (const std::string& key : r.keys_with_prefix("interface.")) {
        InterfaceSpec itf;
        itf.name = key.substr(std::string("interface.").size());
        std::vector<std::string> sides = r.str_list(key, {});
        if (itf.name.empty() || itf.name.find('.') != std::string::npos) {
            viol.push_back(key + ": expected interface.<name> = <region1>,<region2>");
            continue;
        }
        if (sides.size() != 2) {
            viol.push_back(key + ": expected two regions");
            continue;
        }
        itf.region1 = sides[0];
        itf.region2 = sides[1];
        for (const std::string& s : sides)
            if (!region_exists(s)) viol.push_back(key + ": unknown region '" + s + "'");
        if (itf.region1 == itf.region2) viol.push_back(key + ": regions must differ");
        for (const InterfaceSpec& prev : cfg.interfaces)
            if (prev.name == itf.name) viol.push_back(key + ": duplicate interface name");
        cfg.interfaces.push_back(std::move(itf));
    }

    // ---- boundary conditions
    for (const std::string& key : r.keys_with_prefix("boundary.")) {
        std::string tag, rest;
        if (!split_scoped(key, "boundary.", tag, rest)) {
            viol.push_back(key + ": expected boundary.<tag>.<output> = <condition>");
            continue;
        }
        if (rest == "region") {
            std::string owner = r.str(key, "");
            if (!region_exists(owner))
                viol.push_back(key + ": unknown region '" + owner + "'");
            else
                cfg.boundary_region[tag] = owner;
            continue;
        }
        if (!kOutputNames.count(rest)) {
            viol.push_back(key + ": unknown output '" + rest + "'");
            continue;
        }
        BoundarySpec spec;
        spec.tag = tag;
        spec.output = rest;
        std::string err;
        if (!parse_condition(r.str(key, ""), spec, err)) {
            viol.push_back(key + ": " + err);
            continue;
        }
        cfg.boundaries.push_back(std::move(spec));
    }

    // ---- training
    cfg.steps = r.u64("train.steps", cfg.steps);
    if (cfg.steps == 0) viol.push_back("train.steps: must be positive");
    cfg.warm_fraction = r.num("train.warm_fraction", cfg.warm_fraction);
    if (!(cfg.warm_fraction >= 0.0 && cfg.warm_fraction < 1.0))
        viol.push_back("train.warm_fraction: must be in [0, 1)");
    cfg.lr0 = r.num("train.lr0", cfg.lr0);
    if (!(cfg.lr0 > 0.0)) viol.push_back("train.lr0: must be positive");
    cfg.lr_decay = r.num("train.lr_decay", cfg.lr_decay);
    if (!(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0))
        viol.push_back("train.lr_decay: must be in (0, 1]");
    cfg.lr_decay_every = r.u64("train.lr_decay_every", cfg.lr_decay_every);
    if (cfg.lr_decay_every == 0) viol.push_back("train.lr_decay_every: must be positive");
    cfg.clip_norm = r.num("train.clip_norm", cfg.clip_norm);
    if (!(cfg.clip_norm > 0.0)) viol.push_back("train.clip_norm: must be positive");
    cfg.batch_fraction = r.num("train.batch_fraction", cfg.batch_fraction);
    if (!(cfg.batch_fraction > 0.0 && cfg.batch_fraction <= 1.0))
        viol.push_back("train.batch_fraction: must be in (0, 1]");
    else if (cfg.batch_fraction > 0.05)
        cfg.warnings.push_back("train.batch_fraction: " + fmt_g17(cfg.batch_fraction) +
                               " is above the 1-5% guidance; expect slow steps");
    cfg.resample_every = r.u64("train.resample_every", cfg.resample_every);
    if (cfg.resample_every == 0) viol.push_back("train.resample_every: must be positive");
    cfg.anneal_every = r.u64("train.anneal_every", cfg.anneal_every);
    if (cfg.anneal_every == 0) viol.push_back("train.anneal_every: must be positive");
    cfg.anneal_alpha = r.num("train.anneal_alpha", cfg.anneal_alpha);
    if (!(cfg.anneal_alpha > 0.0 && cfg.anneal_alpha < 1.0))
        viol.push_back("train.anneal_alpha: must be in (0, 1)");
    cfg.anneal_threshold = r.num("train.anneal_threshold", cfg.anneal_threshold);
    if (!(cfg.anneal_threshold >= 0.0)) viol.push_back("train.anneal_threshold: must be >= 0");
    for (const std::string& key : r.keys_with_prefix("train.threshold.")) {
        std::string comp = key.substr(std::string("train.threshold.").size());
        double v = r.num(key, cfg.anneal_threshold);
        if (!(v >= 0.0))
            viol.push_back(key + ": must be >= 0");
        else
            cfg.anneal_thresholds[comp] = v;
    }
    cfg.divergence_threshold = r.num("train.divergence_threshold", cfg.divergence_threshold);
    if (!(cfg.divergence_threshold > 0.0))
        viol.push_back("train.divergence_threshold: must be positive");

    cfg.sparse_fraction = r.num("sparse.fraction", cfg.sparse_fraction);
    if (!(cfg.sparse_fraction > 0.0 && cfg.sparse_fraction <= 1.0))
        viol.push_back("sparse.fraction: must be in (0, 1]");

    cfg.eval.thresholds = r.num_list("eval.thresholds", cfg.eval.thresholds);
    for (std::size_t i = 1; i < cfg.eval.thresholds.size(); ++i)
        if (cfg.eval.thresholds[i] < cfg.eval.thresholds[i - 1]) {
            viol.push_back("eval.thresholds: must be ascending");
            break;
        }

    cfg.probe.region = r.str("probe.region", "");
    cfg.probe.start = r.num_list("probe.start", {});
    cfg.probe.end = r.num_list("probe.end", {});
    cfg.probe.n = r.u64("probe.n", cfg.probe.n);
    if (cfg.probe.n < 2) viol.push_back("probe.n: need at least 2 samples");
    for (const char* key : {"probe.start", "probe.end"}) {
        const std::vector<double>& v = key[6] == 's' ? cfg.probe.start : cfg.probe.end;
        if (!v.empty() && v.size() != static_cast<std::size_t>(cfg.dim))
            viol.push_back(std::string(key) + ": expected " + std::to_string(cfg.dim) + " coordinates");
    }
    if (!cfg.probe.region.empty() && !region_exists(cfg.probe.region))
        viol.push_back("probe.region: unknown region '" + cfg.probe.region + "'");

    // ---- sampling
    cfg.sample.mode = r.str("sample.mode", cfg.sample.mode);
    if (cfg.sample.mode != "domain" && cfg.sample.mode != "doe")
        viol.push_back("sample.mode: expected domain or doe");
    cfg.sample.n_interior = r.u64("sample.n_interior", cfg.sample.n_interior);
    cfg.sample.n_boundary = r.u64("sample.n_boundary", cfg.sample.n_boundary);
    cfg.sample.n_interface = r.u64("sample.n_interface", cfg.sample.n_interface);
    cfg.sample.wall_refine = r.num("sample.wall_refine", cfg.sample.wall_refine);
    if (!(cfg.sample.wall_refine >= 0.0 && cfg.sample.wall_refine < 1.0))
        viol.push_back("sample.wall_refine: must be in [0, 1)");
    {
        ShapeSpec& sh = cfg.sample.shape;
        std::string kind = r.str("sample.shape", "box");
        try {
            sh = parse_shape_kind(kind, sh);
        } catch (const ValidationError& e) {
            viol.push_back(std::string("sample.shape: ") + e.what());
        }
        sh.dim = cfg.dim;
        sh.box_min = r.num_list("sample.box_min", std::vector<double>(cfg.dim, 0.0));
        sh.box_max = r.num_list("sample.box_max", std::vector<double>(cfg.dim, 1.0));
        sh.length = r.num("sample.length", sh.length);
        sh.height = r.num("sample.height", sh.height);
        sh.obs_x0 = r.num("sample.obs_x0", sh.obs_x0);
        sh.obs_x1 = r.num("sample.obs_x1", sh.obs_x1);
        sh.obs_y0 = r.num("sample.obs_y0", sh.obs_y0);
        sh.obs_y1 = r.num("sample.obs_y1", sh.obs_y1);
        sh.split = r.num("sample.split", sh.split);
        sh.tube_length = r.num("sample.tube_length", sh.tube_length);
        sh.tube_radius = r.num("sample.tube_radius", sh.tube_radius);
        sh.area_ratio = r.num("sample.area_ratio", sh.area_ratio);
        sh.bump_center = r.num("sample.bump_center", sh.bump_center);
        sh.bump_width = r.num("sample.bump_width", sh.bump_width);
        if (cfg.sample.mode == "domain") {
            try {
                sh.validate();
            } catch (const ValidationError& e) {
                viol.push_back(std::string("sample: ") + e.what());
            }
        }
    }
    cfg.sample.design_space = r.str("sample.design_space", "");
    check_file("sample.design_space", cfg.sample.design_space, viol);
    cfg.sample.n = r.u64("sample.n", cfg.sample.n);
    cfg.sample.iters = r.u64("sample.iters", cfg.sample.iters);
    if (cfg.sample.mode == "doe") {
        if (cfg.sample.design_space.empty())
            viol.push_back("sample.design_space: required for doe mode");
        if (cfg.sample.n < 2) viol.push_back("sample.n: need at least 2 design points");
    }

    // ---- optimization
    cfg.pso.design_space = r.str("pso.design_space", "");
    check_file("pso.design_space", cfg.pso.design_space, viol);
    cfg.pso.objective = r.str("pso.objective", "");
    if (!cfg.pso.objective.empty()) {
        std::vector<std::string> parts = split(cfg.pso.objective, ':');
        if (parts.size() != 3 || parts[0] != "axis" || (parts[2] != "min" && parts[2] != "max"))
            viol.push_back("pso.objective: expected axis:<name>:min|max");
    }
    for (const std::string& key : r.keys_with_prefix("pso.constraint.")) {
        std::string name = key.substr(std::string("pso.constraint.").size());
        cfg.pso.constraints.emplace_back(name, r.str(key, ""));
    }
    cfg.pso.config.n_particles = r.u64("pso.n_particles", cfg.pso.config.n_particles);
    cfg.pso.config.w = r.num("pso.w", cfg.pso.config.w);
    cfg.pso.config.c1 = r.num("pso.c1", cfg.pso.config.c1);
    cfg.pso.config.c2 = r.num("pso.c2", cfg.pso.config.c2);
    cfg.pso.config.lambda_penalty = r.num("pso.lambda", cfg.pso.config.lambda_penalty);
    cfg.pso.config.beta = r.num("pso.beta", cfg.pso.config.beta);
    cfg.pso.config.max_iters = r.u64("pso.iters", cfg.pso.config.max_iters);
    try {
        cfg.pso.config.validate();
    } catch (const ValidationError& e) {
        viol.push_back(std::string("pso: ") + e.what());
    }
    cfg.pso.model = r.str("pso.model", "");
    cfg.pso.eval_cloud = r.str("pso.eval_cloud", "");
    check_file("pso.model", cfg.pso.model, viol);
    check_file("pso.eval_cloud", cfg.pso.eval_cloud, viol);

    r.flag_unknown();
    if (!viol.empty()) {
        std::string msg = "invalid config (" + std::to_string(viol.size()) + " problem" +
                          (viol.size() == 1 ? "" : "s") + "):";
        for (const std::string& v : viol) msg += "\n  " + v;
        throw ValidationError(msg);
    }
    return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "name = " << cfg.name << '\n';
    out << "out_dir = " << cfg.out_dir << '\n';
    if (!cfg.cloud.empty()) out << "cloud = " << cfg.cloud << '\n';
    if (!cfg.data_cloud.empty()) out << "data_cloud = " << cfg.data_cloud << '\n';
    out << "dim = " << cfg.dim << '\n';
    out << "seed = " << cfg.seed << '\n';

    for (const SubdomainSpec& sd : cfg.subdomains) {
        const std::string base = "subdomain." + sd.region + ".";
        out << base << "physics = " << sd.physics << '\n';
        out << base << "hidden = " << join_int_list(sd.hidden) << '\n';
        out << base << "outputs = " << join_str_list(sd.outputs) << '\n';
        out << base << "embedding = " << sd.embedding << '\n';
        out << base << "embedding_sigma = " << fmt_g17(sd.embedding_sigma) << '\n';
        out << base << "extra_inputs = " << sd.extra_inputs << '\n';
        out << base << "rho = " << fmt_g17(sd.props.rho) << '\n';
        out << base << "nu = " << fmt_g17(sd.props.nu) << '\n';
        out << base << "k = " << fmt_g17(sd.props.k) << '\n';
        out << base << "s = " << fmt_g17(sd.props.s) << '\n';
        out << base << "q_src = " << fmt_g17(sd.props.q_src) << '\n';
        if (!sd.in_mean.empty()) out << base << "in_mean = " << join_num_list(sd.in_mean) << '\n';
        if (!sd.in_std.empty()) out << base << "in_std = " << join_num_list(sd.in_std) << '\n';
        if (!sd.out_mean.empty()) out << base << "out_mean = " << join_num_list(sd.out_mean) << '\n';
        if (!sd.out_std.empty()) out << base << "out_std = " << join_num_list(sd.out_std) << '\n';
    }
    for (const InterfaceSpec& itf : cfg.interfaces)
        out << "interface." << itf.name << " = " << itf.region1 << ',' << itf.region2 << '\n';
    for (const auto& [tag, region] : cfg.boundary_region)
        out << "boundary." << tag << ".region = " << region << '\n';
    for (const BoundarySpec& spec : cfg.boundaries)
        out << "boundary." << spec.tag << '.' << spec.output << " = " << condition_text(spec)
            << '\n';

    out << "train.steps = " << cfg.steps << '\n';
    out << "train.warm_fraction = " << fmt_g17(cfg.warm_fraction) << '\n';
    out << "train.lr0 = " << fmt_g17(cfg.lr0) << '\n';
    out << "train.lr_decay = " << fmt_g17(cfg.lr_decay) << '\n';
    out << "train.lr_decay_every = " << cfg.lr_decay_every << '\n';
    out << "train.clip_norm = " << fmt_g17(cfg.clip_norm) << '\n';
    out << "train.batch_fraction = " << fmt_g17(cfg.batch_fraction) << '\n';
    out << "train.resample_every = " << cfg.resample_every << '\n';
    out << "train.anneal_every = " << cfg.anneal_every << '\n';
    out << "train.anneal_alpha = " << fmt_g17(cfg.anneal_alpha) << '\n';
    out << "train.anneal_threshold = " << fmt_g17(cfg.anneal_threshold) << '\n';
    for (const auto& [comp, v] : cfg.anneal_thresholds)
        out << "train.threshold." << comp << " = " << fmt_g17(v) << '\n';
    out << "train.divergence_threshold = " << fmt_g17(cfg.divergence_threshold) << '\n';
    out << "sparse.fraction = " << fmt_g17(cfg.sparse_fraction) << '\n';
    out << "eval.thresholds = " << join_num_list(cfg.eval.thresholds) << '\n';

    if (!cfg.probe.region.empty()) out << "probe.region = " << cfg.probe.region << '\n';
    if (!cfg.probe.start.empty()) out << "probe.start = " << join_num_list(cfg.probe.start) << '\n';
    if (!cfg.probe.end.empty()) out << "probe.end = " << join_num_list(cfg.probe.end) << '\n';
    out << "probe.n = " << cfg.probe.n << '\n';

    const ShapeSpec& sh = cfg.sample.shape;
    out << "sample.mode = " << cfg.sample.mode << '\n';
    switch (sh.kind) {
        case ShapeSpec::Kind::box: out << "sample.shape = box\n"; break;
        case ShapeSpec::Kind::channel_obstacle: out << "sample.shape = channel-obstacle\n"; break;
        case ShapeSpec::Kind::tube: out << "sample.shape = tube\n"; break;
        case ShapeSpec::Kind::two_slab: out << "sample.shape = two-slab\n"; break;
    }
    out << "sample.n_interior = " << cfg.sample.n_interior << '\n';
    out << "sample.n_boundary = " << cfg.sample.n_boundary << '\n';
    out << "sample.n_interface = " << cfg.sample.n_interface << '\n';
    out << "sample.wall_refine = " << fmt_g17(cfg.sample.wall_refine) << '\n';
    out << "sample.box_min = " << join_num_list(sh.box_min) << '\n';
    out << "sample.box_max = " << join_num_list(sh.box_max) << '\n';
    out << "sample.length = " << fmt_g17(sh.length) << '\n';
    out << "sample.height = " << fmt_g17(sh.height) << '\n';
    out << "sample.obs_x0 = " << fmt_g17(sh.obs_x0) << '\n';
    out << "sample.obs_x1 = " << fmt_g17(sh.obs_x1) << '\n';
    out << "sample.obs_y0 = " << fmt_g17(sh.obs_y0) << '\n';
    out << "sample.obs_y1 = " << fmt_g17(sh.obs_y1) << '\n';
    out << "sample.split = " << fmt_g17(sh.split) << '\n';
    out << "sample.tube_length = " << fmt_g17(sh.tube_length) << '\n';
    out << "sample.tube_radius = " << fmt_g17(sh.tube_radius) << '\n';
    out << "sample.area_ratio = " << fmt_g17(sh.area_ratio) << '\n';
    out << "sample.bump_center = " << fmt_g17(sh.bump_center) << '\n';
    out << "sample.bump_width = " << fmt_g17(sh.bump_width) << '\n';
    if (!cfg.sample.design_space.empty())
        out << "sample.design_space = " << cfg.sample.design_space << '\n';
    out << "sample.n = " << cfg.sample.n << '\n';
    out << "sample.iters = " << cfg.sample.iters << '\n';

    if (!cfg.pso.design_space.empty()) out << "pso.design_space = " << cfg.pso.design_space << '\n';
    if (!cfg.pso.objective.empty()) out << "pso.objective = " << cfg.pso.objective << '\n';
    for (const auto& [name, text] : cfg.pso.constraints)
        out << "pso.constraint." << name << " = " << text << '\n';
    out << "pso.n_particles = " << cfg.pso.config.n_particles << '\n';
    out << "pso.w = " << fmt_g17(cfg.pso.config.w) << '\n';
    out << "pso.c1 = " << fmt_g17(cfg.pso.config.c1) << '\n';
    out << "pso.c2 = " << fmt_g17(cfg.pso.config.c2) << '\n';
    out << "pso.lambda = " << fmt_g17(cfg.pso.config.lambda_penalty) << '\n';
    out << "pso.beta = " << fmt_g17(cfg.pso.config.beta) << '\n';
    out << "pso.iters = " << cfg.pso.config.max_iters << '\n';
    if (!cfg.pso.model.empty()) out << "pso.model = " << cfg.pso.model << '\n';
    if (!cfg.pso.eval_cloud.empty()) out << "pso.eval_cloud = " << cfg.pso.eval_cloud << '\n';
    return out.str();
}

Model build_model(const RunConfig& cfg) {
    Model model;
    model.spatial_dim = cfg.dim;
    for (std::size_t si = 0; si < cfg.subdomains.size(); ++si) {
        const SubdomainSpec& spec = cfg.subdomains[si];
        Subdomain sd;
        sd.region = spec.region;
        sd.physics = spec.physics;
        sd.props = spec.props;
        sd.config.input_dim = cfg.dim + spec.extra_inputs;
        sd.config.hidden = spec.hidden;
        sd.config.output_names = spec.outputs;
        sd.config.seed = mix_seed(cfg.seed, 0x5b44ull + si);
        if (spec.embedding > 0)
            sd.config.embedding = make_fourier_embedding(
                spec.embedding, sd.config.input_dim, spec.embedding_sigma,
                mix_seed(cfg.seed, 0xe4bull + si));
        sd.config.validate();
        sd.norm = Normalization::identity(sd.config.input_dim, sd.config.output_dim());
        if (!spec.in_mean.empty()) sd.norm.in_mean = spec.in_mean;
        if (!spec.in_std.empty()) sd.norm.in_std = spec.in_std;
        if (!spec.out_mean.empty()) sd.norm.out_mean = spec.out_mean;
        if (!spec.out_std.empty()) sd.norm.out_std = spec.out_std;
        sd.norm.validate(sd.config.input_dim, sd.config.output_dim());
        sd.params = init_xavier(sd.config);
        model.subdomains.push_back(std::move(sd));
    }
    for (const InterfaceSpec& itf : cfg.interfaces)
        model.interfaces.push_back({itf.name, itf.region1, itf.region2});
    for (const auto& [tag, region] : cfg.boundary_region)
        model.boundary_owner[tag] = model.subdomain_index(region);
    model.finalize();
    return model;
}

TrainConfig build_train_config(const RunConfig& cfg, bool has_data) {
    TrainConfig t;
    t.phases = default_phases(cfg.steps, cfg.warm_fraction, has_data);
    t.lr0 = cfg.lr0;
    t.lr_decay = cfg.lr_decay;
    t.lr_decay_every = cfg.lr_decay_every;
    t.clip_norm = cfg.clip_norm;
    t.batch_fraction = cfg.batch_fraction;
    t.resample_every = cfg.resample_every;
    t.anneal_every = cfg.anneal_every;
    t.anneal_alpha = cfg.anneal_alpha;
    t.anneal_threshold = cfg.anneal_threshold;
    t.anneal_thresholds = cfg.anneal_thresholds;
    t.divergence_threshold = cfg.divergence_threshold;
    t.seed = cfg.seed;
    return t;
}

}  // namespace pinnflow
