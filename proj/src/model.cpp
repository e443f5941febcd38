#include "pinnflow/model.hpp"

#include <fstream>

#include "pinnflow/util.hpp"

namespace pinnflow {

namespace {
const char* kPhysicsKinds[] = {"poisson", "ns", "rans", "energy", "conjugate"};
}

std::size_t Model::total_params() const {
    std::size_t n = 0;
    for (const Subdomain& s : subdomains) n += s.params.total_count();
    return n;
}

void Model::finalize() {
    if (subdomains.empty()) throw ValidationError("model: needs at least one subdomain");
    if (spatial_dim != 2 && spatial_dim != 3)
        throw ValidationError("model: spatial_dim must be 2 or 3");
    std::size_t off = 0;
    for (Subdomain& s : subdomains) {
        bool known = false;
        for (const char* k : kPhysicsKinds) known = known || s.physics == k;
        if (!known) throw ValidationError("model: unknown physics '" + s.physics + "'");
        s.config.validate();
        s.norm.validate(s.config.input_dim, s.config.output_dim());
        s.props.validate();
        if (s.config.input_dim < spatial_dim)
            throw ValidationError("model: network input_dim smaller than spatial_dim");
        s.param_offset = off;
        off += s.params.total_count();
    }
    for (std::size_t i = 0; i < subdomains.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (subdomains[i].region == subdomains[j].region)
                throw ValidationError("model: duplicate region '" + subdomains[i].region + "'");
    for (const ModelInterface& itf : interfaces) {
        subdomain_index(itf.region1);
        subdomain_index(itf.region2);
        if (itf.region1 == itf.region2)
            throw ValidationError("model: interface '" + itf.name + "' joins a region to itself");
    }
    for (const auto& [tag, idx] : boundary_owner)
        if (idx >= subdomains.size())
            throw ValidationError("model: boundary owner out of range for tag '" + tag + "'");
}

std::size_t Model::subdomain_index(const std::string& region) const {
    for (std::size_t i = 0; i < subdomains.size(); ++i)
        if (subdomains[i].region == region) return i;
    throw ValidationError("model: unknown region '" + region + "'");
}

std::size_t Model::route_tag(const std::string& tag) const {
    std::string region = tag_region(tag);
    if (region.empty()) {
        if (subdomains.size() > 1)
            throw ValidationError("model: tag '" + tag + "' needs a region qualifier in a decomposed model");
        return 0;
    }
    return subdomain_index(region);
}

std::size_t Model::route_boundary(const std::string& name) const {
    auto it = boundary_owner.find(name);
    return it == boundary_owner.end() ? 0 : it->second;
}

const ModelInterface& Model::interface_by_name(const std::string& name) const {
    for (const ModelInterface& itf : interfaces)
        if (itf.name == name) return itf;
    throw ValidationError("model: unknown interface '" + name + "'");
}

std::vector<double> Model::gather_params() const {
    std::vector<double> flat(total_params());
    for (const Subdomain& s : subdomains) {
        std::span<const double> src = s.params.flat();
        std::copy(src.begin(), src.end(), flat.begin() + static_cast<std::ptrdiff_t>(s.param_offset));
    }
    return flat;
}

void Model::scatter_params(std::span<const double> flat) {
    if (flat.size() != total_params())
        throw ValidationError("model: parameter vector size mismatch");
    for (Subdomain& s : subdomains) {
        std::span<double> dst = s.params.flat();
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(s.param_offset),
                  flat.begin() + static_cast<std::ptrdiff_t>(s.param_offset + dst.size()), dst.begin());
    }
}

void save_model_checkpoint(const std::string& path, const Model& model) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "pinnflow-checkpoint 1\n";
    os << "spatial_dim " << model.spatial_dim << '\n';
    os << "subdomains " << model.subdomains.size() << '\n';
    for (const Subdomain& s : model.subdomains) {
        os << "region " << (s.region.empty() ? "-" : s.region) << '\n';
        os << "physics " << s.physics << '\n';
        os << "props " << fmt_g17(s.props.rho) << ' ' << fmt_g17(s.props.nu) << ' '
           << fmt_g17(s.props.k) << ' ' << fmt_g17(s.props.s) << ' ' << fmt_g17(s.props.q_src) << '\n';
        save_network_block(os, s.region.empty() ? "-" : s.region, s.config, s.norm, s.params);
    }
    os << "interfaces " << model.interfaces.size() << '\n';
    for (const ModelInterface& itf : model.interfaces)
        os << "interface " << itf.name << ' ' << itf.region1 << ' ' << itf.region2 << '\n';
    os << "boundary_owners " << model.boundary_owner.size() << '\n';
    for (const auto& [tag, idx] : model.boundary_owner) os << "owner " << tag << ' ' << idx << '\n';
    if (!os) throw IoError("write failed: " + path);
}

Model load_model_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string tok;
    int version = 0;
    if (!(is >> tok >> version) || tok != "pinnflow-checkpoint" || version != 1)
        throw IoError("checkpoint: " + path + ": not a pinnflow checkpoint");

    Model model;
    auto expect = [&](const char* key) {
        if (!(is >> tok) || tok != key)
            throw IoError("checkpoint: " + path + ": expected '" + std::string(key) + "'");
    };
    expect("spatial_dim");
    is >> model.spatial_dim;
    expect("subdomains");
    std::size_t n_sub = 0;
    is >> n_sub;
    for (std::size_t i = 0; i < n_sub; ++i) {
        Subdomain s;
        expect("region");
        is >> s.region;
        if (s.region == "-") s.region.clear();
        expect("physics");
        is >> s.physics;
        expect("props");
        is >> s.props.rho >> s.props.nu >> s.props.k >> s.props.s >> s.props.q_src;
        NetworkBlock block;
        if (!load_network_block(is, block))
            throw IoError("checkpoint: " + path + ": missing network block");
        s.config = std::move(block.config);
        s.norm = std::move(block.norm);
        s.params = std::move(block.params);
        model.subdomains.push_back(std::move(s));
    }
    expect("interfaces");
    std::size_t n_itf = 0;
    is >> n_itf;
    for (std::size_t i = 0; i < n_itf; ++i) {
        expect("interface");
        ModelInterface itf;
        is >> itf.name >> itf.region1 >> itf.region2;
        model.interfaces.push_back(itf);
    }
    expect("boundary_owners");
    std::size_t n_own = 0;
    is >> n_own;
    for (std::size_t i = 0; i < n_own; ++i) {
        expect("owner");
        std::string tag;
        std::size_t idx;
        is >> tag >> idx;
        model.boundary_owner[tag] = idx;
    }
    model.finalize();
    return model;
}

std::vector<double> model_eval(const Model& model, std::size_t sub, std::span<const double> x) {
    const Subdomain& s = model.subdomains.at(sub);
    return net_eval(s.params, s.config, s.norm, x);
}

}  // namespace pinnflow
