#include "pinnflow/network.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pinnflow/rng.hpp"
#include "pinnflow/util.hpp"

namespace pinnflow {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

FourierEmbedding make_fourier_embedding(int m, int input_dim, double sigma, std::uint64_t seed) {
    if (m < 0) throw ValidationError("embedding: m must be >= 0");
    if (sigma <= 0.0) throw ValidationError("embedding: sigma must be > 0");
    if (input_dim <= 0) throw ValidationError("embedding: input_dim must be > 0");
    FourierEmbedding emb;
    emb.m = m;
    emb.input_dim = input_dim;
    emb.sigma = sigma;
    emb.seed = seed;
    emb.b.resize(static_cast<std::size_t>(m) * input_dim);
    Rng rng(mix_seed(seed, 0x46465254ull));
    for (double& v : emb.b) v = sigma * rng.normal();
    return emb;
}

std::vector<double> fourier_embed(std::span<const double> v, const FourierEmbedding& emb) {
    if (static_cast<int>(v.size()) != emb.input_dim)
        throw ValidationError("embedding: input size mismatch");
    std::vector<double> out(2 * emb.m);
    for (int j = 0; j < emb.m; ++j) {
        double w = 0.0;
        for (int k = 0; k < emb.input_dim; ++k) w += emb.b[static_cast<std::size_t>(j) * emb.input_dim + k] * v[k];
        w *= kTwoPi;
        out[2 * j] = std::cos(w);
        out[2 * j + 1] = std::sin(w);
    }
    return out;
}

Normalization Normalization::identity(int n_in, int n_out) {
    Normalization n;
    n.in_mean.assign(n_in, 0.0);
    n.in_std.assign(n_in, 1.0);
    n.out_mean.assign(n_out, 0.0);
    n.out_std.assign(n_out, 1.0);
    return n;
}

void Normalization::validate(int n_in, int n_out) const {
    if (static_cast<int>(in_mean.size()) != n_in || static_cast<int>(in_std.size()) != n_in ||
        static_cast<int>(out_mean.size()) != n_out || static_cast<int>(out_std.size()) != n_out)
        throw ValidationError("normalization: size mismatch with network config");
    for (double s : in_std)
        if (!(s > 0.0)) throw ValidationError("normalization: input std must be strictly positive");
    for (double s : out_std)
        if (!(s > 0.0)) throw ValidationError("normalization: output std must be strictly positive");
}

std::vector<int> NetworkConfig::widths() const {
    std::vector<int> w;
    w.push_back(first_layer_in());
    for (int h : hidden) w.push_back(h);
    w.push_back(output_dim());
    return w;
}

void NetworkConfig::validate() const {
    if (input_dim <= 0) throw ValidationError("network: input_dim must be > 0");
    if (output_names.empty()) throw ValidationError("network: needs at least one output");
    for (std::size_t i = 0; i < output_names.size(); ++i) {
        const std::string& name = output_names[i];
        if (name != "u" && name != "v" && name != "w" && name != "p" && name != "T")
            throw ValidationError("network: unknown output '" + name + "'");
        for (std::size_t j = i + 1; j < output_names.size(); ++j)
            if (output_names[j] == name)
                throw ValidationError("network: duplicate output '" + name + "'");
    }
    if (hidden.empty()) throw ValidationError("network: needs at least one hidden layer");
    for (int h : hidden)
        if (h <= 0) throw ValidationError("network: hidden widths must be positive");
    if (activation != "tanh")
        throw ValidationError("network: unsupported activation '" + activation + "'");
    if (embedding && embedding->m > 0 && embedding->input_dim != input_dim)
        throw ValidationError("network: embedding input_dim mismatch");
}

ParameterStore init_xavier(const NetworkConfig& cfg) {
    cfg.validate();
    ParameterStore store(cfg.widths());
    Rng rng(mix_seed(cfg.seed, 0x58415649ull));
    for (std::size_t l = 0; l < store.layer_count(); ++l) {
        const LayerShape& s = store.layer(l);
        double limit = std::sqrt(6.0 / (s.in + s.out));
        for (int r = 0; r < s.out; ++r)
            for (int c = 0; c < s.in; ++c)
                store[store.w_index(l, r, c)] = rng.uniform(-limit, limit);
        // biases stay zero
    }
    return store;
}

// ===========================================================================
// Forward passes
// ===========================================================================

namespace {

// Builds the first-layer input jets: normalized coordinates, optionally
// pushed through the Fourier map. Embedding outputs depend only on the
// (fixed) frequency matrix and the point, so their jets are constants with
// analytically known derivatives — no tape arithmetic needed.
std::vector<Jet> input_jets(JetCtx& c, const NetworkConfig& cfg, const Normalization& norm,
                            std::span<const double> x, int spatial_dim) {
    Tape& t = *c.tape;
    std::vector<double> xn(cfg.input_dim);
    for (int k = 0; k < cfg.input_dim; ++k) xn[k] = (x[k] - norm.in_mean[k]) / norm.in_std[k];

    if (!cfg.embedding || cfg.embedding->m == 0) {
        std::vector<Jet> jets(cfg.input_dim);
        for (int k = 0; k < cfg.input_dim; ++k) {
            if (k < spatial_dim)
                jets[k] = jet_input(c, xn[k], k, 1.0 / norm.in_std[k]);
            else
                jets[k] = jet_const(c, xn[k]);
        }
        return jets;
    }

    const FourierEmbedding& emb = *cfg.embedding;
    std::vector<Jet> jets(2 * emb.m);
    for (int j = 0; j < emb.m; ++j) {
        double w = 0.0;
        for (int k = 0; k < cfg.input_dim; ++k)
            w += emb.b[static_cast<std::size_t>(j) * cfg.input_dim + k] * xn[k];
        w *= kTwoPi;
        double cw = std::cos(w), sw = std::sin(w);
        Jet cj, sj;
        cj.v = t.constant(cw);
        sj.v = t.constant(sw);
        if (c.want_d1()) {
            for (int k = 0; k < spatial_dim && k < c.dim; ++k) {
                // d/dx_k of 2 pi b_j . (x - mu)/std
                double a = kTwoPi * emb.b[static_cast<std::size_t>(j) * cfg.input_dim + k] / norm.in_std[k];
                cj.d1[k] = t.constant(-sw * a);
                sj.d1[k] = t.constant(cw * a);
                if (c.want_d2()) {
                    cj.d2[k] = t.constant(-cw * a * a);
                    sj.d2[k] = t.constant(-sw * a * a);
                }
            }
        }
        jets[2 * j] = cj;
        jets[2 * j + 1] = sj;
    }
    return jets;
}

}  // namespace

std::vector<Jet> net_forward_jets(Tape& tape, NodeId param_base, const ParameterStore& params,
                                  const NetworkConfig& cfg, const Normalization& norm,
                                  std::span<const double> x, int spatial_dim, JetMode mode) {
    if (static_cast<int>(x.size()) != cfg.input_dim)
        throw ValidationError("forward: input size mismatch");
    if (spatial_dim < 0 || spatial_dim > 3 || spatial_dim > cfg.input_dim)
        throw ValidationError("forward: bad spatial dimension");
    norm.validate(cfg.input_dim, cfg.output_dim());

    JetCtx c(tape, spatial_dim, mode);
    std::vector<Jet> cur = input_jets(c, cfg, norm, x, spatial_dim);

    const bool d1 = c.want_d1(), d2 = c.want_d2();
    const std::size_t n_layers = params.layer_count();
    std::vector<Jet> next;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const LayerShape& s = params.layer(l);
        if (static_cast<int>(cur.size()) != s.in)
            throw ValidationError("forward: layer width mismatch");
        next.assign(s.out, Jet{});
        for (int i = 0; i < s.out; ++i) {
            NodeId w0 = param_base + static_cast<NodeId>(s.w_offset) +
                        static_cast<NodeId>(i) * static_cast<NodeId>(s.in);
            Jet& o = next[i];
            o.v = param_base + static_cast<NodeId>(s.b_offset) + static_cast<NodeId>(i);
            for (int k = 0; k < s.in; ++k) o.v = tape.fma(o.v, w0 + k, cur[k].v);
            if (d1)
                for (int j = 0; j < spatial_dim; ++j) {
                    NodeId acc = Tape::kZero;
                    for (int k = 0; k < s.in; ++k) acc = tape.fma(acc, w0 + k, cur[k].d1[j]);
                    o.d1[j] = acc;
                }
            if (d2)
                for (int j = 0; j < spatial_dim; ++j) {
                    NodeId acc = Tape::kZero;
                    for (int k = 0; k < s.in; ++k) acc = tape.fma(acc, w0 + k, cur[k].d2[j]);
                    o.d2[j] = acc;
                }
        }
        if (l + 1 < n_layers)
            for (Jet& j : next) j = jet_tanh(c, j);
        cur.swap(next);
    }

    // denormalize outputs to physical units
    for (int i = 0; i < cfg.output_dim(); ++i) {
        cur[i] = jet_scale(c, cur[i], tape.constant(norm.out_std[i]));
        cur[i] = jet_shift(c, cur[i], tape.constant(norm.out_mean[i]));
    }
    return cur;
}

std::vector<double> net_eval(const ParameterStore& params, const NetworkConfig& cfg,
                             const Normalization& norm, std::span<const double> x) {
    if (static_cast<int>(x.size()) != cfg.input_dim)
        throw ValidationError("forward: input size mismatch");
    norm.validate(cfg.input_dim, cfg.output_dim());

    std::vector<double> cur(cfg.input_dim);
    for (int k = 0; k < cfg.input_dim; ++k) cur[k] = (x[k] - norm.in_mean[k]) / norm.in_std[k];
    if (cfg.embedding && cfg.embedding->m > 0) cur = fourier_embed(cur, *cfg.embedding);

    const std::size_t n_layers = params.layer_count();
    std::vector<double> next;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const LayerShape& s = params.layer(l);
        if (static_cast<int>(cur.size()) != s.in)
            throw ValidationError("forward: layer width mismatch");
        next.assign(s.out, 0.0);
        const double* flat = params.flat().data();
        for (int i = 0; i < s.out; ++i) {
            double acc = flat[s.b_offset + i];
            const double* w = flat + s.w_offset + static_cast<std::size_t>(i) * s.in;
            for (int k = 0; k < s.in; ++k) acc = acc + w[k] * cur[k];
            next[i] = (l + 1 < n_layers) ? std::tanh(acc) : acc;
        }
        cur.swap(next);
    }
    for (int i = 0; i < cfg.output_dim(); ++i) cur[i] = cur[i] * norm.out_std[i] + norm.out_mean[i];
    return cur;
}

FiniteDiffReport finite_diff_check(const ParameterStore& params, const NetworkConfig& cfg,
                                   const Normalization& norm, std::span<const double> x,
                                   int spatial_dim, double h) {
    if (!(h > 0.0)) throw ValidationError("finite_diff_check: step h must be > 0");

    Tape tape;
    tape.add_params(params.flat());
    std::vector<Jet> jets = net_forward_jets(tape, tape.param_begin(), params, cfg, norm, x,
                                             spatial_dim, JetMode::full);

    auto rel = [](double a, double b) {
        double scale = std::max(std::abs(a), std::abs(b));
        if (scale == 0.0) return 0.0;
        return std::abs(a - b) / std::max(scale, 1e-12);
    };

    FiniteDiffReport rep;
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    std::vector<double> f0 = net_eval(params, cfg, norm, x);
    for (int j = 0; j < spatial_dim; ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        std::vector<double> fp = net_eval(params, cfg, norm, xp);
        std::vector<double> fm = net_eval(params, cfg, norm, xm);
        xp[j] = x[j];
        xm[j] = x[j];
        for (int i = 0; i < cfg.output_dim(); ++i) {
            double fd1 = (fp[i] - fm[i]) / (2.0 * h);
            double fd2 = (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h);
            rep.max_rel_d1 = std::max(rep.max_rel_d1, rel(tape.value(jets[i].d1[j]), fd1));
            rep.max_rel_d2 = std::max(rep.max_rel_d2, rel(tape.value(jets[i].d2[j]), fd2));
        }
    }
    return rep;
}

// ===========================================================================
// Checkpoint blocks
// ===========================================================================

namespace {

void write_vector(std::ostream& os, const char* key, std::span<const double> v) {
    os << key;
    for (double x : v) os << ' ' << fmt_g17(x);
    os << '\n';
}

std::vector<double> read_doubles(std::istream& is, std::size_t n, const char* what) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!(is >> v[i])) throw IoError(std::string("checkpoint: truncated ") + what);
    return v;
}

}  // namespace

void save_network_block(std::ostream& os, const std::string& name, const NetworkConfig& cfg,
                        const Normalization& norm, const ParameterStore& params) {
    os << "network " << name << '\n';
    os << "input_dim " << cfg.input_dim << '\n';
    os << "outputs";
    for (const std::string& o : cfg.output_names) os << ' ' << o;
    os << '\n';
    os << "hidden";
    for (int h : cfg.hidden) os << ' ' << h;
    os << '\n';
    os << "activation " << cfg.activation << '\n';
    os << "seed " << cfg.seed << '\n';
    if (cfg.embedding && cfg.embedding->m > 0) {
        os << "embedding " << cfg.embedding->m << ' ' << fmt_g17(cfg.embedding->sigma) << ' '
           << cfg.embedding->seed << '\n';
        write_vector(os, "embedding_b", cfg.embedding->b);
    } else {
        os << "embedding none\n";
    }
    write_vector(os, "norm_in_mean", norm.in_mean);
    write_vector(os, "norm_in_std", norm.in_std);
    write_vector(os, "norm_out_mean", norm.out_mean);
    write_vector(os, "norm_out_std", norm.out_std);
    os << "params " << params.total_count() << '\n';
    std::span<const double> flat = params.flat();
    for (std::size_t i = 0; i < flat.size(); ++i)
        os << fmt_g17(flat[i]) << ((i + 1) % 8 == 0 || i + 1 == flat.size() ? '\n' : ' ');
    os << "end network\n";
}

bool load_network_block(std::istream& is, NetworkBlock& out) {
    std::string tok;
    if (!(is >> tok)) return false;
    if (tok != "network") throw IoError("checkpoint: expected 'network', got '" + tok + "'");
    if (!(is >> out.name)) throw IoError("checkpoint: missing network name");

    NetworkConfig cfg;
    Normalization norm;
    auto expect = [&](const char* key) {
        if (!(is >> tok) || tok != key)
            throw IoError(std::string("checkpoint: expected '") + key + "'");
    };

    expect("input_dim");
    is >> cfg.input_dim;
    expect("outputs");
    {
        cfg.output_names.clear();
        std::string line;
        std::getline(is, line);
        std::istringstream ls(line);
        std::string o;
        while (ls >> o) cfg.output_names.push_back(o);
    }
    expect("hidden");
    {
        cfg.hidden.clear();
        std::string line;
        std::getline(is, line);
        std::istringstream ls(line);
        int h;
        while (ls >> h) cfg.hidden.push_back(h);
    }
    expect("activation");
    is >> cfg.activation;
    expect("seed");
    is >> cfg.seed;
    expect("embedding");
    is >> tok;
    if (tok != "none") {
        FourierEmbedding emb;
        emb.m = std::stoi(tok);
        emb.input_dim = cfg.input_dim;
        is >> emb.sigma >> emb.seed;
        expect("embedding_b");
        emb.b = read_doubles(is, static_cast<std::size_t>(emb.m) * cfg.input_dim, "embedding_b");
        cfg.embedding = std::move(emb);
    }
    expect("norm_in_mean");
    norm.in_mean = read_doubles(is, cfg.input_dim, "norm_in_mean");
    expect("norm_in_std");
    norm.in_std = read_doubles(is, cfg.input_dim, "norm_in_std");
    expect("norm_out_mean");
    norm.out_mean = read_doubles(is, cfg.output_names.size(), "norm_out_mean");
    expect("norm_out_std");
    norm.out_std = read_doubles(is, cfg.output_names.size(), "norm_out_std");
    expect("params");
    std::size_t count = 0;
    is >> count;
    cfg.validate();
    ParameterStore store(cfg.widths());
    if (count != store.total_count())
        throw IoError("checkpoint: parameter count does not match architecture");
    std::vector<double> flat = read_doubles(is, count, "params");
    std::copy(flat.begin(), flat.end(), store.flat().begin());
    expect("end");
    expect("network");

    out.config = std::move(cfg);
    out.norm = std::move(norm);
    out.params = std::move(store);
    return true;
}

}  // namespace pinnflow
