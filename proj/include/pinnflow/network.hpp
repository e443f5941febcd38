#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinnflow/jet.hpp"
#include "pinnflow/params.hpp"

namespace pinnflow {

// Fixed random Fourier feature map gamma(v) = [cos(2 pi b_j.v), sin(2 pi
// b_j.v)]_{j=1..m}, interleaved per frequency. The frequency matrix is drawn
// from N(0, sigma^2) once and never trained.
struct FourierEmbedding {
    int m = 0;                // frequency count; 0 disables the embedding
    int input_dim = 0;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> b;    // m x input_dim, row-major

    int output_dim() const { return 2 * m; }
};

FourierEmbedding make_fourier_embedding(int m, int input_dim, double sigma, std::uint64_t seed);

// Embedded values only (no derivatives); the jet-aware path lives inside the
// network forward.
std::vector<double> fourier_embed(std::span<const double> v, const FourierEmbedding& emb);

// Standard-score normalization for inputs and outputs. Stds must be
// strictly positive.
struct Normalization {
    std::vector<double> in_mean, in_std;
    std::vector<double> out_mean, out_std;

    static Normalization identity(int n_in, int n_out);
    void validate(int n_in, int n_out) const;
};

struct NetworkConfig {
    int input_dim = 2;                      // spatial dims first, extra features after
    std::vector<int> hidden;                // e.g. {128, 128, 128}
    std::vector<std::string> output_names;  // subset of {u, v, w, p, T}
    std::string activation = "tanh";
    std::optional<FourierEmbedding> embedding;
    std::uint64_t seed = 0;

    int output_dim() const { return static_cast<int>(output_names.size()); }
    int first_layer_in() const { return embedding && embedding->m > 0 ? embedding->output_dim() : input_dim; }
    std::vector<int> widths() const;  // {first_in, hidden..., out}
    void validate() const;
};

// Xavier/Glorot uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
// deterministic for a given config seed.
ParameterStore init_xavier(const NetworkConfig& cfg);

// Forward pass recorded on a tape. `param_base` is the tape node id of this
// network's first parameter. Inputs beyond `spatial_dim` are treated as
// constants (no derivative tracking). Returns one jet per output, already
// denormalized to physical units; spatial derivatives are with respect to
// the raw (unnormalized) coordinates.
std::vector<Jet> net_forward_jets(Tape& tape, NodeId param_base, const ParameterStore& params,
                                  const NetworkConfig& cfg, const Normalization& norm,
                                  std::span<const double> x, int spatial_dim, JetMode mode);

// Tape-free forward for prediction paths (evaluation, probes, PSO fitness).
// Summation order matches the tape path, so values agree to round-off.
std::vector<double> net_eval(const ParameterStore& params, const NetworkConfig& cfg,
                             const Normalization& norm, std::span<const double> x);

// Worst relative error of jet derivatives against central finite differences
// with step h, per derivative order, over all outputs and spatial axes.
struct FiniteDiffReport {
    double max_rel_d1 = 0.0;
    double max_rel_d2 = 0.0;
};

FiniteDiffReport finite_diff_check(const ParameterStore& params, const NetworkConfig& cfg,
                                   const Normalization& norm, std::span<const double> x,
                                   int spatial_dim, double h);

// ---------------------------------------------------------------------------
// Checkpoint text blocks. One block per network; a model checkpoint is a
// sequence of blocks (see model.hpp). Doubles are written with 17 significant
// digits so a save/load round-trip is bit-exact.
// ---------------------------------------------------------------------------
void save_network_block(std::ostream& os, const std::string& name, const NetworkConfig& cfg,
                        const Normalization& norm, const ParameterStore& params);

struct NetworkBlock {
    std::string name;
    NetworkConfig config;
    Normalization norm;
    ParameterStore params;
};

// Reads the next "network ... end network" block; returns false on EOF.
bool load_network_block(std::istream& is, NetworkBlock& out);

}  // namespace pinnflow
