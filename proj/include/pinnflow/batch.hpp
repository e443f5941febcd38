#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pinnflow/model.hpp"

namespace pinnflow {

// Index lists into the domain cloud (collocation/boundary/interface) and the
// data cloud for one evaluation. Built once per resampling event.
struct Batch {
    std::vector<std::uint32_t> collocation;
    std::map<std::string, std::vector<std::uint32_t>> boundary;    // tag -> rows
    std::map<std::string, std::vector<std::uint32_t>> interfaces;  // name -> rows
    std::vector<std::uint32_t> data;                               // rows into the data cloud

    bool empty() const {
        return collocation.empty() && boundary.empty() && interfaces.empty() && data.empty();
    }
};

enum class GradKind { none, combined, per_component };

// serial_reference records the whole batch on one tape and differentiates the
// composed total with a single reverse sweep — the straight-line
// implementation the parallel kernel is tested against. parallel gives every
// point its own tape (OpenMP across fixed chunks) and reduces losses and
// gradients in point order, so results do not depend on the thread count.
enum class EvalPath { serial_reference, parallel };

struct EvalResult {
    LossBreakdown losses;
    // lambda-weighted total gradient over the model's flat parameters
    std::vector<double> grad;
    // unweighted per-component gradients, keys "r", "b:<tag>", "d", "flux",
    // "val"; filled for GradKind::per_component
    std::map<std::string, std::vector<double>> component_grads;
};

class BatchEvaluator {
public:
    // `specs` lists the boundary conditions; `data` may be null when the run
    // has no measurement points. Validates that the model, clouds and specs
    // agree (required outputs per physics kind, routable tags, columns for
    // from_data and rans, interface coverage).
    BatchEvaluator(const Model& model, const PointCloud& domain, const PointCloud* data,
                   const std::vector<BoundarySpec>& specs);

    // Evaluates losses (and gradients) over the batch. `lambdas` supplies the
    // weights for the non-residual components (missing entries default to 1).
    EvalResult evaluate(const Batch& batch, const std::map<std::string, double>& lambdas,
                        GradKind grad_kind, EvalPath path);

    // every point of both clouds
    Batch full_batch() const;

    const Model& model() const { return *model_; }

private:
    struct SpecEval {
        BoundarySpec spec;
        int out_index = 0;
        // parabolic profile geometry (transverse axes, center, max radius^2)
        std::vector<int> trans_axes;
        std::vector<double> center;
        double radius2 = 0.0;
    };
    struct BoundaryGroup {
        std::string tag;
        std::size_t sub = 0;
        JetMode mode = JetMode::value;
        std::vector<SpecEval> specs;
    };
    struct InterfaceEval {
        std::string name;
        std::size_t sub1 = 0, sub2 = 0;
        int t1 = 0, t2 = 0;  // T output index per side
        double k1 = 1.0, k2 = 1.0;
    };
    struct PhysicsEval {
        std::vector<int> vel_out;   // u v [w] indices (ns/rans)
        int p_out = -1;
        int t_out = -1;
        std::vector<const std::vector<double>*> vel_cols;  // frozen velocity (energy)
        const std::vector<double>* nu_t_col = nullptr;     // rans
    };

    friend struct BatchWork;

    const Model* model_;
    const PointCloud* domain_;
    const PointCloud* data_;
    std::map<std::string, BoundaryGroup> groups_;
    std::map<std::string, InterfaceEval> interface_eval_;
    std::vector<PhysicsEval> physics_;          // per subdomain
    std::vector<std::size_t> data_route_;       // subdomain per data row
    std::vector<std::vector<int>> data_out_;    // channel output indices per subdomain
    std::vector<std::vector<const std::vector<double>*>> data_cols_;  // matching columns
    int n_data_channels_ = 0;
    // lazily created per-thread tapes for the parallel path, reused across
    // evaluations so the node storage is allocated once
    std::vector<std::unique_ptr<Tape>> thread_tapes_;
};

}  // namespace pinnflow
