#include "pinnflow/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pinnflow {

namespace {

// fixed chunk count for the parallel reduction — independent of the thread
// count, so the same batch reduces in the same order no matter how many
// threads run it
constexpr std::size_t kChunks = 32;

struct Task {
    enum Kind : std::uint8_t { colloc, boundary, data, interface_ };
    Kind kind;
    std::uint32_t row;
    std::uint32_t group;
};

int find_output(const NetworkConfig& cfg, const std::string& name) {
    for (std::size_t i = 0; i < cfg.output_names.size(); ++i)
        if (cfg.output_names[i] == name) return static_cast<int>(i);
    return -1;
}

int require_output(const NetworkConfig& cfg, const std::string& name, const std::string& where) {
    int i = find_output(cfg, name);
    if (i < 0) throw ValidationError(where + ": network lacks required output '" + name + "'");
    return i;
}

}  // namespace

BatchEvaluator::BatchEvaluator(const Model& model, const PointCloud& domain,
                               const PointCloud* data, const std::vector<BoundarySpec>& specs)
    : model_(&model), domain_(&domain), data_(data) {
    domain.validate();
    if (domain.dim != model.spatial_dim)
        throw ValidationError("batch: cloud dimension does not match the model");

    // physics plumbing per subdomain
    const int dim = model.spatial_dim;
    const char* vel_names[3] = {"u", "v", "w"};
    physics_.resize(model.subdomains.size());
    for (std::size_t s = 0; s < model.subdomains.size(); ++s) {
        const Subdomain& sd = model.subdomains[s];
        if (sd.config.input_dim != dim)
            throw ValidationError("batch: training requires input_dim == spatial_dim for region '" +
                                  sd.region + "'");
        PhysicsEval& pe = physics_[s];
        if (sd.physics == "ns" || sd.physics == "rans") {
            for (int k = 0; k < dim; ++k)
                pe.vel_out.push_back(require_output(sd.config, vel_names[k], "physics " + sd.physics));
            pe.p_out = require_output(sd.config, "p", "physics " + sd.physics);
            if (sd.physics == "rans") {
                if (!domain.has_col("nu_t"))
                    throw ValidationError("batch: rans physics needs a nu_t column in the cloud");
                pe.nu_t_col = &domain.cols.at("nu_t");
            }
        } else {  // poisson | energy | conjugate
            pe.t_out = require_output(sd.config, "T", "physics " + sd.physics);
            pe.vel_cols.assign(dim, nullptr);
            if (sd.physics != "poisson")
                for (int k = 0; k < dim; ++k)
                    if (domain.has_col(vel_names[k])) pe.vel_cols[k] = &domain.cols.at(vel_names[k]);
        }
    }

    // which tags actually exist in the cloud
    std::map<std::string, std::vector<std::uint32_t>> boundary_rows;
    std::map<std::string, std::vector<std::uint32_t>> interface_rows;
    for (std::size_t i = 0; i < domain.size(); ++i) {
        if (auto b = tag_boundary_name(domain.tags[i]))
            boundary_rows[*b].push_back(static_cast<std::uint32_t>(i));
        else if (auto f = tag_interface_name(domain.tags[i]))
            interface_rows[*f].push_back(static_cast<std::uint32_t>(i));
        else if (tag_is_data(domain.tags[i]))
            throw ValidationError("batch: data-tagged rows belong in the data cloud, not the domain");
        else
            model.route_tag(domain.tags[i]);  // throws on unroutable regions
    }

    // boundary condition groups
    for (const BoundarySpec& spec : specs) {
        auto rows_it = boundary_rows.find(spec.tag);
        if (rows_it == boundary_rows.end())
            throw ValidationError("batch: boundary spec references tag '" + spec.tag +
                                  "' which has no points in the cloud");
        BoundaryGroup& g = groups_[spec.tag];
        if (g.specs.empty()) {
            g.tag = spec.tag;
            g.sub = model.route_boundary(spec.tag);
        }
        for (const SpecEval& prev : g.specs)
            if (prev.spec.output == spec.output)
                throw ValidationError("batch: tag '" + spec.tag + "' has two conditions on output '" +
                                      spec.output + "'");
        SpecEval se;
        se.spec = spec;
        se.out_index = require_output(model.subdomains[g.sub].config, spec.output,
                                      "boundary tag '" + spec.tag + "'");
        if (spec.kind == BoundarySpec::Kind::neumann) {
            g.mode = JetMode::grad;
            if (!domain.has_col("nx"))
                throw ValidationError("batch: Neumann condition on '" + spec.tag +
                                      "' but the cloud has no normals");
        }
        if (spec.profile == BoundarySpec::Profile::from_data) {
            if (!domain.has_col(spec.output))
                throw ValidationError("batch: from_data condition on '" + spec.tag +
                                      "' needs column '" + spec.output + "' in the cloud");
        }
        if (spec.profile == BoundarySpec::Profile::parabola) {
            // fit the face geometry: the normal axis is the one with no
            // extent; the rest are transverse
            const std::vector<std::uint32_t>& rows = rows_it->second;
            for (int k = 0; k < dim; ++k) {
                double lo = 1e300, hi = -1e300;
                for (std::uint32_t r : rows) {
                    lo = std::min(lo, domain.xs[r * dim + k]);
                    hi = std::max(hi, domain.xs[r * dim + k]);
                }
                if (hi - lo > 1e-9) {
                    se.trans_axes.push_back(k);
                    se.center.push_back(0.5 * (lo + hi));
                }
            }
            if (se.trans_axes.empty() || se.trans_axes.size() == static_cast<std::size_t>(dim))
                throw ValidationError("batch: parabola profile on '" + spec.tag +
                                      "' needs a planar axis-aligned face");
            for (std::uint32_t r : rows) {
                double r2 = 0.0;
                for (std::size_t a = 0; a < se.trans_axes.size(); ++a) {
                    double d = domain.xs[r * dim + se.trans_axes[a]] - se.center[a];
                    r2 += d * d;
                }
                se.radius2 = std::max(se.radius2, r2);
            }
            if (!(se.radius2 > 0.0))
                throw ValidationError("batch: parabola profile on '" + spec.tag +
                                      "' has zero transverse extent");
        }
        g.specs.push_back(std::move(se));
    }

    // interfaces present in the cloud
    for (const auto& [name, rows] : interface_rows) {
        const ModelInterface& itf = model.interface_by_name(name);
        InterfaceEval ie;
        ie.name = name;
        ie.sub1 = model.subdomain_index(itf.region1);
        ie.sub2 = model.subdomain_index(itf.region2);
        ie.t1 = require_output(model.subdomains[ie.sub1].config, "T", "interface '" + name + "'");
        ie.t2 = require_output(model.subdomains[ie.sub2].config, "T", "interface '" + name + "'");
        ie.k1 = model.subdomains[ie.sub1].props.k;
        ie.k2 = model.subdomains[ie.sub2].props.k;
        if (!domain.has_col("nx"))
            throw ValidationError("batch: interface '" + name + "' needs normals in the cloud");
        interface_eval_[name] = ie;
    }

    // data channels: per subdomain, the output columns the data cloud carries
    if (data_) {
        data_->validate();
        if (data_->dim != dim) throw ValidationError("batch: data cloud dimension mismatch");
        data_out_.resize(model.subdomains.size());
        data_cols_.resize(model.subdomains.size());
        data_route_.resize(data_->size());
        for (std::size_t i = 0; i < data_->size(); ++i) {
            if (!tag_is_data(data_->tags[i]))
                throw ValidationError("batch: data cloud row " + std::to_string(i + 1) +
                                      " is not tagged data");
            std::size_t s = model.route_tag(data_->tags[i]);
            data_route_[i] = s;
            if (data_out_[s].empty()) {
                const Subdomain& sd = model.subdomains[s];
                for (std::size_t o = 0; o < sd.config.output_names.size(); ++o)
                    if (data_->has_col(sd.config.output_names[o])) {
                        data_out_[s].push_back(static_cast<int>(o));
                        data_cols_[s].push_back(&data_->cols.at(sd.config.output_names[o]));
                    }
                if (data_out_[s].empty())
                    throw ValidationError("batch: data cloud shares no channels with region '" +
                                          sd.region + "' outputs");
                if (n_data_channels_ == 0)
                    n_data_channels_ = static_cast<int>(data_out_[s].size());
                else if (n_data_channels_ != static_cast<int>(data_out_[s].size()))
                    throw ValidationError("batch: data channel count differs between regions");
            }
        }
    }
}

Batch BatchEvaluator::full_batch() const {
    Batch b;
    for (std::size_t i = 0; i < domain_->size(); ++i) {
        const std::string& tag = domain_->tags[i];
        if (tag_is_interior(tag)) {
            b.collocation.push_back(static_cast<std::uint32_t>(i));
        } else if (auto bn = tag_boundary_name(tag)) {
            if (groups_.count(*bn)) b.boundary[*bn].push_back(static_cast<std::uint32_t>(i));
        } else if (auto fn = tag_interface_name(tag)) {
            if (interface_eval_.count(*fn)) b.interfaces[*fn].push_back(static_cast<std::uint32_t>(i));
        }
    }
    if (data_)
        for (std::size_t i = 0; i < data_->size(); ++i) b.data.push_back(static_cast<std::uint32_t>(i));
    return b;
}

// ===========================================================================
// Evaluation
// ===========================================================================

// Per-point machinery shared by the serial reference and the parallel
// kernel, so both paths run the exact same arithmetic per point.
struct BatchWork {
    const BatchEvaluator& ev;
    const Model& model;
    const PointCloud& domain;
    const PointCloud* data;

    struct Built {
        NodeId term = Tape::kZero;       // squared-term node
        NodeId term2 = Tape::kZero;      // interface value term
        std::size_t sub1 = 0, sub2 = SIZE_MAX;
    };

    std::vector<Jet> forward(Tape& tape, std::size_t sub, std::span<const double> x,
                             JetMode mode) const {
        const Subdomain& sd = model.subdomains[sub];
        return net_forward_jets(tape, tape.param_begin() + static_cast<NodeId>(sd.param_offset),
                                sd.params, sd.config, sd.norm, x, model.spatial_dim, mode);
    }

    Built build_colloc(Tape& tape, std::uint32_t row, std::size_t sub) const {
        const int dim = model.spatial_dim;
        const Subdomain& sd = model.subdomains[sub];
        const BatchEvaluator::PhysicsEval& pe = ev.physics_[sub];
        std::vector<Jet> jets = forward(tape, sub, domain.point(row), JetMode::full);
        Built out;
        out.sub1 = sub;
        if (!pe.vel_out.empty()) {
            std::vector<Jet> vel(dim);
            for (int k = 0; k < dim; ++k) vel[k] = jets[pe.vel_out[k]];
            double nu_t = pe.nu_t_col ? (*pe.nu_t_col)[row] : 0.0;
            std::vector<NodeId> comps =
                ns_residual(tape, vel, jets[pe.p_out], dim, sd.props, nu_t, JetMode::full);
            out.term = residual_point_term(tape, comps);
        } else {
            std::vector<double> u(dim, 0.0);
            for (int k = 0; k < dim; ++k)
                if (pe.vel_cols[k]) u[k] = (*pe.vel_cols[k])[row];
            NodeId comp = energy_residual(tape, jets[pe.t_out], u, dim, sd.props, JetMode::full);
            NodeId comps[1] = {comp};
            out.term = residual_point_term(tape, comps);
        }
        return out;
    }

    Built build_boundary(Tape& tape, std::uint32_t row, const BatchEvaluator::BoundaryGroup& g) const {
        const int dim = model.spatial_dim;
        std::vector<Jet> jets = forward(tape, g.sub, domain.point(row), g.mode);
        std::vector<double> normal = domain.normal(row);
        Built out;
        out.sub1 = g.sub;
        for (const BatchEvaluator::SpecEval& se : g.specs) {
            double gval = se.spec.value;
            if (se.spec.profile == BoundarySpec::Profile::from_data) {
                gval = domain.col(se.spec.output, row);
            } else if (se.spec.profile == BoundarySpec::Profile::parabola) {
                double r2 = 0.0;
                for (std::size_t a = 0; a < se.trans_axes.size(); ++a) {
                    double d = domain.xs[row * dim + se.trans_axes[a]] - se.center[a];
                    r2 += d * d;
                }
                gval = se.spec.value * (1.0 - r2 / se.radius2);
            }
            NodeId t = boundary_point_term(tape, jets[se.out_index], se.spec, gval, normal, dim, g.mode);
            out.term = tape.add(out.term, t);
        }
        return out;
    }

    Built build_data(Tape& tape, std::uint32_t row) const {
        std::size_t sub = ev.data_route_[row];
        std::vector<Jet> jets = forward(tape, sub, data->point(row), JetMode::value);
        const std::vector<int>& outs = ev.data_out_[sub];
        std::vector<Jet> pred(outs.size());
        std::vector<double> meas(outs.size());
        for (std::size_t c = 0; c < outs.size(); ++c) {
            pred[c] = jets[outs[c]];
            meas[c] = (*ev.data_cols_[sub][c])[row];
        }
        Built out;
        out.sub1 = sub;
        out.term = data_point_term(tape, pred, meas);
        return out;
    }

    Built build_interface(Tape& tape, std::uint32_t row, const BatchEvaluator::InterfaceEval& ie) const {
        const int dim = model.spatial_dim;
        std::vector<Jet> j1 = forward(tape, ie.sub1, domain.point(row), JetMode::grad);
        std::vector<Jet> j2 = forward(tape, ie.sub2, domain.point(row), JetMode::grad);
        std::vector<double> n1 = domain.normal(row);
        Built out;
        out.sub1 = ie.sub1;
        out.sub2 = ie.sub2;
        out.term = interface_flux_term(tape, j1[ie.t1], j2[ie.t2], ie.k1, ie.k2, n1, dim, JetMode::grad);
        out.term2 = interface_value_term(tape, j1[ie.t1], j2[ie.t2]);
        return out;
    }
};

EvalResult BatchEvaluator::evaluate(const Batch& batch, const std::map<std::string, double>& lambdas,
                                    GradKind grad_kind, EvalPath path) {
    if (batch.empty()) throw ValidationError("batch: nothing to evaluate");
    const std::size_t P = model_->total_params();

    // ---- component table (fixed order: boundary tags sorted, d, flux, val)
    struct Comp {
        std::string key;
        double coeff = 1.0;   // 1/denominator
        double lambda = 1.0;
    };
    std::vector<Comp> comps;
    auto lambda_of = [&](const std::string& key) {
        auto it = lambdas.find(key);
        double lam = it == lambdas.end() ? 1.0 : it->second;
        if (lam < 0.0) throw ValidationError("loss: negative weight for component '" + key + "'");
        return lam;
    };
    for (const auto& [tag, rows] : batch.boundary) {
        if (!groups_.count(tag))
            throw ValidationError("batch: no boundary spec for tag '" + tag + "'");
        if (rows.empty()) throw ValidationError("batch: empty point set for tag '" + tag + "'");
        comps.push_back({"b:" + tag, 1.0 / static_cast<double>(rows.size()), lambda_of("b:" + tag)});
    }
    int data_comp = -1, flux_comp = -1, val_comp = -1;
    if (!batch.data.empty()) {
        if (!data_) throw ValidationError("batch: data indices without a data cloud");
        data_comp = static_cast<int>(comps.size());
        comps.push_back({"d", 1.0 / (static_cast<double>(batch.data.size()) * n_data_channels_),
                         lambda_of("d")});
    }
    std::size_t n_interface = 0;
    for (const auto& [name, rows] : batch.interfaces) {
        if (!interface_eval_.count(name))
            throw ValidationError("batch: unknown interface '" + name + "' in batch");
        n_interface += rows.size();
    }
    if (n_interface > 0) {
        flux_comp = static_cast<int>(comps.size());
        comps.push_back({"flux", 1.0 / static_cast<double>(n_interface), lambda_of("flux")});
        val_comp = static_cast<int>(comps.size());
        comps.push_back({"val", 1.0 / (2.0 * static_cast<double>(n_interface)), lambda_of("val")});
    }
    const double res_coeff =
        batch.collocation.empty() ? 0.0 : 1.0 / static_cast<double>(batch.collocation.size());

    // ---- flattened tasks, grouped the same way both paths consume them
    std::vector<Task> tasks;
    std::vector<int> task_comp;  // component index per task (-1 = residual)
    {
        std::vector<std::size_t> colloc_route(batch.collocation.size());
        for (std::size_t i = 0; i < batch.collocation.size(); ++i)
            colloc_route[i] = model_->route_tag(domain_->tags[batch.collocation[i]]);
        for (std::size_t i = 0; i < batch.collocation.size(); ++i) {
            tasks.push_back({Task::colloc, batch.collocation[i],
                             static_cast<std::uint32_t>(colloc_route[i])});
            task_comp.push_back(-1);
        }
        int ci = 0;
        for (const auto& [tag, rows] : batch.boundary) {
            std::uint32_t gi = 0, k = 0;
            for (const auto& [gtag, group] : groups_) {
                if (gtag == tag) gi = k;
                ++k;
            }
            for (std::uint32_t r : rows) {
                tasks.push_back({Task::boundary, r, gi});
                task_comp.push_back(ci);
            }
            ++ci;
        }
        for (std::uint32_t r : batch.data) {
            tasks.push_back({Task::data, r, 0});
            task_comp.push_back(data_comp);
        }
        for (const auto& [name, rows] : batch.interfaces) {
            std::uint32_t ii = 0, k = 0;
            for (const auto& [iname, ie] : interface_eval_) {
                if (iname == name) ii = k;
                ++k;
            }
            for (std::uint32_t r : rows) {
                tasks.push_back({Task::interface_, r, ii});
                task_comp.push_back(flux_comp);
            }
        }
    }
    // group pointers by index (map order is stable)
    std::vector<const BoundaryGroup*> group_by_index;
    for (const auto& [tag, g] : groups_) group_by_index.push_back(&g);
    std::vector<const InterfaceEval*> itf_by_index;
    for (const auto& [name, ie] : interface_eval_) itf_by_index.push_back(&ie);

    BatchWork work{*this, *model_, *domain_, data_};
    EvalResult result;
    std::vector<double> flat = model_->gather_params();

    auto finish_losses = [&](double res_sum, const std::vector<double>& comp_sums) {
        result.losses.residual = batch.collocation.empty() ? 0.0 : res_sum * res_coeff;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            result.losses.parts[comps[c].key] = comp_sums[c] * comps[c].coeff;
            result.losses.lambdas[comps[c].key] = comps[c].lambda;
        }
        result.losses.compose();
    };

    if (path == EvalPath::serial_reference) {
        // one tape, whole batch, spec-level reductions, single reverse sweep
        Tape tape;
        tape.add_params(flat);
        std::vector<NodeId> res_terms;
        std::vector<std::vector<NodeId>> comp_terms(comps.size());
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            const Task& task = tasks[t];
            BatchWork::Built b;
            switch (task.kind) {
                case Task::colloc: b = work.build_colloc(tape, task.row, task.group); break;
                case Task::boundary: b = work.build_boundary(tape, task.row, *group_by_index[task.group]); break;
                case Task::data: b = work.build_data(tape, task.row); break;
                case Task::interface_: b = work.build_interface(tape, task.row, *itf_by_index[task.group]); break;
            }
            if (task.kind == Task::colloc) {
                res_terms.push_back(b.term);
            } else if (task.kind == Task::interface_) {
                comp_terms[flux_comp].push_back(b.term);
                comp_terms[val_comp].push_back(b.term2);
            } else {
                comp_terms[task_comp[t]].push_back(b.term);
            }
        }

        NodeId res_node = Tape::kZero;
        if (!res_terms.empty()) res_node = residual_loss(tape, res_terms);
        std::vector<NodeId> comp_nodes(comps.size(), Tape::kZero);
        std::vector<std::pair<NodeId, double>> weighted;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            const std::string& key = comps[c].key;
            if (key == "d") {
                comp_nodes[c] = data_loss(tape, comp_terms[c], n_data_channels_);
            } else if (key == "flux") {
                InterfaceLossNodes itf = interface_losses(tape, comp_terms[c], comp_terms[val_comp]);
                comp_nodes[c] = itf.flux;
                comp_nodes[val_comp] = itf.value;
            } else if (key == "val") {
                // produced together with flux
            } else {
                comp_nodes[c] = boundary_loss(tape, comp_terms[c]);
            }
        }
        for (std::size_t c = 0; c < comps.size(); ++c)
            weighted.push_back({comp_nodes[c], comps[c].lambda});
        NodeId total = total_loss(tape, res_node, weighted);
        tape.check_finite(total);

        result.losses.residual = batch.collocation.empty() ? 0.0 : tape.value(res_node);
        for (std::size_t c = 0; c < comps.size(); ++c) {
            result.losses.parts[comps[c].key] = tape.value(comp_nodes[c]);
            result.losses.lambdas[comps[c].key] = comps[c].lambda;
        }
        result.losses.compose();
        // keep the tape's own composition as the reported total: identical
        // summation order to compose(), asserted in tests
        result.losses.total = tape.value(total);

        if (grad_kind == GradKind::combined) {
            result.grad.assign(P, 0.0);
            tape.param_gradient(total, result.grad);
        } else if (grad_kind == GradKind::per_component) {
            std::vector<double> g(P, 0.0);
            if (!res_terms.empty()) {
                tape.param_gradient(res_node, g);
                result.component_grads["r"] = g;
            }
            for (std::size_t c = 0; c < comps.size(); ++c) {
                tape.param_gradient(comp_nodes[c], g);
                result.component_grads[comps[c].key] = g;
            }
        }
        return result;
    }

    // ---- parallel kernel: per-point tapes, fixed-chunk ordered reduction
    const std::size_t n_tasks = tasks.size();
    const std::size_t n_chunks = std::min(kChunks, std::max<std::size_t>(n_tasks, 1));
    const bool want_combined = grad_kind == GradKind::combined;
    const bool want_per_comp = grad_kind == GradKind::per_component;
    const std::size_t n_grad_sets = want_per_comp ? comps.size() + 1 : (want_combined ? 1 : 0);

    std::vector<double> chunk_res(n_chunks, 0.0);
    std::vector<std::vector<double>> chunk_comp(n_chunks, std::vector<double>(comps.size(), 0.0));
    // gradient partials: [chunk][set][P]; set 0 = combined or residual
    std::vector<std::vector<std::vector<double>>> chunk_grad(n_chunks);
    for (std::size_t c = 0; c < n_chunks; ++c)
        chunk_grad[c].assign(n_grad_sets, std::vector<double>(n_grad_sets ? P : 0, 0.0));

    int max_threads = 1;
#ifdef _OPENMP
    max_threads = omp_get_max_threads();
#endif
    while (thread_tapes_.size() < static_cast<std::size_t>(max_threads))
        thread_tapes_.push_back(nullptr);
    std::vector<char> tape_fresh(thread_tapes_.size(), 0);

    std::atomic<bool> fault{false};
    std::string fault_msg;
    std::size_t fault_node = 0;

    auto run_chunk = [&](std::size_t chunk, Tape& tape) {
        const std::size_t lo = chunk * n_tasks / n_chunks;
        const std::size_t hi = (chunk + 1) * n_tasks / n_chunks;
        std::vector<double>& csum = chunk_comp[chunk];
        for (std::size_t t = lo; t < hi && !fault.load(std::memory_order_relaxed); ++t) {
            const Task& task = tasks[t];
            tape.rewind();
            BatchWork::Built b;
            switch (task.kind) {
                case Task::colloc: b = work.build_colloc(tape, task.row, task.group); break;
                case Task::boundary: b = work.build_boundary(tape, task.row, *group_by_index[task.group]); break;
                case Task::data: b = work.build_data(tape, task.row); break;
                case Task::interface_: b = work.build_interface(tape, task.row, *itf_by_index[task.group]); break;
            }
            tape.check_finite(b.term);
            if (task.kind == Task::interface_) tape.check_finite(b.term2);

            const int ci = task_comp[t];
            if (task.kind == Task::colloc)
                chunk_res[chunk] += tape.value(b.term);
            else if (task.kind == Task::interface_) {
                csum[flux_comp] += tape.value(b.term);
                csum[val_comp] += tape.value(b.term2);
            } else {
                csum[ci] += tape.value(b.term);
            }
            if (!n_grad_sets) continue;

            // reverse each squared term; scale into the right partial
            auto accumulate = [&](NodeId node, double factor, std::size_t set) {
                if (factor == 0.0) return;
                tape.reverse(node);
                const double* adj = tape.adjoint_data();
                std::vector<double>& dst = chunk_grad[chunk][set];
                const std::size_t subs[2] = {b.sub1, b.sub2 == b.sub1 ? SIZE_MAX : b.sub2};
                for (std::size_t s : subs) {
                    if (s == SIZE_MAX) continue;
                    const Subdomain& sd = model_->subdomains[s];
                    const std::size_t off = sd.param_offset, cnt = sd.params.total_count();
                    const double* src = adj + tape.param_begin() + off;
                    for (std::size_t i = 0; i < cnt; ++i) dst[off + i] += factor * src[i];
                }
            };
            if (task.kind == Task::colloc) {
                accumulate(b.term, res_coeff, 0);
            } else if (task.kind == Task::interface_) {
                const Comp& cf = comps[flux_comp];
                const Comp& cv = comps[val_comp];
                if (want_combined) {
                    accumulate(b.term, cf.lambda * cf.coeff, 0);
                    accumulate(b.term2, cv.lambda * cv.coeff, 0);
                } else {
                    accumulate(b.term, cf.coeff, 1 + flux_comp);
                    accumulate(b.term2, cv.coeff, 1 + val_comp);
                }
            } else {
                const Comp& cc = comps[ci];
                if (want_combined)
                    accumulate(b.term, cc.lambda * cc.coeff, 0);
                else
                    accumulate(b.term, cc.coeff, 1 + ci);
            }
        }
    };

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
        int tid = 0;
#ifdef _OPENMP
        tid = omp_get_thread_num();
#endif
        try {
            if (!thread_tapes_[tid]) {
                thread_tapes_[tid] = std::make_unique<Tape>();
                thread_tapes_[tid]->add_params(flat);
                tape_fresh[tid] = 1;
            } else if (!tape_fresh[tid]) {
                thread_tapes_[tid]->set_param_values(flat);
                tape_fresh[tid] = 1;
            }
            run_chunk(static_cast<std::size_t>(c), *thread_tapes_[tid]);
        } catch (const NumericFault& e) {
            bool expected = false;
            if (fault.compare_exchange_strong(expected, true)) {
                fault_msg = e.what();
                fault_node = e.node_index;
            }
        } catch (const std::exception& e) {
            bool expected = false;
            if (fault.compare_exchange_strong(expected, true)) {
                fault_msg = e.what();
                fault_node = Tape::npos;
            }
        }
    }
    if (fault.load()) {
        if (fault_node == Tape::npos) throw ValidationError(fault_msg);
        throw NumericFault(fault_node, fault_msg);
    }

    // ordered reduction over chunks
    double res_sum = 0.0;
    std::vector<double> comp_sums(comps.size(), 0.0);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        res_sum += chunk_res[c];
        for (std::size_t k = 0; k < comps.size(); ++k) comp_sums[k] += chunk_comp[c][k];
    }
    finish_losses(res_sum, comp_sums);

    if (want_combined) {
        result.grad.assign(P, 0.0);
        for (std::size_t c = 0; c < n_chunks; ++c)
            for (std::size_t i = 0; i < P; ++i) result.grad[i] += chunk_grad[c][0][i];
    } else if (want_per_comp) {
        std::vector<double> g(P, 0.0);
        if (!batch.collocation.empty()) {
            std::fill(g.begin(), g.end(), 0.0);
            for (std::size_t c = 0; c < n_chunks; ++c)
                for (std::size_t i = 0; i < P; ++i) g[i] += chunk_grad[c][0][i];
            result.component_grads["r"] = g;
        }
        for (std::size_t k = 0; k < comps.size(); ++k) {
            std::fill(g.begin(), g.end(), 0.0);
            for (std::size_t c = 0; c < n_chunks; ++c)
                for (std::size_t i = 0; i < P; ++i) g[i] += chunk_grad[c][1 + k][i];
            result.component_grads[comps[k].key] = g;
        }
    }
    return result;
}

}  // namespace pinnflow
