#include "pinnflow/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "pinnflow/rng.hpp"
#include "pinnflow/util.hpp"

namespace pinnflow {

bool adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               double lr) {
    if (params.size() != grad.size()) throw ValidationError("adam: size mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) return false;
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw ValidationError("adam: stale moment buffers");
    ++state.t;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    return true;
}

double clip_global_norm(std::span<double> grad, double max_norm) {
    if (!(max_norm > 0.0)) throw ValidationError("clip: max_norm must be positive");
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grad) g *= scale;
    }
    return norm;
}

void TrainConfig::validate() const {
    if (phases.empty()) throw ValidationError("train: no phases configured");
    if (!(lr0 > 0.0)) throw ValidationError("train: lr0 must be positive");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
        throw ValidationError("train: lr_decay must be in (0, 1]");
    if (lr_decay_every == 0) throw ValidationError("train: lr_decay_every must be positive");
    if (!(batch_fraction > 0.0 && batch_fraction <= 1.0))
        throw ValidationError("train: batch_fraction must be in (0, 1]");
    if (!(clip_norm > 0.0)) throw ValidationError("train: clip_norm must be positive");
    if (resample_every == 0) throw ValidationError("train: resample_every must be positive");
    if (anneal_every == 0) throw ValidationError("train: anneal_every must be positive");
    if (!(anneal_alpha > 0.0 && anneal_alpha < 1.0))
        throw ValidationError("train: anneal alpha must be in (0, 1)");
    // a data-only warm phase must come before any physics phase
    bool physics_seen = false;
    for (const TrainPhase& p : phases) {
        if (p.steps == 0) throw ValidationError("train: phase '" + p.name + "' has zero steps");
        if (!p.use_physics && !p.use_data)
            throw ValidationError("train: phase '" + p.name + "' enables no loss at all");
        if (p.use_physics) physics_seen = true;
        if (!p.use_physics && physics_seen)
            throw ValidationError("train: data-only phase '" + p.name +
                                  "' must precede physics phases");
    }
}

std::vector<TrainPhase> default_phases(std::size_t total_steps, double warm_fraction,
                                       bool has_data) {
    if (total_steps == 0) throw ValidationError("train: zero total steps");
    if (!(warm_fraction >= 0.0 && warm_fraction < 1.0))
        throw ValidationError("train: warm fraction must be in [0, 1)");
    std::vector<TrainPhase> out;
    std::size_t warm = has_data ? static_cast<std::size_t>(std::lround(
                                      warm_fraction * static_cast<double>(total_steps)))
                                : 0;
    if (warm > 0) out.push_back({"warm", false, true, warm});
    if (total_steps > warm) out.push_back({"hybrid", true, has_data, total_steps - warm});
    return out;
}

std::size_t minibatch_size(std::size_t n, double fraction) {
    if (n == 0) return 0;
    std::size_t want = static_cast<std::size_t>(
        std::lround(fraction * static_cast<double>(n)));
    return std::min(n, std::max<std::size_t>(32, want));
}

namespace {

// k sorted picks without replacement
std::vector<std::uint32_t> pick(const std::vector<std::uint32_t>& pool, std::size_t k, Rng& rng) {
    if (k >= pool.size()) return pool;
    std::vector<std::uint32_t> scratch = pool;
    for (std::size_t i = 0; i < k; ++i)
        std::swap(scratch[i], scratch[i + rng.below(scratch.size() - i)]);
    scratch.resize(k);
    std::sort(scratch.begin(), scratch.end());
    return scratch;
}

Batch make_minibatch(const Batch& full, const TrainPhase& phase, double fraction, Rng& rng) {
    Batch b;
    if (phase.use_physics) {
        b.collocation = pick(full.collocation, minibatch_size(full.collocation.size(), fraction), rng);
        for (const auto& [tag, rows] : full.boundary)
            b.boundary[tag] = pick(rows, minibatch_size(rows.size(), fraction), rng);
        for (const auto& [name, rows] : full.interfaces)
            b.interfaces[name] = pick(rows, minibatch_size(rows.size(), fraction), rng);
    }
    if (phase.use_data)
        b.data = pick(full.data, minibatch_size(full.data.size(), fraction), rng);
    return b;
}

}  // namespace

void save_history_csv(const std::string& path, const TrainHistory& history) {
    std::set<std::string> keys;
    bool any_residual = false;
    for (const TrainRecord& r : history.records) {
        if (r.has_residual) any_residual = true;
        for (const auto& [k, v] : r.losses) keys.insert(k);
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "step";
    if (any_residual) f << ",L_r";
    for (const std::string& k : keys) f << ",loss_" << k;
    for (const std::string& k : keys) f << ",lambda_" << k;
    f << ",lr,grad_norm\n";
    for (const TrainRecord& r : history.records) {
        f << r.step;
        if (any_residual) {
            f << ',';
            if (r.has_residual) f << fmt_g17(r.residual);
        }
        for (const std::string& k : keys) {
            f << ',';
            auto it = r.losses.find(k);
            if (it != r.losses.end()) f << fmt_g17(it->second);
        }
        for (const std::string& k : keys) {
            f << ',';
            auto it = r.lambdas.find(k);
            if (it != r.lambdas.end()) f << fmt_g17(it->second);
        }
        f << ',' << fmt_g17(r.lr) << ',' << fmt_g17(r.grad_norm) << '\n';
    }
    if (!f.good()) throw IoError("short write on " + path);
}

TrainHistory train(BatchEvaluator& evaluator, Model& model, const TrainConfig& cfg) {
    cfg.validate();
    const Batch full = evaluator.full_batch();
    for (const TrainPhase& p : cfg.phases)
        if (p.use_data && full.data.empty())
            throw ValidationError("train: phase '" + p.name + "' needs data points");

    AnnealingState anneal;
    anneal.alpha = cfg.anneal_alpha;
    anneal.default_threshold = cfg.anneal_threshold;
    anneal.thresholds = cfg.anneal_thresholds;

    TrainHistory history;
    std::vector<double> params = model.gather_params();
    std::vector<double> last_good = params;
    AdamState adam;
    std::size_t global_step = 0;  // completed optimizer steps
    std::uint64_t resample_counter = 0;
    Batch batch;

    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    auto restore_and_fail = [&](const std::string& why) {
        model.scatter_params(last_good);
        if (!cfg.checkpoint_dir.empty())
            save_model_checkpoint(cfg.checkpoint_dir + "/last_good.ckpt", model);
        throw DivergenceError(why);
    };

    for (std::size_t pi = 0; pi < cfg.phases.size(); ++pi) {
        const TrainPhase& phase = cfg.phases[pi];
        history.events.push_back("phase " + phase.name + " start at step " +
                                 std::to_string(global_step + 1));
        bool need_batch = true;
        for (std::size_t s = 0; s < phase.steps; ++s, ++global_step) {
            if (need_batch || global_step % cfg.resample_every == 0) {
                Rng rng(mix_seed(cfg.seed, 0x4d494e49u + resample_counter++));
                batch = make_minibatch(full, phase, cfg.batch_fraction, rng);
                if (batch.empty())
                    throw ValidationError("train: phase '" + phase.name + "' produced an empty batch");
                need_batch = false;
            }
            const double lr =
                cfg.lr0 * std::pow(cfg.lr_decay,
                                   static_cast<double>(global_step / cfg.lr_decay_every));

            const bool has_weighted =
                !batch.boundary.empty() || !batch.data.empty() || !batch.interfaces.empty();
            const bool anneal_now = phase.use_physics && !batch.collocation.empty() &&
                                    has_weighted && (global_step % cfg.anneal_every == 0);
            TrainRecord rec;
            rec.step = global_step + 1;
            rec.lr = lr;

            std::vector<double> grad;
            if (anneal_now) {
                EvalResult r = evaluator.evaluate(batch, anneal.lambdas,
                                                  GradKind::per_component, EvalPath::parallel);
                annealing_update(anneal, r.losses.parts, r.component_grads);
                // combined gradient under the refreshed weights
                grad.assign(params.size(), 0.0);
                for (const auto& [key, g] : r.component_grads) {
                    const double w = key == "r" ? 1.0 : anneal.lambda(key);
                    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * g[i];
                }
                rec.has_residual = !batch.collocation.empty();
                rec.residual = r.losses.residual;
                rec.losses = r.losses.parts;
                rec.lambdas = anneal.lambdas;
                rec.total = r.losses.residual;
                for (const auto& [k, v] : r.losses.parts) rec.total += anneal.lambda(k) * v;
            } else {
                EvalResult r = evaluator.evaluate(batch, anneal.lambdas, GradKind::combined,
                                                  EvalPath::parallel);
                grad = std::move(r.grad);
                rec.has_residual = phase.use_physics && !batch.collocation.empty();
                rec.residual = r.losses.residual;
                rec.losses = r.losses.parts;
                rec.lambdas = r.losses.lambdas;
                rec.total = r.losses.total;
            }

            if (!std::isfinite(rec.total) || rec.total > cfg.divergence_threshold)
                restore_and_fail("training diverged at step " + std::to_string(rec.step) +
                                 " (total loss " + fmt_g17(rec.total) + ")");

            rec.grad_norm = clip_global_norm(grad, cfg.clip_norm);
            if (!adam_step(params, grad, adam, lr)) {
                history.events.push_back("step " + std::to_string(rec.step) +
                                         " skipped: non-finite gradient");
                continue;
            }
            model.scatter_params(params);
            last_good = params;
            rec.wall_seconds = wall();
            history.records.push_back(rec);
        }
        history.events.push_back("phase " + phase.name + " done at step " +
                                 std::to_string(global_step));
        if (!cfg.checkpoint_dir.empty())
            save_model_checkpoint(cfg.checkpoint_dir + "/phase_" + std::to_string(pi + 1) + "_" +
                                      phase.name + ".ckpt",
                                  model);
    }
    return history;
}

}  // namespace pinnflow
