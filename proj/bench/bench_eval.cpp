// Timing harness comparing the serial reference evaluator against the
// chunked parallel path on the same batch, and checking they agree.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "pinnflow/batch.hpp"
#include "pinnflow/runconfig.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pinnflow;
using clock_type = std::chrono::steady_clock;

namespace {

double msec_per_eval(BatchEvaluator& evaluator, const Batch& batch, EvalPath path, int reps) {
    evaluator.evaluate(batch, {}, GradKind::combined, path);  // warm up
    const auto t0 = clock_type::now();
    for (int r = 0; r < reps; ++r) evaluator.evaluate(batch, {}, GradKind::combined, path);
    const auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n_interior = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2000;
    int reps = argc > 2 ? std::atoi(argv[2]) : 5;

    const std::string cfg_text =
        "name = bench\n"
        "dim = 2\n"
        "seed = 7\n"
        "subdomain.main.physics = ns\n"
        "subdomain.main.outputs = u,v,p\n"
        "subdomain.main.hidden = 64,64,64\n"
        "subdomain.main.rho = 1\n"
        "subdomain.main.nu = 0.025\n"
        "boundary.inlet.u = dirichlet:parabola:1\n"
        "boundary.inlet.v = dirichlet:0\n"
        "boundary.wall.u = dirichlet:0\n"
        "boundary.wall.v = dirichlet:0\n";
    RunConfig cfg = parse_run_config_text(cfg_text, "bench");

    ShapeSpec shape;
    shape.kind = ShapeSpec::Kind::channel_obstacle;
    PointCloud domain = sample_domain(shape, n_interior, n_interior / 5, 0, 0.0, cfg.seed);

    Model model = build_model(cfg);
    BatchEvaluator evaluator(model, domain, nullptr, cfg.boundaries);
    Batch batch = evaluator.full_batch();

    EvalResult serial = evaluator.evaluate(batch, {}, GradKind::combined, EvalPath::serial_reference);
    EvalResult par = evaluator.evaluate(batch, {}, GradKind::combined, EvalPath::parallel);
    double max_rel = 0.0;
    for (std::size_t i = 0; i < serial.grad.size(); ++i) {
        const double scale = std::max({std::fabs(serial.grad[i]), std::fabs(par.grad[i]), 1e-12});
        max_rel = std::max(max_rel, std::fabs(serial.grad[i] - par.grad[i]) / scale);
    }

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("points %zu  params %zu  threads %d\n", domain.size(), model.total_params(),
                threads);
    std::printf("gradient agreement: max rel diff %.3e\n", max_rel);
    std::printf("%-18s %10s\n", "path", "ms/eval");
    std::printf("%-18s %10.2f\n", "serial_reference",
                msec_per_eval(evaluator, batch, EvalPath::serial_reference, reps));
    std::printf("%-18s %10.2f\n", "parallel",
                msec_per_eval(evaluator, batch, EvalPath::parallel, reps));
    return max_rel < 1e-9 ? 0 : 1;
}
