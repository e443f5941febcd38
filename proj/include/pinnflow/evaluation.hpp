#pragma once

#include <string>
#include <vector>

#include "pinnflow/model.hpp"

namespace pinnflow {

// Root-mean-square error: sqrt(sum (a-b)^2 / N). The reports keep the
// conventional "mse" column label even though the root is taken.
double rms_error(std::span<const double> pred, std::span<const double> truth);

// (threshold, fraction of points with |pred-truth| > threshold) per entry;
// thresholds must be ascending, the curve is then nonincreasing.
std::vector<std::pair<double, double>> mae_exceedance(std::span<const double> pred,
                                                      std::span<const double> truth,
                                                      std::span<const double> thresholds);

struct FieldMetrics {
    std::string field;
    double mse = 0.0;
    double pred_min = 0.0, pred_max = 0.0;
    double truth_min = 0.0, truth_max = 0.0;
    std::vector<std::pair<double, double>> exceedance;
};

// Per-field errors over every cloud row whose subdomain predicts the field
// and whose truth column is present. velocity_mse is the root-mean of the
// squared velocity-difference magnitude |u_pred - u_truth|^2 — reported
// alongside the per-component values since both normalizations are in
// common use.
struct MetricReport {
    std::size_t n_points = 0;
    std::vector<FieldMetrics> fields;
    bool has_velocity = false;
    double velocity_mse = 0.0;
};

MetricReport compute_metrics(const Model& model, const PointCloud& cloud,
                             std::span<const double> thresholds);

void save_metrics_csv(const std::string& path, const MetricReport& report);
void save_metrics_summary(const std::string& path, const MetricReport& report);

// n model evaluations equally spaced on [start, end] (endpoints included).
struct ProbeResult {
    std::vector<std::string> output_names;
    std::vector<double> xs;      // n x dim
    std::vector<double> values;  // n x n_outputs
    int dim = 0;

    std::size_t size() const { return output_names.empty() ? 0 : values.size() / output_names.size(); }
};

ProbeResult line_probe(const Model& model, std::size_t sub, std::span<const double> start,
                       std::span<const double> end, std::size_t n);

void save_probe_csv(const std::string& path, const ProbeResult& probe);

// Scalar summaries used as optimization constraints: mean predicted pressure
// over one boundary tag ("pressure drop" with the outlet pinned to zero) and
// the maximum predicted temperature over a region's points. `extra` fills the
// network inputs beyond the spatial coordinates (surrogate design
// parameters); leave empty for plain models.
double mean_boundary_pressure(const Model& model, const PointCloud& cloud,
                              const std::string& boundary_tag,
                              std::span<const double> extra = {});
double max_region_temperature(const Model& model, const PointCloud& cloud,
                              const std::string& region, std::span<const double> extra = {});

}  // namespace pinnflow
