#include "pinnflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pinnflow/util.hpp"

namespace pinnflow {

double rms_error(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw ValidationError("metrics: length mismatch");
    if (pred.empty()) throw ValidationError("metrics: empty input");
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        sq += e * e;
    }
    return std::sqrt(sq / static_cast<double>(pred.size()));
}

std::vector<std::pair<double, double>> mae_exceedance(std::span<const double> pred,
                                                      std::span<const double> truth,
                                                      std::span<const double> thresholds) {
    if (pred.size() != truth.size()) throw ValidationError("metrics: length mismatch");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (thresholds[i] < thresholds[i - 1])
            throw ValidationError("metrics: thresholds must be ascending");
    std::vector<std::pair<double, double>> curve;
    curve.reserve(thresholds.size());
    for (double t : thresholds) {
        std::size_t above = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (std::fabs(pred[i] - truth[i]) > t) ++above;
        curve.emplace_back(t, static_cast<double>(above) / static_cast<double>(pred.size()));
    }
    return curve;
}

namespace {

// rows the model can predict, with their subdomain; boundary/interface rows
// route like interior ones so truth columns on walls still count
std::size_t row_subdomain(const Model& model, const PointCloud& cloud, std::size_t i) {
    const std::string& tag = cloud.tags[i];
    if (auto b = tag_boundary_name(tag)) return model.route_boundary(*b);
    if (auto f = tag_interface_name(tag)) return model.subdomain_index(model.interface_by_name(*f).region1);
    return model.route_tag(tag);
}

std::vector<double> eval_extra(const Model& model, std::size_t sub, std::span<const double> x,
                               std::span<const double> extra) {
    const Subdomain& sd = model.subdomains[sub];
    const std::size_t need = static_cast<std::size_t>(sd.config.input_dim);
    std::vector<double> xin(x.begin(), x.end());
    xin.insert(xin.end(), extra.begin(), extra.end());
    if (xin.size() != need)
        throw ValidationError("metrics: point plus extras has " + std::to_string(xin.size()) +
                              " inputs, network expects " + std::to_string(need));
    return model_eval(model, sub, xin);
}

}  // namespace

MetricReport compute_metrics(const Model& model, const PointCloud& cloud,
                             std::span<const double> thresholds) {
    cloud.validate();
    MetricReport report;
    report.n_points = cloud.size();
    if (cloud.size() == 0) throw ValidationError("metrics: empty cloud");

    // union of output names over subdomains, in output order of first appearance
    std::vector<std::string> fields;
    for (const Subdomain& sd : model.subdomains)
        for (const std::string& name : sd.config.output_names)
            if (cloud.has_col(name) && std::find(fields.begin(), fields.end(), name) == fields.end())
                fields.push_back(name);
    if (fields.empty()) throw ValidationError("metrics: cloud shares no columns with model outputs");

    // route + predict once per row
    std::vector<std::vector<double>> pred(cloud.size());
    std::vector<std::size_t> subs(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        subs[i] = row_subdomain(model, cloud, i);
        pred[i] = model_eval(model, subs[i], cloud.point(i));
    }

    auto out_index = [&](std::size_t sub, const std::string& name) {
        const auto& names = model.subdomains[sub].config.output_names;
        for (std::size_t o = 0; o < names.size(); ++o)
            if (names[o] == name) return static_cast<int>(o);
        return -1;
    };

    for (const std::string& name : fields) {
        std::vector<double> p, t;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            int o = out_index(subs[i], name);
            if (o < 0) continue;
            p.push_back(pred[i][static_cast<std::size_t>(o)]);
            t.push_back(cloud.col(name, i));
        }
        if (p.empty()) continue;
        FieldMetrics fm;
        fm.field = name;
        fm.mse = rms_error(p, t);
        fm.pred_min = *std::min_element(p.begin(), p.end());
        fm.pred_max = *std::max_element(p.begin(), p.end());
        fm.truth_min = *std::min_element(t.begin(), t.end());
        fm.truth_max = *std::max_element(t.begin(), t.end());
        fm.exceedance = mae_exceedance(p, t, thresholds);
        report.fields.push_back(std::move(fm));
    }

    // velocity as a vector: root-mean of |u_pred - u_truth|^2
    const char* vel[3] = {"u", "v", "w"};
    std::vector<std::string> vel_fields;
    for (int k = 0; k < model.spatial_dim; ++k)
        if (cloud.has_col(vel[k])) vel_fields.push_back(vel[k]);
    if (!vel_fields.empty()) {
        double sq = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            bool ok = true;
            double acc = 0.0;
            for (const std::string& name : vel_fields) {
                int o = out_index(subs[i], name);
                if (o < 0) {
                    ok = false;
                    break;
                }
                const double e = pred[i][static_cast<std::size_t>(o)] - cloud.col(name, i);
                acc += e * e;
            }
            if (ok) {
                sq += acc;
                ++n;
            }
        }
        if (n > 0) {
            report.has_velocity = true;
            report.velocity_mse = std::sqrt(sq / static_cast<double>(n));
        }
    }
    return report;
}

void save_metrics_csv(const std::string& path, const MetricReport& report) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "field,mse,pred_min,pred_max,truth_min,truth_max\n";
    for (const FieldMetrics& fm : report.fields)
        f << fm.field << ',' << fmt_g17(fm.mse) << ',' << fmt_g17(fm.pred_min) << ','
          << fmt_g17(fm.pred_max) << ',' << fmt_g17(fm.truth_min) << ',' << fmt_g17(fm.truth_max)
          << '\n';
    if (report.has_velocity)
        f << "velocity," << fmt_g17(report.velocity_mse) << ",,,,\n";
    f << "\nfield,threshold,fraction_above\n";
    for (const FieldMetrics& fm : report.fields)
        for (const auto& [t, frac] : fm.exceedance)
            f << fm.field << ',' << fmt_g17(t) << ',' << fmt_g17(frac) << '\n';
    if (!f.good()) throw IoError("short write on " + path);
}

void save_metrics_summary(const std::string& path, const MetricReport& report) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "evaluation over " << report.n_points << " points\n\n";
    for (const FieldMetrics& fm : report.fields) {
        f << fm.field << ": mse " << fmt_g17(fm.mse) << "  pred [" << fmt_g17(fm.pred_min) << ", "
          << fmt_g17(fm.pred_max) << "]  truth [" << fmt_g17(fm.truth_min) << ", "
          << fmt_g17(fm.truth_max) << "]\n";
    }
    if (report.has_velocity)
        f << "velocity magnitude error (vector): mse " << fmt_g17(report.velocity_mse) << '\n';
    if (!f.good()) throw IoError("short write on " + path);
}

ProbeResult line_probe(const Model& model, std::size_t sub, std::span<const double> start,
                       std::span<const double> end, std::size_t n) {
    if (sub >= model.subdomains.size()) throw ValidationError("probe: subdomain out of range");
    if (n < 2) throw ValidationError("probe: need at least 2 samples");
    if (start.size() != end.size() ||
        start.size() != static_cast<std::size_t>(model.spatial_dim))
        throw ValidationError("probe: endpoint dimension mismatch");
    double len2 = 0.0;
    for (std::size_t k = 0; k < start.size(); ++k) {
        const double d = end[k] - start[k];
        len2 += d * d;
    }
    if (len2 == 0.0) throw ValidationError("probe: degenerate segment");

    ProbeResult probe;
    probe.dim = model.spatial_dim;
    probe.output_names = model.subdomains[sub].config.output_names;
    std::vector<double> x(start.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = start[k] + s * (end[k] - start[k]);
        probe.xs.insert(probe.xs.end(), x.begin(), x.end());
        std::vector<double> out = model_eval(model, sub, x);
        probe.values.insert(probe.values.end(), out.begin(), out.end());
    }
    return probe;
}

void save_probe_csv(const std::string& path, const ProbeResult& probe) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    const char* coords[3] = {"x", "y", "z"};
    for (int k = 0; k < probe.dim; ++k) f << (k ? "," : "") << coords[k];
    for (const std::string& name : probe.output_names) f << ',' << name;
    f << '\n';
    const std::size_t n = probe.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < probe.dim; ++k)
            f << (k ? "," : "") << fmt_g17(probe.xs[i * probe.dim + k]);
        for (std::size_t o = 0; o < probe.output_names.size(); ++o)
            f << ',' << fmt_g17(probe.values[i * probe.output_names.size() + o]);
        f << '\n';
    }
    if (!f.good()) throw IoError("short write on " + path);
}

double mean_boundary_pressure(const Model& model, const PointCloud& cloud,
                              const std::string& boundary_tag, std::span<const double> extra) {
    const std::size_t sub = model.route_boundary(boundary_tag);
    int p_out = -1;
    const auto& names = model.subdomains[sub].config.output_names;
    for (std::size_t o = 0; o < names.size(); ++o)
        if (names[o] == "p") p_out = static_cast<int>(o);
    if (p_out < 0) throw ValidationError("metrics: model has no pressure output");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto b = tag_boundary_name(cloud.tags[i]);
        if (!b || *b != boundary_tag) continue;
        sum += eval_extra(model, sub, cloud.point(i), extra)[static_cast<std::size_t>(p_out)];
        ++n;
    }
    if (n == 0) throw ValidationError("metrics: no points tagged boundary:" + boundary_tag);
    return sum / static_cast<double>(n);
}

double max_region_temperature(const Model& model, const PointCloud& cloud,
                              const std::string& region, std::span<const double> extra) {
    double best = -1e300;
    std::size_t n = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const std::string& tag = cloud.tags[i];
        if (!tag_is_interior(tag) && !tag_is_data(tag)) continue;
        if (!region.empty() && tag_region(tag) != region) continue;
        const std::size_t sub = model.route_tag(tag);
        int t_out = -1;
        const auto& names = model.subdomains[sub].config.output_names;
        for (std::size_t o = 0; o < names.size(); ++o)
            if (names[o] == "T") t_out = static_cast<int>(o);
        if (t_out < 0) continue;
        best = std::max(best, eval_extra(model, sub, cloud.point(i), extra)[static_cast<std::size_t>(t_out)]);
        ++n;
    }
    if (n == 0)
        throw ValidationError("metrics: no temperature points in region '" + region + "'");
    return best;
}

}  // namespace pinnflow
