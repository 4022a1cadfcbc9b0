#include "idcs/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace idcs {

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isnan(v)) return {};
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Writes through a temporary file so readers never see a partial report.
void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream o(tmp, std::ios::binary);
        if (!o) throw std::runtime_error("cannot write " + path.string());
        o << text;
        if (!o) throw std::runtime_error("write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string metric_header() {
    std::string h = "model";
    for (const auto& m : metric_names()) h += "," + m + "_mean," + m + "_sd";
    return h + ",folds\n";
}

std::string metric_line(const MetricReport& r) {
    std::string line = r.model;
    for (const auto& m : metric_names()) {
        const auto& ms = metric_summary(r, m);
        line += "," + format_double(ms.mean) + "," + format_double(ms.sd);
    }
    return line + "," + std::to_string(r.folds.size()) + "\n";
}

RankTable rank_table(const std::vector<std::string>& models, std::vector<std::string> blocks,
                     const std::vector<std::vector<FoldMetrics>>& values) {
    RankTable t;
    t.models = models;
    t.datasets = std::move(blocks);
    for (const auto& metric : metric_names()) {
        std::vector<std::vector<double>> table;
        for (const auto& row : values) {
            std::vector<double> r;
            for (const auto& m : row) r.push_back(metric_value(m, metric));
            table.push_back(std::move(r));
        }
        const auto fr = friedman_and_ranks(table, higher_is_better(metric));
        t.posthoc[metric] = posthoc_vs_best(fr.avg_ranks, fr.n_blocks);
        t.by_metric[metric] = fr;
    }
    return t;
}

std::string boxplot_svg(const std::string& title, const std::vector<std::pair<std::string, std::vector<double>>>& groups) {
    const double width = 80.0 * static_cast<double>(std::max<std::size_t>(groups.size(), 1)) + 80.0, height = 360.0;
    const double top = 40.0, bottom = 300.0, left = 60.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [_, v] : groups)
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) hi = lo + 1.0;
    auto ypos = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n"
      << "<text x=\"4\" y=\"" << ypos(hi) + 4 << "\" font-size=\"10\">" << format_double(hi) << "</text>\n"
      << "<text x=\"4\" y=\"" << ypos(lo) + 4 << "\" font-size=\"10\">" << format_double(lo) << "</text>\n";
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& [label, v] = groups[g];
        const double cx = left + 40.0 + 80.0 * static_cast<double>(g);
        s << "<text x=\"" << cx - 30 << "\" y=\"" << bottom + 20 << "\" font-size=\"10\">" << label << "</text>\n";
        if (v.empty()) continue;
        const double q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75);
        const double iqr = q3 - q1;
        double wlo = q1, whi = q3;
        for (double x : v) {
            if (x >= q1 - 1.5 * iqr) wlo = std::min(wlo, x);
            if (x <= q3 + 1.5 * iqr) whi = std::max(whi, x);
        }
        s << "<line x1=\"" << cx << "\" y1=\"" << ypos(wlo) << "\" x2=\"" << cx << "\" y2=\"" << ypos(whi)
          << "\" stroke=\"black\"/>\n"
          << "<rect x=\"" << cx - 20 << "\" y=\"" << ypos(q3) << "\" width=\"40\" height=\"" << ypos(q1) - ypos(q3)
          << "\" fill=\"#cfe0f3\" stroke=\"black\"/>\n"
          << "<line x1=\"" << cx - 20 << "\" y1=\"" << ypos(q2) << "\" x2=\"" << cx + 20 << "\" y2=\"" << ypos(q2)
          << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        for (double x : v)
            if (x < wlo || x > whi) s << "<circle cx=\"" << cx << "\" cy=\"" << ypos(x) << "\" r=\"2\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace

void write_manifest(const nlohmann::json& manifest, const fs::path& out_dir) {
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

void write_json(const nlohmann::json& j, const fs::path& path) { write_text(path, j.dump(2) + "\n"); }

void write_cost_ratio_csv(const std::vector<RatioBucket>& buckets, const fs::path& path) {
    std::string s = "lower,upper,count,frequency\n";
    for (const auto& b : buckets)
        s += format_double(b.lower) + "," + format_double(b.upper) + "," + std::to_string(b.count) + "," +
             format_double(b.frequency) + "\n";
    write_text(path, s);
}

void write_performance_reports(const BenchResult& r, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    // One row per configured model; models without a successful fold get gap markers.
    std::string perf = metric_header();
    for (const auto& m : r.models) {
        if (const auto* rep = r.report(m)) {
            perf += metric_line(*rep);
        } else {
            perf += m + std::string(2 * metric_names().size(), ',') + ",0\n";
        }
    }
    perf += metric_line(r.null_report);
    write_text(out_dir / "performance.csv", perf);

    std::string folds = "fold,model";
    for (const auto& m : metric_names()) folds += "," + m;
    folds += ",error\n";
    for (const auto& rec : r.records) {
        folds += std::to_string(rec.fold) + "," + rec.model;
        for (const auto& m : metric_names())
            folds += "," + (rec.metrics ? format_double(metric_value(*rec.metrics, m)) : std::string{});
        folds += "," + csv_field(rec.error) + "\n";
    }
    write_text(out_dir / "fold_metrics.csv", folds);

    nlohmann::json j{{"dataset", r.dataset}, {"models", r.models}, {"null", r.null_report.to_json()}};
    auto reports = nlohmann::json::array();
    for (const auto& rep : r.reports) reports.push_back(rep.to_json());
    j["reports"] = std::move(reports);
    auto records = nlohmann::json::array();
    for (const auto& rec : r.records) {
        nlohmann::json o{{"fold", rec.fold}, {"model", rec.model}, {"hyperparams", rec.hyperparams}};
        o["metrics"] = rec.metrics ? rec.metrics->to_json() : nlohmann::json(nullptr);
        if (!rec.error.empty()) o["error"] = rec.error;
        records.push_back(std::move(o));
    }
    j["records"] = std::move(records);
    j["failures"] = r.failures;
    write_text(out_dir / "performance.json", j.dump(2) + "\n");

    try {
        write_rank_table(rank_folds(r), out_dir / "ranks.csv");
    } catch (const std::exception&) {
        // fewer than two models or no complete fold: no ranking
    }
    for (const auto& rec : r.records)
        if (!rec.bundle.is_null()) write_json(rec.bundle, out_dir / "models" / (rec.model + ".json"));
    if (!r.failures.empty()) {
        std::string s;
        for (const auto& f : r.failures) s += f + "\n";
        write_text(out_dir / "failures.log", s);
    }
    if (!r.manifest.is_null()) write_manifest(r.manifest, out_dir);
}

void write_stability_reports(const StabilityResult& r, const ExperimentConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::string rows = "model,method,pi,instance,cov,sra\n";
    for (const auto& row : r.rows)
        rows += row.model + "," + row.method + "," + format_double(row.pi) + "," + std::to_string(row.instance) + "," +
                opt(row.cov) + "," + opt(row.sra) + "\n";
    write_text(out_dir / "stability.csv", rows);

    // Median and quartiles per (model, method, pi), in row order.
    std::vector<std::tuple<std::string, std::string, double>> keys;
    std::map<std::tuple<std::string, std::string, double>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& row : r.rows) {
        const auto key = std::make_tuple(row.model, row.method, row.pi);
        if (!groups.contains(key)) keys.push_back(key);
        auto& g = groups[key];
        if (row.cov) g.first.push_back(*row.cov);
        if (row.sra) g.second.push_back(*row.sra);
    }
    std::string summary = "model,method,pi,n_cov,cov_q1,cov_median,cov_q3,n_sra,sra_q1,sra_median,sra_q3\n";
    for (const auto& key : keys) {
        const auto& [cov, sra] = groups[key];
        summary += std::get<0>(key) + "," + std::get<1>(key) + "," + format_double(std::get<2>(key)) + "," +
                   std::to_string(cov.size()) + "," + format_double(quantile(cov, 0.25)) + "," +
                   format_double(quantile(cov, 0.5)) + "," + format_double(quantile(cov, 0.75)) + "," +
                   std::to_string(sra.size()) + "," + format_double(quantile(sra, 0.25)) + "," +
                   format_double(quantile(sra, 0.5)) + "," + format_double(quantile(sra, 0.75)) + "\n";
    }
    write_text(out_dir / "stability_summary.csv", summary);

    std::string ks = "metric,method,pi,model_a,model_b,alternative,statistic,p,exact,n_a,n_b\n";
    for (const auto& k : r.ks)
        ks += k.metric + "," + k.method + "," + format_double(k.pi) + "," + k.model_a + "," + k.model_b + "," +
              to_string(k.alternative) + "," + format_double(k.result.statistic) + "," + format_double(k.result.p) + "," +
              (k.result.exact ? "true" : "false") + "," + std::to_string(k.n_a) + "," + std::to_string(k.n_b) + "\n";
    write_text(out_dir / "ks_summary.csv", ks);

    for (const auto& t : r.tensors) t.write(out_dir / (t.model + "_" + t.method + ".imp"));

    for (auto method : cfg.methods) {
        for (const char* metric : {"cov", "sra"}) {
            std::vector<std::pair<std::string, std::vector<double>>> boxes;
            for (const auto& key : keys) {
                if (std::get<1>(key) != to_string(method)) continue;
                const auto& g = groups[key];
                boxes.emplace_back(std::get<0>(key) + " " + format_double(std::get<2>(key)),
                                   std::string_view(metric) == "cov" ? g.first : g.second);
            }
            if (boxes.empty()) continue;
            write_text(out_dir / (std::string(metric) + "_" + to_string(method) + ".svg"),
                       boxplot_svg(std::string(metric) + " (" + to_string(method) + ")", boxes));
        }
    }

    if (!r.failures.empty() || !r.skipped.empty()) {
        std::string s;
        for (const auto& f : r.failures) s += f + "\n";
        for (const auto& f : r.skipped) s += "skipped " + f + "\n";
        write_text(out_dir / "failures.log", s);
    }
    if (!r.manifest.is_null()) write_manifest(r.manifest, out_dir);
}

RankTable rank_benchmarks(const std::vector<BenchResult>& results) {
    if (results.size() < 2) throw std::invalid_argument("rank_benchmarks: need at least two datasets");
    // Models reported on every dataset, in the order of the first one.
    std::vector<std::string> models;
    for (const auto& m : results.front().models) {
        if (std::all_of(results.begin(), results.end(), [&](const BenchResult& r) { return r.report(m) != nullptr; }))
            models.push_back(m);
    }
    if (models.size() < 2) throw std::invalid_argument("rank_benchmarks: fewer than two models common to all datasets");
    std::vector<std::string> names;
    std::vector<std::vector<FoldMetrics>> values;
    for (const auto& r : results) {
        names.push_back(r.dataset);
        std::vector<FoldMetrics> row;
        for (const auto& m : models) {
            const auto* rep = r.report(m);
            FoldMetrics f;
            f.auc = rep->auc.mean;
            f.ap = rep->ap.mean;
            f.brier = rep->brier.mean;
            f.rel_aec = rep->rel_aec.mean;
            f.savings = rep->savings.mean;
            row.push_back(f);
        }
        values.push_back(std::move(row));
    }
    return rank_table(models, std::move(names), values);
}

RankTable rank_folds(const BenchResult& result) {
    std::vector<std::string> models;
    for (const auto& m : result.models)
        if (result.report(m)) models.push_back(m);
    if (models.size() < 2) throw std::invalid_argument("rank_folds: fewer than two models");
    std::map<std::size_t, std::map<std::string, FoldMetrics>> by_fold;
    for (const auto& rec : result.records)
        if (rec.metrics) by_fold[rec.fold][rec.model] = *rec.metrics;
    std::vector<std::string> names;
    std::vector<std::vector<FoldMetrics>> values;
    for (const auto& [fold, per_model] : by_fold) {
        if (!std::all_of(models.begin(), models.end(), [&](const std::string& m) { return per_model.contains(m); }))
            continue;
        names.push_back("fold" + std::to_string(fold));
        std::vector<FoldMetrics> row;
        for (const auto& m : models) row.push_back(per_model.at(m));
        values.push_back(std::move(row));
    }
    if (values.empty()) throw std::invalid_argument("rank_folds: no fold has every model");
    return rank_table(models, std::move(names), values);
}

void write_rank_table(const RankTable& t, const fs::path& path) {
    // Wide table: one row per metric with the average rank of every model,
    // then the Friedman statistic; post-hoc tests go to a sibling file.
    std::string s = "metric";
    for (const auto& m : t.models) s += "," + m;
    s += ",friedman_chi2,friedman_p,blocks\n";
    std::string post = "metric,model,avg_rank,z,p,p_hommel\n";
    for (const auto& metric : metric_names()) {
        const auto it = t.by_metric.find(metric);
        if (it == t.by_metric.end()) continue;
        const auto& fr = it->second;
        s += metric;
        for (double r : fr.avg_ranks) s += "," + format_double(r);
        s += "," + format_double(fr.chi2) + "," + format_double(fr.p) + "," + std::to_string(fr.n_blocks) + "\n";
        const auto ph = t.posthoc.find(metric);
        if (ph == t.posthoc.end()) continue;
        for (const auto& row : ph->second)
            post += metric + "," + t.models[row.model] + "," + format_double(fr.avg_ranks[row.model]) + "," +
                    format_double(row.z) + "," + format_double(row.p) + "," + format_double(row.p_adjusted) + "\n";
    }
    write_text(path, s);
    auto post_path = path;
    post_path.replace_filename(path.stem().string() + "_posthoc.csv");
    write_text(post_path, post);
}

BenchResult read_performance_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const auto j = nlohmann::json::parse(in);
    auto folds_of = [](const nlohmann::json& rep) {
        std::vector<FoldMetrics> out;
        for (const auto& f : rep.at("folds"))
            out.push_back(FoldMetrics{f.at("auc").get<double>(), f.at("ap").get<double>(), f.at("brier").get<double>(),
                                      f.at("rel_aec").get<double>(), f.at("savings").get<double>()});
        return out;
    };
    BenchResult r;
    r.dataset = j.at("dataset").get<std::string>();
    r.models = j.at("models").get<std::vector<std::string>>();
    r.null_report = MetricReport::from_folds("null", folds_of(j.at("null")));
    for (const auto& rep : j.at("reports")) r.reports.push_back(MetricReport::from_folds(rep.at("model"), folds_of(rep)));
    for (const auto& o : j.at("records")) {
        FoldRecord rec;
        rec.fold = o.at("fold").get<std::size_t>();
        rec.model = o.at("model").get<std::string>();
        rec.hyperparams = o.at("hyperparams");
        if (!o.at("metrics").is_null()) {
            const auto& m = o.at("metrics");
            rec.metrics = FoldMetrics{m.at("auc").get<double>(), m.at("ap").get<double>(), m.at("brier").get<double>(),
                                      m.at("rel_aec").get<double>(), m.at("savings").get<double>()};
        }
        rec.error = o.value("error", std::string{});
        r.records.push_back(std::move(rec));
    }
    r.failures = j.value("failures", std::vector<std::string>{});
    return r;
}

}  // namespace idcs
