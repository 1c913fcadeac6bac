#include "dlr/eval.hpp"

#include <fstream>
#include <map>

namespace dlr {

ChannelGrid baseline_linear(const DmrsGrid& dmrs_noisy, const DmrsPattern& pattern) {
    return linear_interpolate(dmrs_noisy, pattern);
}

NamedEstimator make_linear_estimator(const DmrsPattern& pattern) {
    const InterpPlan plan = make_interp_plan(pattern);
    return {"linear", [pattern, plan](const SampleRecord& rec) {
                return linear_interpolate(rec.dmrs_noisy, pattern, plan);
            }};
}

NamedEstimator make_model_estimator(const DlrModel& model, const std::string& mode) {
    if (mode == "dlr") {
        return {"dlr", [&model](const SampleRecord& rec) {
                    return dlr_forward(model, rec.dmrs_noisy, rec.snr_db);
                }};
    }
    if (mode == "dlr_swapped") {
        return {"dlr_swapped", [&model](const SampleRecord& rec) {
                    return dlr_forward_swapped(model, rec.dmrs_noisy, rec.snr_db);
                }};
    }
    if (mode == "dlr_no_csif") {
        return {"dlr_no_csif", [&model](const SampleRecord& rec) {
                    return dlr_forward(model, rec.dmrs_noisy, rec.snr_db, /*use_csif=*/false);
                }};
    }
    fail(ErrorCode::invalid_argument, "unknown estimator mode: " + mode);
}

EvalReport evaluate(const std::vector<NamedEstimator>& estimators, const Dataset& dataset) {
    require(!dataset.records.empty(), ErrorCode::invalid_argument, "evaluate: empty dataset");
    require(!estimators.empty(), ErrorCode::invalid_argument, "evaluate: no estimators");

    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.records.size(); ++i)
        groups[dataset.records[i].snr_db].push_back(i);

    EvalReport report;
    for (const auto& [snr, idx] : groups) {
        require(!idx.empty(), ErrorCode::invalid_argument, "evaluate: empty SNR group");
        report.snr_db.push_back(snr);
        report.counts.push_back(idx.size());
    }

    const std::size_t n = dataset.records.size();
    for (const NamedEstimator& est : estimators) {
        std::vector<double> nmse_lin(n);
#pragma omp parallel for schedule(dynamic, 4)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const SampleRecord& rec = dataset.records[static_cast<std::size_t>(i)];
            nmse_lin[static_cast<std::size_t>(i)] = nmse(rec.truth, est.fn(rec));
        }
        std::vector<double> cells;
        for (const auto& [snr, idx] : groups) {
            double mean = 0.0;
            for (std::size_t j : idx) mean += nmse_lin[j];
            mean /= static_cast<double>(idx.size());
            cells.push_back(nmse_to_db(mean));
        }
        report.estimator_names.push_back(est.name);
        report.nmse_db.push_back(std::move(cells));
    }
    return report;
}

double mean_nmse_db(const Estimator& fn, const Dataset& dataset,
                    const std::vector<std::size_t>& indices) {
    require(!indices.empty(), ErrorCode::invalid_argument, "mean_nmse_db: no records");
    std::vector<double> nmse_lin(indices.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(indices.size()); ++i) {
        const SampleRecord& rec = dataset.records[indices[static_cast<std::size_t>(i)]];
        nmse_lin[static_cast<std::size_t>(i)] = nmse(rec.truth, fn(rec));
    }
    double mean = 0.0;
    for (double v : nmse_lin) mean += v;
    return nmse_to_db(mean / static_cast<double>(nmse_lin.size()));
}

void write_report_csv(const EvalReport& report, const std::string& path,
                      const std::vector<std::string>& footnotes) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), ErrorCode::io_failure, "report: cannot open " + path);
    out << "snr_db";
    for (const std::string& name : report.estimator_names) out << ',' << name << "_nmse_db";
    out << '\n';
    for (std::size_t r = 0; r < report.snr_db.size(); ++r) {
        out << report.snr_db[r];
        for (std::size_t e = 0; e < report.estimator_names.size(); ++e)
            out << ',' << report.nmse_db[e][r];
        out << '\n';
    }
    if (!report.config_digest.empty()) out << "# config_digest: " << report.config_digest << '\n';
    out << "# counts:";
    for (std::size_t r = 0; r < report.counts.size(); ++r)
        out << ' ' << report.snr_db[r] << "dB=" << report.counts[r];
    out << '\n';
    for (const std::string& note : footnotes) out << "# " << note << '\n';
    require(out.good(), ErrorCode::io_failure, "report: write failed for " + path);
}

} // namespace dlr
