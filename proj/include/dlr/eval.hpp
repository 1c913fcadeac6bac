#ifndef DLR_EVAL_HPP
#define DLR_EVAL_HPP

#include <functional>
#include <string>
#include <vector>

#include "dlr/dataset.hpp"
#include "dlr/pipeline.hpp"

namespace dlr {

using Estimator = std::function<ChannelGrid(const SampleRecord&)>;

struct NamedEstimator {
    std::string name;
    Estimator fn;
};

// Per-SNR mean NMSE table. Cells hold dB of the arithmetic mean of
// linear-scale NMSEs, not the mean of dBs.
struct EvalReport {
    std::vector<double> snr_db;                // ascending group keys
    std::vector<std::size_t> counts;           // records per group
    std::vector<std::string> estimator_names;
    std::vector<std::vector<double>> nmse_db;  // [estimator][snr group]
    std::string config_digest;
};

// Plain linear interpolation of the noisy pilots; the ablation baseline.
ChannelGrid baseline_linear(const DmrsGrid& dmrs_noisy, const DmrsPattern& pattern);

NamedEstimator make_linear_estimator(const DmrsPattern& pattern);
// mode: "dlr", "dlr_swapped" (stage order swapped, same weights),
// "dlr_no_csif" (CSIF inputs zeroed at inference).
NamedEstimator make_model_estimator(const DlrModel& model, const std::string& mode);

// Records are evaluated as a parallel map; the reduction order is fixed.
EvalReport evaluate(const std::vector<NamedEstimator>& estimators, const Dataset& dataset);

// Mean linear NMSE (in dB) of an estimator over an index subset.
double mean_nmse_db(const Estimator& fn, const Dataset& dataset,
                    const std::vector<std::size_t>& indices);

// CSV: header `snr_db,<name>_nmse_db,...`, one row per SNR group, `#` footers.
void write_report_csv(const EvalReport& report, const std::string& path,
                      const std::vector<std::string>& footnotes);

} // namespace dlr

#endif
