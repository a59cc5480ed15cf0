#pragma once

#include <string>
#include <vector>

#include "rwlime/evaluation.hpp"
#include "rwlime/pipeline.hpp"

namespace rwlime {

/// "Metric & Mean ± Std & Median [IQR] & Min & Max" with IoU, F1, AUROC rows.
std::string format_summary_table(const EvalReport& report, const std::string& title);

/// Top-`top` configurations of one bucket: "Rank & (k,c) & IoU & F1 & AUROC".
std::string format_sweep_table(const SweepBucket& bucket, std::size_t top = 3);

/// Best configuration per bucket: "M & N & (k,c) & IoU & F1 & AUROC".
std::string format_best_configs(const SweepResult& sweep);

/// Every bucket x grid row, in grid order.
std::string sweep_csv(const SweepResult& sweep);

std::string report_json(const std::vector<EvalReport>& reports);
std::string sweep_json(const SweepResult& sweep);

/// Grouped bars of IoU / F1 / AUROC means per bucket.
std::string svg_bar_plot(const std::vector<EvalReport>& reports, const std::string& title);

/// Column-aligned rendering of `&`-separated cells.
std::string align_rows(const std::vector<std::vector<std::string>>& rows);

}  // namespace rwlime
