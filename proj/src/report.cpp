#include "rwlime/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <json.hpp>

namespace rwlime {
namespace {

using json = nlohmann::json;

// Display width in code points (the tables contain "±" and "√").
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string mean_std(const MetricSummary& m) { return fmt::format("{:.3f} ± {:.3f}", m.mean, m.std); }

json summary_json(const MetricSummary& m) {
  return {{"mean", m.mean}, {"std", m.std}, {"median", m.median}, {"q1", m.q1}, {"q3", m.q3},
          {"iqr", m.iqr},   {"min", m.min}, {"max", m.max},       {"count", m.count}};
}

}  // namespace

std::string align_rows(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], display_width(row[c]));
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += " & ";
      line += row[c];
      if (c + 1 < row.size()) line.append(widths[c] - display_width(row[c]), ' ');
    }
    out += line + '\n';
  }
  return out;
}

std::string format_summary_table(const EvalReport& report, const std::string& title) {
  std::vector<std::vector<std::string>> rows = {{"Metric", "Mean ± Std", "Median [IQR]", "Min", "Max"}};
  auto add = [&](const char* name, const MetricSummary& m) {
    if (m.count == 0) {
      rows.push_back({name, "n/a", "n/a", "n/a", "n/a"});
      return;
    }
    rows.push_back({name, mean_std(m), fmt::format("{:.3f} [{:.3f}]", m.median, m.iqr),
                    fmt::format("{:.3f}", m.min), fmt::format("{:.3f}", m.max)});
  };
  add("IoU", report.iou);
  add("F1", report.f1);
  add("AUROC", report.auroc);
  return title + '\n' + align_rows(rows);
}

std::string format_sweep_table(const SweepBucket& bucket, std::size_t top) {
  std::vector<std::vector<std::string>> rows = {{"Rank", "(k,c)", "IoU", "F1", "AUROC"}};
  for (const SweepRow* r : bucket.ranked()) {
    if (r->rank > top) break;
    rows.push_back({std::to_string(r->rank), r->config.label(), mean_std(r->report.iou),
                    mean_std(r->report.f1), mean_std(r->report.auroc)});
  }
  return fmt::format("Sparse-K sweep results for feature size M=({}), N={}\n", bucket.label,
                     bucket.n_instances) +
         align_rows(rows);
}

std::string format_best_configs(const SweepResult& sweep) {
  std::vector<std::vector<std::string>> rows = {{"M", "N", "(k,c)", "IoU", "F1", "AUROC"}};
  for (const auto& b : sweep.buckets) {
    const SweepRow* best = b.ranked().front();
    rows.push_back({b.label, std::to_string(b.n_instances), best->config.label(), mean_std(best->report.iou),
                    mean_std(best->report.f1), mean_std(best->report.auroc)});
  }
  return align_rows(rows);
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out =
      "bucket,n_instances,k_rule,c_rule,rank,iou_mean,iou_std,f1_mean,f1_std,auroc_mean,auroc_std,"
      "mean_scoring_calls\n";
  static const char* k_names[] = {"sqrt(M)", "2sqrt(M)", "4sqrt(M)"};
  for (const auto& b : sweep.buckets) {
    for (const auto& r : b.rows) {
      out += fmt::format("{},{},{},\"{}\",{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.3f}\n", b.label,
                         b.n_instances, k_names[static_cast<int>(r.config.k_rule)], to_string(r.config.c_rule),
                         r.rank, r.report.iou.mean, r.report.iou.std, r.report.f1.mean, r.report.f1.std,
                         r.report.auroc.mean, r.report.auroc.std, r.mean_scoring_calls);
    }
  }
  return out;
}

std::string report_json(const std::vector<EvalReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json per = json::array();
    for (const auto& m : r.per_instance) {
      per.push_back({{"iou", m.iou}, {"f1", m.f1}, {"auroc", m.auroc ? json(*m.auroc) : json(nullptr)}});
    }
    arr.push_back({{"bucket", r.bucket},
                   {"iou", summary_json(r.iou)},
                   {"f1", summary_json(r.f1)},
                   {"auroc", summary_json(r.auroc)},
                   {"per_instance", per}});
  }
  return arr.dump(2) + '\n';
}

std::string sweep_json(const SweepResult& sweep) {
  json arr = json::array();
  for (const auto& b : sweep.buckets) {
    json rows = json::array();
    for (const auto& r : b.rows) {
      rows.push_back({{"config", r.config.label()},
                      {"rank", r.rank},
                      {"iou", summary_json(r.report.iou)},
                      {"f1", summary_json(r.report.f1)},
                      {"auroc", summary_json(r.report.auroc)},
                      {"mean_scoring_calls", r.mean_scoring_calls}});
    }
    arr.push_back({{"bucket", b.label}, {"n_instances", b.n_instances}, {"rows", rows}});
  }
  return json{{"excluded", sweep.excluded}, {"buckets", arr}}.dump(2) + '\n';
}

std::string svg_bar_plot(const std::vector<EvalReport>& reports, const std::string& title) {
  constexpr int kBar = 18;
  constexpr int kGap = 30;
  constexpr int kPlotH = 200;
  constexpr int kLeft = 50;
  constexpr int kTop = 40;
  static const char* colors[] = {"#4c72b0", "#dd8452", "#55a868"};
  static const char* names[] = {"IoU", "F1", "AUROC"};
  const int group_w = 3 * kBar + kGap;
  const int width = kLeft + static_cast<int>(reports.size()) * group_w + 120;
  const int height = kTop + kPlotH + 50;

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<text x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n",
      width, height, kLeft, title);
  for (int tick = 0; tick <= 4; ++tick) {
    const int y = kTop + kPlotH - tick * kPlotH / 4;
    svg += fmt::format(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ddd\"/>\n<text x=\"{}\" y=\"{}\" "
        "text-anchor=\"end\">{:.2f}</text>\n",
        kLeft, y, width - 110, y, kLeft - 5, y + 4, tick * 0.25);
  }
  for (std::size_t g = 0; g < reports.size(); ++g) {
    const auto& r = reports[g];
    const double values[] = {r.iou.mean, r.f1.mean, r.auroc.mean};
    const int x0 = kLeft + 10 + static_cast<int>(g) * group_w;
    for (int s = 0; s < 3; ++s) {
      const int h = static_cast<int>(std::clamp(values[s], 0.0, 1.0) * kPlotH + 0.5);
      svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n", x0 + s * kBar,
                         kTop + kPlotH - h, kBar - 2, h, colors[s]);
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x0 + 3 * kBar / 2,
                       kTop + kPlotH + 16, r.bucket);
  }
  for (int s = 0; s < 3; ++s) {
    const int y = kTop + 10 + s * 18;
    svg += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n<text x=\"{}\" y=\"{}\">{}</text>\n",
        width - 100, y, colors[s], width - 82, y + 10, names[s]);
  }
  return svg + "</svg>\n";
}

}  // namespace rwlime
