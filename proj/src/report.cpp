// Copyright 2026 The mtop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>

#include "mtop/commands.hpp"
#include "mtop/error.hpp"

namespace mtop {
namespace {

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string real_or_na(double x) { return std::isfinite(x) ? format_real(x) : "NA"; }

double parse_or_nan(const std::string& s) {
  if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw IoError("not a number: '" + s + "'");
  }
}

const char* kReportHeader = "experiment_id,task_family,routing_mode,success_rate,successes,trials,seed,wall_clock";
const char* kLossHeader = "step,action_loss,router_loss,total_loss,router_accuracy";

std::vector<std::string> split_header(const char* h) {
  std::vector<std::string> out;
  std::string cur;
  for (const char* p = h; *p; ++p) {
    if (*p == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += *p;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string experiment_id(const RunConfig& cfg) {
  if (!cfg.get("experiment").empty()) return cfg.get("experiment");
  return cfg.get("arch") + "-s" + cfg.get("seed");
}

std::vector<ReportRow> report_rows(const RunConfig& cfg, RoutingMode mode,
                                   const std::vector<FamilyResult>& results, bool with_average,
                                   double wall_clock) {
  std::vector<ReportRow> rows;
  const double wc = cfg.flag("timing") ? wall_clock : -1.0;
  std::size_t s = 0;
  std::size_t n = 0;
  for (const auto& r : results) {
    ReportRow row;
    row.experiment = experiment_id(cfg);
    row.family = interaction_name(r.family);
    row.mode = routing_mode_name(mode);
    row.successes = r.successes;
    row.trials = r.trials;
    row.success_rate = static_cast<double>(r.successes) / static_cast<double>(r.trials);
    row.seed = cfg.count("seed");
    row.wall_clock = wc;
    rows.push_back(row);
    s += r.successes;
    n += r.trials;
  }
  if (with_average && n > 0) {
    ReportRow avg = rows.front();
    avg.family = "Average";
    avg.successes = s;
    avg.trials = n;
    avg.success_rate = static_cast<double>(s) / static_cast<double>(n);
    rows.push_back(avg);
  }
  return rows;
}

std::string report_csv(const RunConfig& cfg, const std::vector<ReportRow>& rows) {
  std::string out = config_comment_block(cfg, "mtop-report/" + std::to_string(kArtifactVersion));
  out += std::string(kReportHeader) + "\n";
  for (const auto& r : rows)
    out += csv_escape(r.experiment) + "," + r.family + "," + r.mode + "," +
           format_real(r.success_rate) + "," + std::to_string(r.successes) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.seed) + "," +
           (r.wall_clock < 0.0 ? std::string("NA") : fixed(r.wall_clock, 3)) + "\n";
  return out;
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0] != split_header(kReportHeader))
    throw IoError(path + ": not a report CSV");
  std::vector<ReportRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& c = rows[i];
    if (c.size() != 8) throw IoError(path + ": malformed row " + std::to_string(i));
    ReportRow r;
    r.experiment = c[0];
    r.family = c[1];
    r.mode = c[2];
    r.success_rate = parse_or_nan(c[3]);
    r.successes = static_cast<std::size_t>(parse_or_nan(c[4]));
    r.trials = static_cast<std::size_t>(parse_or_nan(c[5]));
    r.seed = static_cast<std::uint64_t>(parse_or_nan(c[6]));
    r.wall_clock = c[7] == "NA" ? -1.0 : parse_or_nan(c[7]);
    out.push_back(r);
  }
  return out;
}

std::string ablation_markdown(const std::vector<ReportRow>& rows) {
  const std::vector<std::string> modes{"Random", "Reversal", "Original"};
  std::vector<std::string> families;
  std::map<std::pair<std::string, std::string>, double> rate;
  for (const auto& r : rows) {
    if (std::find(families.begin(), families.end(), r.family) == families.end())
      families.push_back(r.family);
    rate[{r.family, r.mode}] = r.success_rate;
  }
  std::string md = "| Task family | Random | Reversal | Original |\n|---|---|---|---|\n";
  for (const auto& f : families) {
    md += "| " + f + " |";
    for (const auto& m : modes) {
      const auto it = rate.find({f, m});
      md += " " + (it == rate.end() ? std::string("-") : fixed(100.0 * it->second, 2) + "%") + " |";
    }
    md += "\n";
  }
  return md;
}

std::string loss_csv(const RunConfig& cfg, const std::vector<LossRow>& rows) {
  std::string out = config_comment_block(cfg, "mtop-loss/" + std::to_string(kArtifactVersion));
  out += std::string(kLossHeader) + "\n";
  for (const auto& r : rows)
    out += std::to_string(r.step) + "," + format_real(r.loss.action) + "," +
           format_real(r.loss.router) + "," + format_real(r.loss.total) + "," +
           real_or_na(r.loss.router_accuracy) + "\n";
  return out;
}

std::vector<LossRow> read_loss_csv(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0] != split_header(kLossHeader)) throw IoError(path + ": not a loss CSV");
  std::vector<LossRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& c = rows[i];
    if (c.size() != 5) throw IoError(path + ": malformed row " + std::to_string(i));
    LossRow r;
    r.step = static_cast<std::uint64_t>(parse_or_nan(c[0]));
    r.loss.action = parse_or_nan(c[1]);
    r.loss.router = parse_or_nan(c[2]);
    r.loss.total = parse_or_nan(c[3]);
    r.loss.router_accuracy = parse_or_nan(c[4]);
    out.push_back(r);
  }
  return out;
}

std::string loss_svg(const std::vector<LossRow>& rows) {
  const double W = 640, H = 360, L = 60, R = 20, T = 20, B = 40;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::uint64_t max_step = 1;
  for (const auto& r : rows) {
    for (double v : {r.loss.action, r.loss.total})
      if (v > 0.0 && std::isfinite(v)) {
        lo = std::min(lo, std::log10(v));
        hi = std::max(hi, std::log10(v));
      }
    max_step = std::max(max_step, r.step);
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (hi - lo < 1e-9) hi = lo + 1.0;
  auto px = [&](std::uint64_t s) { return L + (W - L - R) * static_cast<double>(s) / static_cast<double>(max_step); };
  auto py = [&](double v) { return T + (H - T - B) * (hi - std::log10(v)) / (hi - lo); };
  auto line = [&](double LossReport::*field, const char* colour) {
    std::string pts;
    const std::size_t stride = std::max<std::size_t>(1, rows.size() / 800);
    for (std::size_t i = 0; i < rows.size(); i += stride) {
      const double v = rows[i].loss.*field;
      if (!(v > 0.0 && std::isfinite(v))) continue;
      pts += fixed(px(rows[i].step), 2) + "," + fixed(py(v), 2) + " ";
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
  };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"360\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"640\" height=\"360\" fill=\"white\"/>\n";
  svg += "<line x1=\"60\" y1=\"320\" x2=\"620\" y2=\"320\" stroke=\"black\"/>\n";
  svg += "<line x1=\"60\" y1=\"20\" x2=\"60\" y2=\"320\" stroke=\"black\"/>\n";
  for (int k = static_cast<int>(std::ceil(lo)); k <= static_cast<int>(std::floor(hi)); ++k) {
    const double y = py(std::pow(10.0, k));
    svg += "<text x=\"8\" y=\"" + fixed(y + 4, 2) + "\">1e" + std::to_string(k) + "</text>\n";
  }
  svg += "<text x=\"600\" y=\"345\" text-anchor=\"end\">step " + std::to_string(max_step) + "</text>\n";
  svg += line(&LossReport::total, "#c0392b");
  svg += line(&LossReport::action, "#2c3e50");
  svg += "<text x=\"480\" y=\"34\" fill=\"#c0392b\">total loss</text>\n";
  svg += "<text x=\"480\" y=\"48\" fill=\"#2c3e50\">action loss</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::string cmd_report(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const std::string loss_path = cfg.path("loss_path");
  const std::string eval_path = cfg.path("eval_path");
  const std::string ablate_path = cfg.path("ablate_path");
  const std::string out_path = cfg.path("report_path");
  const bool have_loss = fs::exists(loss_path);
  const bool have_eval = fs::exists(eval_path);
  const bool have_ablate = fs::exists(ablate_path);
  if (!have_loss && !have_eval && !have_ablate)
    throw IoError("nothing to report: none of " + loss_path + ", " + eval_path + ", " +
                  ablate_path + " exists");

  std::string md = "<!--\n" + config_comment_block(cfg, "mtop-summary/" + std::to_string(kArtifactVersion)) +
                   "-->\n\n# Run report: " + experiment_id(cfg) + "\n\n";
  if (have_loss) {
    const auto rows = read_loss_csv(loss_path);
    md += "## Training\n\n";
    if (rows.empty()) {
      md += "Loss log is empty.\n\n";
    } else {
      double best = rows.front().loss.total;
      for (const auto& r : rows) best = std::min(best, r.loss.total);
      md += "| | step | action | router | total | router acc |\n|---|---|---|---|---|---|\n";
      for (const auto* r : {&rows.front(), &rows.back()})
        md += std::string(r == &rows.front() ? "| first" : "| last") + " | " + std::to_string(r->step) +
              " | " + fixed(r->loss.action, 5) + " | " + fixed(r->loss.router, 5) + " | " +
              fixed(r->loss.total, 5) + " | " +
              (std::isfinite(r->loss.router_accuracy) ? fixed(r->loss.router_accuracy, 3) : "NA") + " |\n";
      md += "\nLowest logged total loss: " + fixed(best, 5) + ".\n\n";
      if (cfg.flag("svg")) {
        const auto dot = out_path.rfind('.');
        const std::string svg_path = (dot == std::string::npos ? out_path : out_path.substr(0, dot)) + "_loss.svg";
        write_text_file(svg_path, loss_svg(rows));
        md += "![loss](" + fs::path(svg_path).filename().string() + ")\n\n";
      }
    }
  }
  if (have_eval) {
    md += "## Evaluation\n\n| experiment | family | mode | success | trials |\n|---|---|---|---|---|\n";
    for (const auto& r : read_report_csv(eval_path))
      md += "| " + r.experiment + " | " + r.family + " | " + r.mode + " | " +
            fixed(100.0 * r.success_rate, 2) + "% | " + std::to_string(r.trials) + " |\n";
    md += "\n";
  }
  if (have_ablate) {
    const auto rows = read_report_csv(ablate_path);
    md += "## Routing ablation\n\n" + ablation_markdown(rows) + "\n";
    std::map<std::string, double> avg;
    for (const auto& r : rows)
      if (r.family == "Average") avg[r.mode] = r.success_rate;
    if (avg.count("Original") && avg.count("Random") && avg.count("Reversal"))
      md += "Original - Random: " + fixed(100.0 * (avg["Original"] - avg["Random"]), 2) +
            " points. Random - Reversal: " + fixed(100.0 * (avg["Random"] - avg["Reversal"]), 2) +
            " points.\n";
  }
  write_text_file(out_path, md);
  return out_path;
}

}  // namespace mtop
