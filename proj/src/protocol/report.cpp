#include <cmath>
#include <cstdio>

#include "ffcac/error.hpp"
#include "ffcac/protocol/experiment.hpp"
#include "json.hpp"

namespace ffcac::protocol {
namespace {

using json = nlohmann::ordered_json;

double round6(double v) { return std::round(v * 1e6) / 1e6; }

json rounded(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(round6(x));
  return a;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json config_json(const ExperimentConfig& cfg) {
  json c = json::object();
  for (const auto& [k, v] : config_entries(cfg)) c[k] = v;
  return c;
}

json aggregate_json(const RunReport& r) {
  std::vector<double> mean, sd;
  for (const auto& s : r.accuracy) {
    mean.push_back(s.mean);
    sd.push_back(s.std);
  }
  return json{{"accuracy_mean", rounded(mean)}, {"accuracy_std", rounded(sd)},
              {"aa_mean", round6(r.aa.mean)},   {"aa_std", round6(r.aa.std)},
              {"pd_mean", round6(r.pd.mean)},   {"pd_std", round6(r.pd.std)}};
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

std::string csv_row(const std::string& name, const json& agg) {
  std::string row = name;
  for (const auto& a : agg.at("accuracy_mean")) row += "," + pct(a.get<double>());
  row += "," + pct(agg.at("aa_mean").get<double>()) + "," + pct(agg.at("pd_mean").get<double>()) + "\n";
  return row;
}

std::string csv_header(std::size_t sessions) {
  std::string h = "method";
  for (std::size_t m = 0; m < sessions; ++m) h += ",A" + std::to_string(m);
  return h + ",AA,PD\n";
}

}  // namespace

std::string report_json(const ExperimentConfig& cfg, const RunReport& report) {
  json runs = json::array();
  for (const auto& r : report.runs) {
    json checks = json::array();
    for (const auto& [before, after] : r.frozen_checks) checks.push_back({hex64(before), hex64(after)});
    runs.push_back(json{{"run", r.run},
                        {"seed", r.seed},
                        {"accuracies", rounded(r.accuracies)},
                        {"rrc_accuracies", rounded(r.rrc_accuracies)},
                        {"pbc_accuracies", rounded(r.pbc_accuracies)},
                        {"aa", round6(r.aa)},
                        {"pd", round6(r.pd)},
                        {"lambda", r.lambda},
                        {"first_epoch_loss", r.loss_history.empty() ? 0.0 : round6(r.loss_history.front())},
                        {"last_epoch_loss", r.loss_history.empty() ? 0.0 : round6(r.loss_history.back())},
                        {"mee_checksum", hex64(r.mee_checksum)},
                        {"freeze_checks", checks},
                        {"frozen", r.frozen}});
  }
  const json doc{{"format", "ffcac-report-1"},
                 {"classifier", to_string(cfg.classifier.kind)},
                 {"fusion", cfg.model.fusion},
                 {"sessions", report.accuracy.size()},
                 {"n_runs", report.runs.size()},
                 {"config", config_json(cfg)},
                 {"aggregate", aggregate_json(report)},
                 {"runs", runs}};
  return doc.dump(2) + "\n";
}

std::string ablation_json(const ExperimentConfig& cfg, const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    out.push_back(json{{"case", row.case_id},
                       {"fusion", row.fusion},
                       {"classifier", to_string(row.classifier)},
                       {"aggregate", aggregate_json(row.report)}});
  }
  const json doc{{"format", "ffcac-ablation-1"},
                 {"sessions", rows.empty() ? 0 : rows.front().report.accuracy.size()},
                 {"n_runs", rows.empty() ? 0 : rows.front().report.runs.size()},
                 {"config", config_json(cfg)},
                 {"rows", out}};
  return doc.dump(2) + "\n";
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  return report_csv(ablation_json(ExperimentConfig{}, rows));
}

std::string report_csv(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IngestionError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    const std::string format = doc.at("format").get<std::string>();
    const std::size_t sessions = doc.at("sessions").get<std::size_t>();
    std::string csv = csv_header(sessions);
    if (format == "ffcac-report-1") {
      csv += csv_row("ours", doc.at("aggregate"));
    } else if (format == "ffcac-ablation-1") {
      for (const auto& row : doc.at("rows")) {
        const std::string name = "case" + std::to_string(row.at("case").get<int>()) + " fusion=" +
                                 (row.at("fusion").get<bool>() ? "on" : "off") + " " +
                                 row.at("classifier").get<std::string>();
        csv += csv_row(name, row.at("aggregate"));
      }
    } else {
      throw IngestionError("unknown report format `" + format + "`");
    }
    return csv;
  } catch (const json::exception& e) {
    throw IngestionError(std::string("report is missing fields: ") + e.what());
  }
}

}  // namespace ffcac::protocol
