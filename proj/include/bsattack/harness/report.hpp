#pragma once

#include <bsattack/attack/attack.hpp>
#include <bsattack/errors.hpp>
#include <bsattack/harness/evaluate.hpp>
#include <bsattack/vocab/vocabulary.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace bsattack {

inline constexpr int kReportVersion = 1;

namespace detail {

inline std::string join_ids(const TokenSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(seq.ids[i]);
  }
  return out;
}

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

inline nlohmann::json aggregates_to_json(const ReportAggregates& a) {
  return {{"examples", a.examples},
          {"evaluated", a.evaluated},
          {"succeeded", a.succeeded},
          {"clean_accuracy", a.clean_accuracy},
          {"after_attack_accuracy", a.after_attack_accuracy},
          {"success_rate", a.success_rate},
          {"mean_similarity", a.mean_similarity},
          {"mean_token_error_rate", a.mean_token_error_rate},
          {"mean_iterations", a.mean_iterations},
          {"degenerate", a.degenerate}};
}

inline ReportAggregates aggregates_from_json(const nlohmann::json& j) {
  ReportAggregates a;
  a.examples = j.at("examples").get<std::size_t>();
  a.evaluated = j.at("evaluated").get<std::size_t>();
  a.succeeded = j.at("succeeded").get<std::size_t>();
  a.clean_accuracy = j.at("clean_accuracy").get<double>();
  a.after_attack_accuracy = j.at("after_attack_accuracy").get<double>();
  a.success_rate = j.at("success_rate").get<double>();
  a.mean_similarity = j.at("mean_similarity").get<double>();
  a.mean_token_error_rate = j.at("mean_token_error_rate").get<double>();
  a.mean_iterations = j.at("mean_iterations").get<double>();
  a.degenerate = j.at("degenerate").get<bool>();
  return a;
}

/// JSON document for a report. Token texts are included when a vocabulary
/// is supplied; they are informational and ignored when reading back.
inline nlohmann::json report_to_json(const AttackReport& report, const Vocabulary* vocab = nullptr) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ReportRow& row : report.rows) {
    const AttackResult& r = row.result;
    nlohmann::json j = {{"index", row.index},
                        {"status", std::string(status_name(r.status))},
                        {"success", r.success},
                        {"label", r.label},
                        {"adversarial_prediction", r.adversarial_prediction},
                        {"original_ids", r.original.ids},
                        {"adversarial_ids", r.adversarial.ids},
                        {"iterations", r.iterations},
                        {"accepted", r.accepted},
                        {"buffer_size", r.buffer_size},
                        {"alpha", r.alpha},
                        {"lr", r.lr},
                        {"adversarial_loss", r.adversarial_loss},
                        {"similarity", r.similarity},
                        {"token_error_rate", r.token_error_rate}};
    if (vocab) {
      j["original_text"] = detokenize(r.original, *vocab);
      j["adversarial_text"] = detokenize(r.adversarial, *vocab);
    }
    rows.push_back(std::move(j));
  }
  const AttackConfig& c = report.config;
  return {{"version", kReportVersion},
          {"similarity_function", report.similarity_function},
          {"config",
           {{"alpha_schedule", c.alpha_schedule},
            {"lr_schedule", c.lr_schedule},
            {"max_iterations", c.max_iterations},
            {"similarity_threshold", c.similarity_threshold},
            {"seed", c.seed}}},
          {"unattackable", report.unattackable},
          {"aggregates", aggregates_to_json(report.aggregates)},
          {"rows", std::move(rows)}};
}

inline AttackReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kReportVersion) {
      throw FormatError("report: unsupported version " + j.at("version").dump());
    }
    AttackReport report;
    report.similarity_function = j.at("similarity_function").get<std::string>();
    const auto& c = j.at("config");
    report.config.alpha_schedule = c.at("alpha_schedule").get<std::vector<double>>();
    report.config.lr_schedule = c.at("lr_schedule").get<std::vector<double>>();
    report.config.max_iterations = c.at("max_iterations").get<std::size_t>();
    report.config.similarity_threshold = c.at("similarity_threshold").get<double>();
    report.config.seed = c.at("seed").get<std::uint64_t>();
    report.unattackable = j.at("unattackable").get<std::size_t>();
    report.aggregates = aggregates_from_json(j.at("aggregates"));
    for (const auto& row : j.at("rows")) {
      ReportRow rr;
      rr.index = row.at("index").get<std::size_t>();
      AttackResult& r = rr.result;
      r.status = parse_status(row.at("status").get<std::string>());
      r.success = row.at("success").get<bool>();
      r.label = row.at("label").get<std::size_t>();
      r.adversarial_prediction = row.at("adversarial_prediction").get<std::size_t>();
      r.original.ids = row.at("original_ids").get<std::vector<TokenId>>();
      r.adversarial.ids = row.at("adversarial_ids").get<std::vector<TokenId>>();
      r.iterations = row.at("iterations").get<std::size_t>();
      r.accepted = row.at("accepted").get<std::size_t>();
      r.buffer_size = row.at("buffer_size").get<std::size_t>();
      r.alpha = row.at("alpha").get<double>();
      r.lr = row.at("lr").get<double>();
      r.adversarial_loss = row.at("adversarial_loss").get<double>();
      r.similarity = row.at("similarity").get<double>();
      r.token_error_rate = row.at("token_error_rate").get<double>();
      report.rows.push_back(std::move(rr));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

inline std::string report_json_string(const AttackReport& report, const Vocabulary* vocab = nullptr) {
  return report_to_json(report, vocab).dump(2) + "\n";
}

inline void save_report(const std::string& path, const AttackReport& report,
                        const Vocabulary* vocab = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write report " + path);
  out << report_json_string(report, vocab);
}

inline AttackReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read report " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
  return report_from_json(j);
}

inline std::string report_csv(const AttackReport& report) {
  std::ostringstream os;
  os << "index,status,success,label,adversarial_prediction,iterations,alpha,lr,"
        "adversarial_loss,similarity,token_error_rate,original_ids,adversarial_ids\n";
  for (const ReportRow& row : report.rows) {
    const AttackResult& r = row.result;
    os << row.index << ',' << status_name(r.status) << ',' << (r.success ? 1 : 0) << ','
       << r.label << ',' << r.adversarial_prediction << ',' << r.iterations << ','
       << detail::general(r.alpha) << ',' << detail::general(r.lr) << ','
       << detail::fixed(r.adversarial_loss) << ',' << detail::fixed(r.similarity) << ','
       << detail::fixed(r.token_error_rate) << ',' << detail::join_ids(r.original) << ','
       << detail::join_ids(r.adversarial) << '\n';
  }
  return os.str();
}

inline std::string report_text(const AttackReport& report) {
  const ReportAggregates& a = report.aggregates;
  std::ostringstream os;
  os << "examples:              " << a.examples << '\n'
     << "unattackable:          " << report.unattackable << '\n'
     << "evaluated:             " << a.evaluated << '\n'
     << "succeeded:             " << a.succeeded << '\n'
     << "clean accuracy:        " << detail::fixed(a.clean_accuracy, 4) << '\n'
     << "after-attack accuracy: " << detail::fixed(a.after_attack_accuracy, 4) << '\n'
     << "success rate:          " << detail::fixed(a.success_rate, 4) << '\n'
     << "mean similarity:       " << detail::fixed(a.mean_similarity, 4) << '\n'
     << "mean token error rate: " << detail::fixed(a.mean_token_error_rate, 4) << '\n'
     << "mean iterations:       " << detail::fixed(a.mean_iterations, 2) << '\n'
     << "similarity function:   " << report.similarity_function << '\n';
  if (a.degenerate) os << "warning: no correctly classified examples; run is degenerate\n";
  return os.str();
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "alpha,adv_accuracy,mean_similarity,mean_token_error_rate\n";
  for (const SweepRow& r : rows) {
    os << detail::general(r.alpha) << ',' << detail::fixed(r.adv_accuracy) << ','
       << detail::fixed(r.mean_similarity) << ',' << detail::fixed(r.mean_token_error_rate) << '\n';
  }
  return os.str();
}

}  // namespace bsattack
