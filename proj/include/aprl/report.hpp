#pragma once

#include <cstdint>
#include <string>

#include "aprl/exploration.hpp"
#include "json.hpp"

namespace aprl {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kReportSchema = "aprl-report-v1";

// Everything a report needs beyond the run itself: where the data came from,
// how it was split, which policy drove the run, and the holdout scores.
struct ReportContext {
  std::string dataset_name;
  std::uint64_t seed = 0;
  std::size_t total_rows = 0;
  std::size_t feature_columns = 0;
  std::size_t train_rows = 0;
  std::size_t holdout_rows = 0;
  double holdout_fraction = 0.33;
  std::uint64_t holdout_seed = 1;
  double baseline_holdout = 0.0;  // headline metric of the baseline model
  double ensemble_holdout = 0.0;  // headline metric of the selected ensemble
  std::string policy_source = "heuristic";
  ExplorationConfig config;
};

// Assembles the full run report. The only wall-clock field is generated_at;
// iteration-mode runs carry no other timing, so two identical invocations
// differ in that single field alone.
Json build_report(const RunResult& result, const ReportContext& ctx);

// Structural check of a report; throws std::runtime_error naming the first
// violation. Recomputes error_reduction from the stored holdout metrics and
// requires agreement within 1e-9.
void validate_report(const Json& report);

void write_report(const Json& report, const std::string& path);
Json read_report(const std::string& path);

// Replaces the generated_at value with a fixed token so two report files can
// be byte-compared.
std::string mask_timestamp(const std::string& report_text);

}  // namespace aprl
