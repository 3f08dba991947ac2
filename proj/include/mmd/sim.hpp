#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmd/engine.hpp"
#include "mmd/io.hpp"
#include "mmd/minimax.hpp"

namespace mmd {

enum class Protocol { risk_table, inference_table, order_figure, normality_qq };
Protocol parse_protocol(const std::string& s);
std::string to_string(Protocol p);

struct ModelConfig {
  std::string kind = "model1";  // model1 or model2
  double B = 1.0;
  Model2Spec spec;

  int order() const { return kind == "model1" ? 0 : spec.m; }
  // noise_seed only matters for model2
  std::shared_ptr<const OutcomeModel> build(int N, int T, double q1, std::uint64_t noise_seed) const;
};

struct DesignChoice {
  std::string name;  // independent, blocked, star1, star2, optimal, closed_form or custom
  std::optional<Design> custom;
};

// Build a named design for (T, p); closed_form and optimal use params.
Design build_design(const DesignChoice& choice, const ExperimentParams& params);

struct OrderPoint {
  std::string label;
  int centers = 1;
  int units = 1;
  int T = 0;
};

struct ScenarioConfig {
  Protocol protocol = Protocol::risk_table;
  ExperimentParams params;
  std::vector<DesignChoice> designs;
  std::vector<std::pair<double, double>> objectives;
  ModelConfig model;
  int replications = 500;
  int p_est = 0;
  std::vector<int> centers;  // units per center; empty means one center of N units
  double alpha = 0.05;
  int p1 = 1;
  int p2 = 2;
  std::vector<OrderPoint> order_points;
  json source;
};

ScenarioConfig parse_scenario(const json& j);

struct RunOptions {
  std::uint64_t seed = 0;
  int workers = 1;
};

json mc_risk(const ScenarioConfig& cfg, const RunOptions& opt);
json mc_inference(const ScenarioConfig& cfg, const RunOptions& opt);
json mc_order(const ScenarioConfig& cfg, const RunOptions& opt);
json mc_normality(const ScenarioConfig& cfg, const RunOptions& opt);
json run_scenario(const ScenarioConfig& cfg, const RunOptions& opt);

struct NormalitySummary {
  double ks = 0;
  double skewness = 0;
  double excess_kurtosis = 0;
  double mean = 0;
  double sd = 0;
  std::vector<std::pair<double, double>> qq;  // (theoretical, sample)
};

NormalitySummary normality_diagnostics(const std::vector<double>& samples);

std::string report_to_csv(const json& report);
std::string qq_to_csv(const json& report);

}  // namespace mmd
