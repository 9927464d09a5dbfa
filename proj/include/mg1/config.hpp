#pragma once

// Experiment configuration: a JSON file and/or command-line overrides,
// validated once up front so the run loop can assume a sane setup.

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mg1/distribution.hpp"
#include "mg1/policy.hpp"

namespace mg1 {

struct ExperimentConfig {
  double lambda = 1.0;
  std::string dist = "pareto:alpha=3";
  std::string policy = "po-lcfs(lcfs,s=1)";
  std::string reference = "fb";  // CRN partner for gap sweeps
  std::vector<double> s_list;    // truncation levels for sweeps
  std::uint64_t n_periods = 200000;
  std::uint64_t seed = 1;
  double confidence = 0.99;
  std::string out_dir = ".";
  int threads = 1;

  // Parsed views (filled by validate()).
  std::optional<ServiceDistribution> dist_parsed;
  std::optional<PolicySpec> policy_parsed;
  std::optional<PolicySpec> reference_parsed;

  static ExperimentConfig from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
      throw std::invalid_argument("config: cannot read " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config: bad JSON in " + path + ": " +
                                  e.what());
    }
    ExperimentConfig c;
    try {
      if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
      if (j.contains("dist")) c.dist = j.at("dist").get<std::string>();
      if (j.contains("policy")) c.policy = j.at("policy").get<std::string>();
      if (j.contains("reference"))
        c.reference = j.at("reference").get<std::string>();
      if (j.contains("s_list"))
        c.s_list = j.at("s_list").get<std::vector<double>>();
      if (j.contains("n_periods"))
        c.n_periods = j.at("n_periods").get<std::uint64_t>();
      if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("confidence"))
        c.confidence = j.at("confidence").get<double>();
      if (j.contains("out_dir"))
        c.out_dir = j.at("out_dir").get<std::string>();
      if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config: bad field in " + path + ": " +
                                  e.what());
    }
    return c;
  }

  // Parses the string fields and checks cross-field consistency.  Throws
  // std::invalid_argument with an actionable message on the first problem.
  void validate() {
    if (!(lambda > 0))
      throw std::invalid_argument("config: lambda must be > 0");
    ServiceDistribution d = [&] {
      try {
        return ServiceDistribution::parse(dist);
      } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: bad dist: ") +
                                    e.what());
      }
    }();
    const double ex = d.mean();
    if (!std::isfinite(ex))
      throw std::invalid_argument("config: service mean is infinite");
    if (!(lambda * ex < 1.0))
      throw std::invalid_argument(
          "config: unstable, lambda * E(X) = " + std::to_string(lambda * ex) +
          " >= 1");
    auto parse_policy = [](const std::string& what, const std::string& s) {
      try {
        return PolicySpec::parse(s);
      } catch (const std::exception& e) {
        throw std::invalid_argument("config: bad " + what + ": " + e.what());
      }
    };
    PolicySpec pol = parse_policy("policy", policy);
    PolicySpec ref = parse_policy("reference", reference);
    if (ref.has_threshold())
      throw std::invalid_argument(
          "config: reference policy must not itself truncate");
    if (!s_list.empty()) {
      double prev = 0;
      for (double s : s_list) {
        if (!(s > prev))
          throw std::invalid_argument(
              "config: s_list must be positive and strictly increasing");
        prev = s;
      }
    }
    if (n_periods == 0)
      throw std::invalid_argument("config: n_periods must be >= 1");
    if (!(confidence > 0.5 && confidence < 1.0))
      throw std::invalid_argument("config: confidence must be in (0.5, 1)");
    if (threads < 1)
      throw std::invalid_argument("config: threads must be >= 1");
    dist_parsed = std::move(d);
    policy_parsed = std::move(pol);
    reference_parsed = std::move(ref);
  }
};

}  // namespace mg1
