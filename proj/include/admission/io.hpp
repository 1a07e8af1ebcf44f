#pragma once

// JSON documents: model specifications, policies and solve results.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "admission/model.hpp"
#include "admission/solvers.hpp"

namespace admission {

using Json = nlohmann::json;

/// Raised for malformed documents; the message names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// {S, c, mu, classes: [{R, gamma, lambda, expected_cost?}], lambda_min, lambda_max}
QueueModel model_from_json(const Json& doc);
Json to_json(const QueueModel& model);

/// Array over states 0..S-1 of accepted class indices (0-based).
Json to_json(const Policy& policy, int num_classes);
Policy policy_from_json(const Json& doc, int capacity, int num_classes);

/// Policy document plus {rho, nabla_h, iterations, method}.
Json to_json(const SolveResult& result, int num_classes);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace admission
