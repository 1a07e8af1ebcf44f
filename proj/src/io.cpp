#include "admission/io.hpp"

#include <fstream>
#include <sstream>

namespace admission {

namespace {

const Json& require(const Json& doc, const std::string& key,
                    const std::string& where) {
  if (!doc.is_object() || !doc.contains(key))
    throw ConfigError("missing key '" + where + key + "'");
  return doc.at(key);
}

double number(const Json& doc, const std::string& key, const std::string& where) {
  const auto& v = require(doc, key, where);
  if (!v.is_number()) throw ConfigError("key '" + where + key + "' must be a number");
  return v.get<double>();
}

int integer(const Json& doc, const std::string& key, const std::string& where) {
  const auto& v = require(doc, key, where);
  if (!v.is_number_integer())
    throw ConfigError("key '" + where + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

QueueModel model_from_json(const Json& doc) {
  QueueModel model;
  model.capacity = integer(doc, "S", "");
  model.servers = integer(doc, "c", "");
  model.service_rate = number(doc, "mu", "");
  model.lambda_min = number(doc, "lambda_min", "");
  model.lambda_max = number(doc, "lambda_max", "");
  const auto& classes = require(doc, "classes", "");
  if (!classes.is_array() || classes.empty())
    throw ConfigError("key 'classes' must be a non-empty array");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string where = "classes[" + std::to_string(i) + "].";
    const auto& entry = classes[i];
    JobClass cls;
    cls.reward = number(entry, "R", where);
    cls.holding_cost = entry.contains("gamma") ? number(entry, "gamma", where) : 0.0;
    cls.arrival_rate = number(entry, "lambda", where);
    if (entry.contains("expected_cost")) {
      const auto& table = entry.at("expected_cost");
      if (!table.is_array())
        throw ConfigError("key '" + where + "expected_cost' must be an array");
      for (const auto& v : table) {
        if (!v.is_number())
          throw ConfigError("key '" + where + "expected_cost' must hold numbers");
        cls.expected_cost.push_back(v.get<double>());
      }
    }
    model.classes.push_back(std::move(cls));
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return model;
}

Json to_json(const QueueModel& model) {
  Json classes = Json::array();
  for (const auto& cls : model.classes) {
    Json entry{{"R", cls.reward}, {"gamma", cls.holding_cost},
               {"lambda", cls.arrival_rate}};
    if (!cls.expected_cost.empty()) entry["expected_cost"] = cls.expected_cost;
    classes.push_back(std::move(entry));
  }
  return Json{{"S", model.capacity},          {"c", model.servers},
              {"mu", model.service_rate},     {"classes", std::move(classes)},
              {"lambda_min", model.lambda_min}, {"lambda_max", model.lambda_max}};
}

Json to_json(const Policy& policy, int num_classes) {
  Json states = Json::array();
  for (int s = 0; s < policy.capacity(); ++s) {
    Json admitted = Json::array();
    for (int i = 0; i < num_classes; ++i)
      if (policy.accepts(s, i)) admitted.push_back(i);
    states.push_back(std::move(admitted));
  }
  return states;
}

Policy policy_from_json(const Json& doc, int capacity, int num_classes) {
  if (!doc.is_array() || static_cast<int>(doc.size()) != capacity)
    throw ConfigError("policy must be an array with one entry per state 0..S-1");
  Policy policy(capacity);
  for (int s = 0; s < capacity; ++s) {
    if (!doc[s].is_array())
      throw ConfigError("policy[" + std::to_string(s) + "] must be an array");
    for (const auto& v : doc[s]) {
      if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= num_classes)
        throw ConfigError("policy[" + std::to_string(s) + "] holds an invalid class index");
      policy.admit(s, v.get<int>());
    }
  }
  return policy;
}

Json to_json(const SolveResult& result, int num_classes) {
  return Json{{"policy", to_json(result.policy, num_classes)},
              {"thresholds", result.policy.thresholds(num_classes)},
              {"rho", result.eval.gain},
              {"nabla_h", result.eval.relative_bias},
              {"iterations", result.iterations},
              {"method", to_string(result.method)}};
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("failed to write " + path.string());
}

}  // namespace admission
