#include <fstream>

#include "synthweave/plan.hpp"

namespace synthweave {

using nlohmann::json;

MethodSpec parse_method_shorthand(const std::string& text) {
  auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
  if (head == "sample") return SampleMethod{};
  if (head == "cart") return CartMethod{};
  if (head == "normrank") return NormRankMethod{};
  if (head == "normal" || head == "norm" || head == "identity_normal") return TransformNormalMethod{Transform::identity};
  if (head == "sqrt" || head == "sqrt_normal" || head == "sqrtnorm") return TransformNormalMethod{Transform::sqrt};
  if (head == "cuberoot" || head == "cuberoot_normal" || head == "cubertnorm") {
    return TransformNormalMethod{Transform::cuberoot};
  }
  if (head == "logit" || head == "logreg") return LogitMethod{};
  if (head == "multinomial" || head == "polyreg") return MultinomialMethod{};
  if (head == "nested") {
    if (arg.empty()) throw PlanError("method 'nested' needs a group column, e.g. nested:occ");
    return NestedMethod{arg};
  }
  throw PlanError("unknown synthesis method '" + text + "'");
}

namespace {

Transform parse_transform(const std::string& t) {
  if (t == "identity" || t == "none") return Transform::identity;
  if (t == "sqrt") return Transform::sqrt;
  if (t == "cuberoot" || t == "cbrt") return Transform::cuberoot;
  throw PlanError("unknown transform '" + t + "'");
}

std::string transform_name(Transform t) {
  switch (t) {
    case Transform::sqrt: return "sqrt";
    case Transform::cuberoot: return "cuberoot";
    default: return "identity";
  }
}

Literal literal_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw PlanError("rule value must be a number or a string");
}

json literal_to_json(const Literal& l) {
  if (const auto* d = std::get_if<double>(&l)) return *d;
  return std::get<std::string>(l);
}

}  // namespace

MethodSpec method_from_json(const json& j) {
  if (j.is_string()) return parse_method_shorthand(j.get<std::string>());
  if (!j.is_object() || !j.contains("method")) throw PlanError("method entry must be a string or {\"method\": ...}");
  const std::string name = j.at("method").get<std::string>();
  if (name == "cart") {
    CartMethod m;
    m.min_bucket = j.value("min_bucket", m.min_bucket);
    m.complexity = j.value("complexity", m.complexity);
    return m;
  }
  if (name == "normrank") {
    NormRankMethod m;
    m.residual_scale = j.value("residual_scale", m.residual_scale);
    return m;
  }
  if (name == "transform_normal") {
    return TransformNormalMethod{parse_transform(j.value("transform", std::string("identity")))};
  }
  if (name == "logit" || name == "logreg") {
    LogitMethod m;
    m.max_iter = j.value("max_iter", m.max_iter);
    m.tol = j.value("tol", m.tol);
    return m;
  }
  if (name == "multinomial" || name == "polyreg") {
    MultinomialMethod m;
    m.max_iter = j.value("max_iter", m.max_iter);
    m.tol = j.value("tol", m.tol);
    return m;
  }
  if (name == "nested") {
    if (!j.contains("group")) throw PlanError("nested method needs \"group\"");
    return NestedMethod{j.at("group").get<std::string>()};
  }
  return parse_method_shorthand(name);
}

json method_to_json(const MethodSpec& method) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SampleMethod>) return {{"method", "sample"}};
        if constexpr (std::is_same_v<T, CartMethod>) {
          return {{"method", "cart"}, {"min_bucket", m.min_bucket}, {"complexity", m.complexity}};
        }
        if constexpr (std::is_same_v<T, NormRankMethod>) {
          return {{"method", "normrank"}, {"residual_scale", m.residual_scale}};
        }
        if constexpr (std::is_same_v<T, TransformNormalMethod>) {
          return {{"method", "transform_normal"}, {"transform", transform_name(m.transform)}};
        }
        if constexpr (std::is_same_v<T, LogitMethod>) {
          return {{"method", "logit"}, {"max_iter", m.max_iter}, {"tol", m.tol}};
        }
        if constexpr (std::is_same_v<T, MultinomialMethod>) {
          return {{"method", "multinomial"}, {"max_iter", m.max_iter}, {"tol", m.tol}};
        }
        if constexpr (std::is_same_v<T, NestedMethod>) return {{"method", "nested"}, {"group", m.group_column}};
      },
      method);
}

SynthesisPlan plan_from_json(const json& doc) {
  try {
    SynthesisPlan plan;
    if (!doc.contains("visit_sequence")) throw PlanError("plan needs a \"visit_sequence\" array");
    plan.visit_sequence = doc.at("visit_sequence").get<std::vector<std::string>>();
    if (doc.contains("methods")) {
      for (auto it = doc.at("methods").begin(); it != doc.at("methods").end(); ++it) {
        plan.methods[it.key()] = method_from_json(it.value());
      }
    }
    if (doc.contains("predictor_matrix") && !doc.at("predictor_matrix").is_null()) {
      for (auto it = doc.at("predictor_matrix").begin(); it != doc.at("predictor_matrix").end(); ++it) {
        plan.predictor_matrix[it.key()] = it.value().get<std::vector<std::string>>();
      }
    }
    if (doc.contains("rules")) {
      for (const auto& r : doc.at("rules")) {
        plan.rules.push_back(
            {r.at("target").get<std::string>(), r.at("condition").get<std::string>(), literal_from_json(r.at("value"))});
      }
    }
    if (doc.contains("stratifier") && !doc.at("stratifier").is_null()) {
      plan.stratifier = doc.at("stratifier").get<std::string>();
    }
    if (doc.contains("nesting")) {
      for (auto it = doc.at("nesting").begin(); it != doc.at("nesting").end(); ++it) {
        plan.nesting[it.key()] = it.value().get<std::string>();
      }
    }
    plan.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("options")) {
      const auto& o = doc.at("options");
      plan.options.min_stratum_rows = o.value("min_stratum_rows", plan.options.min_stratum_rows);
      plan.options.high_cardinality_threshold =
          o.value("high_cardinality_threshold", plan.options.high_cardinality_threshold);
      plan.options.max_multinomial_levels = o.value("max_multinomial_levels", plan.options.max_multinomial_levels);
      if (o.contains("n_synthetic") && !o.at("n_synthetic").is_null()) {
        plan.options.n_synthetic = o.at("n_synthetic").get<std::size_t>();
      }
    }
    if (doc.contains("sdc") && !doc.at("sdc").is_null()) {
      const auto& s = doc.at("sdc");
      SdcConfig sdc;
      sdc.remove_replicated_uniques = s.value("remove_replicated_uniques", false);
      sdc.key_variables = s.value("key_variables", std::vector<std::string>{});
      sdc.noise_targets = s.value("noise_targets", std::vector<std::string>{});
      sdc.noise_scale = s.value("noise_scale", 0.0);
      sdc.label = s.value("label", std::string{});
      if (sdc.noise_scale < 0.0) throw PlanError("sdc.noise_scale must be >= 0");
      plan.sdc = sdc;
    }
    return plan;
  } catch (const json::exception& e) {
    throw PlanError(std::string("malformed plan: ") + e.what());
  }
}

json plan_to_json(const SynthesisPlan& plan) {
  json doc;
  doc["visit_sequence"] = plan.visit_sequence;
  json methods = json::object();
  for (const auto& [k, m] : plan.methods) methods[k] = method_to_json(m);
  doc["methods"] = methods;
  json pm = json::object();
  for (const auto& [k, v] : plan.predictor_matrix) pm[k] = v;
  doc["predictor_matrix"] = pm;
  json rules = json::array();
  for (const auto& r : plan.rules) {
    rules.push_back({{"target", r.target}, {"condition", r.condition}, {"value", literal_to_json(r.value)}});
  }
  doc["rules"] = rules;
  doc["stratifier"] = plan.stratifier ? json(*plan.stratifier) : json(nullptr);
  json nesting = json::object();
  for (const auto& [k, v] : plan.nesting) nesting[k] = v;
  doc["nesting"] = nesting;
  doc["seed"] = plan.seed;
  json opts = {{"min_stratum_rows", plan.options.min_stratum_rows},
               {"high_cardinality_threshold", plan.options.high_cardinality_threshold},
               {"max_multinomial_levels", plan.options.max_multinomial_levels}};
  opts["n_synthetic"] = plan.options.n_synthetic ? json(*plan.options.n_synthetic) : json(nullptr);
  doc["options"] = opts;
  if (plan.sdc) {
    doc["sdc"] = {{"remove_replicated_uniques", plan.sdc->remove_replicated_uniques},
                  {"key_variables", plan.sdc->key_variables},
                  {"noise_targets", plan.sdc->noise_targets},
                  {"noise_scale", plan.sdc->noise_scale},
                  {"label", plan.sdc->label}};
  }
  return doc;
}

SynthesisPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PlanError("cannot open plan file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw PlanError("plan file " + path + ": " + e.what());
  }
  return plan_from_json(doc);
}

}  // namespace synthweave
