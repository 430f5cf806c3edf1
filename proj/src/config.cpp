#include "formulab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "formulab/errors.hpp"
#include "json.hpp"

namespace formulab {

namespace {

using nlohmann::json;

json plant_to_json(const PlantParams& p) {
  return json{{"inertia", p.inertia},     {"damping", p.damping},
              {"voltage_gain", p.voltage_gain}, {"restoring", p.restoring},
              {"v_max", p.v_max},         {"dt", p.dt},
              {"substeps", p.substeps}};
}

PlantParams plant_from_json(const json& j) {
  PlantParams p;
  p.inertia = j.value("inertia", p.inertia);
  p.damping = j.value("damping", p.damping);
  p.voltage_gain = j.value("voltage_gain", p.voltage_gain);
  p.restoring = j.value("restoring", p.restoring);
  p.v_max = j.value("v_max", p.v_max);
  p.dt = j.value("dt", p.dt);
  p.substeps = j.value("substeps", p.substeps);
  return p;
}

json ppo_to_json(const PpoConfig& p) {
  return json{{"learning_rate", p.learning_rate},
              {"n_steps", p.n_steps},
              {"minibatch_size", p.minibatch_size},
              {"epochs", p.epochs},
              {"gamma", p.gamma},
              {"gae_lambda", p.gae_lambda},
              {"clip_range", p.clip_range},
              {"entropy_coef", p.entropy_coef},
              {"value_coef", p.value_coef},
              {"max_grad_norm", p.max_grad_norm},
              {"hidden_sizes", p.hidden_sizes},
              {"init_log_std", p.init_log_std}};
}

PpoConfig ppo_from_json(const json& j) {
  PpoConfig p;
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.n_steps = j.value("n_steps", p.n_steps);
  p.minibatch_size = j.value("minibatch_size", p.minibatch_size);
  p.epochs = j.value("epochs", p.epochs);
  p.gamma = j.value("gamma", p.gamma);
  p.gae_lambda = j.value("gae_lambda", p.gae_lambda);
  p.clip_range = j.value("clip_range", p.clip_range);
  p.entropy_coef = j.value("entropy_coef", p.entropy_coef);
  p.value_coef = j.value("value_coef", p.value_coef);
  p.max_grad_norm = j.value("max_grad_norm", p.max_grad_norm);
  p.hidden_sizes = j.value("hidden_sizes", p.hidden_sizes);
  p.init_log_std = j.value("init_log_std", p.init_log_std);
  return p;
}

json formulation_to_json(const FormulationConfig& f) {
  json j{{"stop_time_s", f.stop_time_s},
         {"target_tilt",
          f.target_mode == TargetMode::kFixedProfile ? "fixed" : "random"},
         {"initial_tilt",
          f.initial_tilt_mode == InitialTiltMode::kFixedZero ? "zero"
                                                             : "random"},
         {"norm_obs", f.normalize_obs},
         {"norm_action", f.normalize_action},
         {"action_penalty", f.action_penalty_coeff},
         {"target_redraw_prob", f.target_redraw_prob},
         {"target_range_deg", f.target_range_deg},
         {"initial_tilt_range_deg", f.initial_tilt_range_deg},
         {"penalty_window_s", f.penalty_window_s},
         {"velocity_norm_scale", f.velocity_norm_scale},
         {"truncation_bound_rad", f.truncation_bound}};
  if (f.truncation_penalty_clamp) {
    j["truncation_penalty_clamp"] = *f.truncation_penalty_clamp;
  }
  return j;
}

FormulationConfig formulation_from_json(const json& j) {
  FormulationConfig f;
  f.stop_time_s = j.value("stop_time_s", f.stop_time_s);
  if (j.contains("target_tilt")) {
    const std::string mode = j.at("target_tilt").get<std::string>();
    if (mode == "fixed") f.target_mode = TargetMode::kFixedProfile;
    else if (mode == "random") f.target_mode = TargetMode::kRandomRedraw;
    else throw ConfigError("env.target_tilt must be 'fixed' or 'random'");
  }
  if (j.contains("initial_tilt")) {
    const std::string mode = j.at("initial_tilt").get<std::string>();
    if (mode == "zero") f.initial_tilt_mode = InitialTiltMode::kFixedZero;
    else if (mode == "random") f.initial_tilt_mode = InitialTiltMode::kUniformRandom;
    else throw ConfigError("env.initial_tilt must be 'zero' or 'random'");
  }
  f.normalize_obs = j.value("norm_obs", f.normalize_obs);
  f.normalize_action = j.value("norm_action", f.normalize_action);
  f.action_penalty_coeff = j.value("action_penalty", f.action_penalty_coeff);
  f.target_redraw_prob = j.value("target_redraw_prob", f.target_redraw_prob);
  f.target_range_deg = j.value("target_range_deg", f.target_range_deg);
  f.initial_tilt_range_deg =
      j.value("initial_tilt_range_deg", f.initial_tilt_range_deg);
  f.penalty_window_s = j.value("penalty_window_s", f.penalty_window_s);
  f.velocity_norm_scale = j.value("velocity_norm_scale", f.velocity_norm_scale);
  f.truncation_bound = j.value("truncation_bound_rad", f.truncation_bound);
  if (j.contains("truncation_penalty_clamp") &&
      !j.at("truncation_penalty_clamp").is_null()) {
    f.truncation_penalty_clamp = j.at("truncation_penalty_clamp").get<long>();
  }
  return f;
}

json spec_to_json(const ExperimentSpec& s) {
  return json{{"name", s.name},
              {"reference", s.reference},
              {"env", formulation_to_json(s.formulation)},
              {"plant", plant_to_json(s.plant)},
              {"ppo", ppo_to_json(s.ppo)},
              {"seeds", s.seeds},
              {"eval_interval", s.eval_interval},
              {"threshold_deg", s.threshold_deg},
              {"total_steps", s.total_steps}};
}

ExperimentSpec spec_from_json(const json& j, const PlantParams& plant,
                              const PpoConfig& ppo,
                              const HarnessDefaults& defaults) {
  ExperimentSpec s;
  s.name = j.at("name").get<std::string>();
  s.reference = j.value("reference", std::string{});
  s.formulation =
      formulation_from_json(j.contains("env") ? j.at("env") : json::object());
  s.plant = j.contains("plant") ? plant_from_json(j.at("plant")) : plant;
  s.ppo = j.contains("ppo") ? ppo_from_json(j.at("ppo")) : ppo;
  s.seeds = j.value("seeds", defaults.seeds);
  s.eval_interval = j.value("eval_interval", defaults.eval_interval);
  s.threshold_deg = j.value("threshold_deg", defaults.threshold_deg);
  s.total_steps = j.value("total_steps", defaults.total_steps);
  return s;
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "... at line L, column C ..." in e.what()
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

void validate_matrix(const MatrixConfig& cfg) {
  std::set<std::string> names;
  for (const auto& spec : cfg.experiments) {
    if (!names.insert(spec.name).second) {
      throw ConfigError("duplicate experiment name '" + spec.name + "'");
    }
    spec.validate();
  }
  for (const auto& spec : cfg.experiments) {
    if (!spec.reference.empty() && !names.count(spec.reference)) {
      throw ConfigError("experiment '" + spec.name +
                        "' references unknown experiment '" + spec.reference +
                        "'");
    }
  }
}

}  // namespace

MatrixConfig parse_matrix_config(const std::string& text) {
  const json j = parse_json_text(text);
  MatrixConfig cfg;
  if (j.contains("plant")) cfg.plant = plant_from_json(j.at("plant"));
  if (j.contains("ppo")) cfg.ppo = ppo_from_json(j.at("ppo"));
  if (j.contains("defaults")) {
    const json& d = j.at("defaults");
    cfg.defaults.seeds = d.value("seeds", cfg.defaults.seeds);
    cfg.defaults.eval_interval =
        d.value("eval_interval", cfg.defaults.eval_interval);
    cfg.defaults.threshold_deg =
        d.value("threshold_deg", cfg.defaults.threshold_deg);
    cfg.defaults.total_steps = d.value("total_steps", cfg.defaults.total_steps);
  }
  if (j.contains("experiments")) {
    for (const json& e : j.at("experiments")) {
      cfg.experiments.push_back(
          spec_from_json(e, cfg.plant, cfg.ppo, cfg.defaults));
    }
  }
  validate_matrix(cfg);
  return cfg;
}

MatrixConfig load_matrix_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matrix_config(ss.str());
}

std::string serialize_matrix_config(const MatrixConfig& cfg) {
  json j;
  j["plant"] = plant_to_json(cfg.plant);
  j["ppo"] = ppo_to_json(cfg.ppo);
  j["defaults"] = json{{"seeds", cfg.defaults.seeds},
                       {"eval_interval", cfg.defaults.eval_interval},
                       {"threshold_deg", cfg.defaults.threshold_deg},
                       {"total_steps", cfg.defaults.total_steps}};
  j["experiments"] = json::array();
  for (const auto& spec : cfg.experiments) {
    j["experiments"].push_back(spec_to_json(spec));
  }
  return j.dump(2) + "\n";
}

std::vector<ExperimentSpec> paper_matrix(const PlantParams& plant,
                                         const PpoConfig& ppo,
                                         const HarnessDefaults& defaults) {
  const auto make = [&](const std::string& name, const std::string& reference,
                        FormulationConfig f) {
    ExperimentSpec s;
    s.name = name;
    s.reference = reference;
    s.formulation = f;
    s.plant = plant;
    s.ppo = ppo;
    s.seeds = defaults.seeds;
    s.eval_interval = defaults.eval_interval;
    s.threshold_deg = defaults.threshold_deg;
    s.total_steps = defaults.total_steps;
    return s;
  };
  const FormulationConfig base = FormulationConfig::baseline();
  // The matrix's "new_setting" row carries no action penalty; the penalty
  // variant is its own row.
  FormulationConfig news = FormulationConfig::new_setting();
  news.action_penalty_coeff = 0.0;

  // Long-horizon rows clamp the truncation scaling at the baseline episode
  // length; on an 80 s episode the literal rule is already bounded by 800.
  const auto with = [](FormulationConfig f, auto&& mutate) {
    mutate(f);
    return f;
  };

  std::vector<ExperimentSpec> m;
  m.push_back(make("baseline", "", base));
  m.push_back(make("baseline_with_normalization", "baseline",
                   with(base, [](FormulationConfig& f) {
                     f.normalize_obs = true;
                     f.normalize_action = true;
                   })));
  m.push_back(make("baseline_with_random_targets", "baseline",
                   with(base, [](FormulationConfig& f) {
                     f.target_mode = TargetMode::kRandomRedraw;
                   })));
  m.push_back(make("baseline_with_long_episodes", "baseline",
                   with(base, [](FormulationConfig& f) {
                     f.stop_time_s = 100000.0;
                     f.truncation_penalty_clamp = 800;
                   })));
  m.push_back(make("baseline_with_random_initial_pitch", "baseline",
                   with(base, [](FormulationConfig& f) {
                     f.initial_tilt_mode = InitialTiltMode::kUniformRandom;
                   })));
  m.push_back(make("new_setting", "", news));
  m.push_back(make("new_setting_without_normalization", "new_setting",
                   with(news, [](FormulationConfig& f) {
                     f.normalize_obs = false;
                     f.normalize_action = false;
                   })));
  m.push_back(make("new_setting_without_random_targets", "new_setting",
                   with(news, [](FormulationConfig& f) {
                     f.target_mode = TargetMode::kFixedProfile;
                   })));
  m.push_back(make("new_setting_without_long_episodes", "new_setting",
                   with(news, [](FormulationConfig& f) {
                     f.stop_time_s = 80.0;
                   })));
  m.push_back(make("new_setting_without_random_initial_pitch", "new_setting",
                   with(news, [](FormulationConfig& f) {
                     f.initial_tilt_mode = InitialTiltMode::kFixedZero;
                   })));
  m.push_back(make("new_setting_with_action_penalty", "new_setting",
                   with(news, [](FormulationConfig& f) {
                     f.action_penalty_coeff = 0.25;
                   })));
  return m;
}

}  // namespace formulab

// Definitions for the JSON-backed persistence helpers declared in
// harness.hpp live here so the json dependency stays in one translation
// unit together with the schema above.
namespace formulab {

std::string spec_to_json_string(const ExperimentSpec& spec) {
  return spec_to_json(spec).dump(2) + "\n";
}

ExperimentSpec spec_from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const json j = parse_json_text(ss.str());
  return spec_from_json(j, PlantParams{}, PpoConfig{}, HarnessDefaults{});
}

std::string policy_to_json(const PolicyParams& params) {
  json j;
  j["obs_dim"] = params.obs_dim();
  j["hidden_sizes"] = params.hidden_sizes();
  j["theta"] = std::vector<double>(params.theta.data(),
                                   params.theta.data() + params.theta.size());
  return j.dump() + "\n";
}

PolicyParams policy_from_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const json j = parse_json_text(ss.str());
  PolicyParams params(j.at("obs_dim").get<int>(),
                      j.at("hidden_sizes").get<std::vector<int>>());
  const auto theta = j.at("theta").get<std::vector<double>>();
  if (static_cast<int>(theta.size()) != params.param_count()) {
    throw ConfigError("policy.json parameter count mismatch in " +
                      path.string());
  }
  params.theta = Eigen::Map<const Eigen::VectorXd>(
      theta.data(), static_cast<long>(theta.size()));
  return params;
}

}  // namespace formulab
