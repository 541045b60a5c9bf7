#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "geoscat/constants.hpp"

namespace geoscat {

/// Run configuration shared by all CLI commands. Serialized as versioned
/// JSON; unknown keys are rejected so that reported numbers stay
/// reproducible from the config alone.
struct RunConfig {
  int version = 1;
  double epsilon = 0.05;
  double amplitude = 1.0;
  double delta = kDefaultDelta;
  int grid_n_r = 257;
  int grid_n_theta = 1024;
  double atol = 1e-11;
  double rtol = 1e-11;
  int census_n_theta = 360;
  double horizon = 6.0 * kPi + 16.0;
  double escape_radius = 8.0;
  std::string output_dir = "out";
  unsigned long seed = 0;

  void validate() const {
    if (version != 1)
      throw std::invalid_argument("config: unsupported version " +
                                  std::to_string(version));
    if (epsilon < 0.0) throw std::invalid_argument("config: epsilon < 0");
    if (amplitude <= 0.0)
      throw std::invalid_argument("config: amplitude <= 0");
    if (!(delta > 0.0) || delta >= 0.5 * (kR1 - kR0))
      throw std::invalid_argument("config: delta outside (0, (R1-R0)/2)");
    if (grid_n_r < 17) throw std::invalid_argument("config: grid_n_r < 17");
    if (grid_n_theta < 64)
      throw std::invalid_argument("config: grid_n_theta < 64");
    if (!(atol > 0.0) || !(rtol > 0.0))
      throw std::invalid_argument("config: tolerances must be positive");
    if (census_n_theta < 4 || census_n_theta % 4 != 0)
      throw std::invalid_argument(
          "config: census_n_theta must be a positive multiple of 4");
    if (!(horizon > 0.0)) throw std::invalid_argument("config: horizon <= 0");
    if (!(escape_radius > kR1))
      throw std::invalid_argument("config: escape_radius <= R1");
    if (output_dir.empty())
      throw std::invalid_argument("config: empty output_dir");
  }

  nlohmann::json to_json() const {
    return {{"version", version},
            {"epsilon", epsilon},
            {"amplitude", amplitude},
            {"delta", delta},
            {"grid_n_r", grid_n_r},
            {"grid_n_theta", grid_n_theta},
            {"atol", atol},
            {"rtol", rtol},
            {"census_n_theta", census_n_theta},
            {"horizon", horizon},
            {"escape_radius", escape_radius},
            {"output_dir", output_dir},
            {"seed", seed}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "version",        "epsilon", "amplitude",     "delta",
        "grid_n_r",       "grid_n_theta", "atol",     "rtol",
        "census_n_theta", "horizon", "escape_radius", "output_dir",
        "seed"};
    for (const auto& item : j.items())
      if (!known.count(item.key()))
        throw std::invalid_argument("config: unknown key '" + item.key() +
                                    "'");
    RunConfig c;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("version", c.version);
    get("epsilon", c.epsilon);
    get("amplitude", c.amplitude);
    get("delta", c.delta);
    get("grid_n_r", c.grid_n_r);
    get("grid_n_theta", c.grid_n_theta);
    get("atol", c.atol);
    get("rtol", c.rtol);
    get("census_n_theta", c.census_n_theta);
    get("horizon", c.horizon);
    get("escape_radius", c.escape_radius);
    get("output_dir", c.output_dir);
    get("seed", c.seed);
    c.validate();
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config: parse error in " + path + ": " +
                                  e.what());
    }
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << to_json().dump(2) << "\n";
  }
};

} // namespace geoscat
