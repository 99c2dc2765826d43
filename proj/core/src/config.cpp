#include "sqabs/config.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sqabs {

void MarchingConfig::validate() const {
  if (!(truncation_ratio > 0.0)) throw std::invalid_argument("truncation_ratio must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (n_c < 1) throw std::invalid_argument("n_c must be at least 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(termination_ratio > 0.0 && termination_ratio < 1.0)) {
    throw std::invalid_argument("termination_ratio must lie in (0, 1)");
  }
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("p0 must lie in (0, 1)");
  if (!(activation_ratio > 0.0)) throw std::invalid_argument("activation_ratio must be positive");
  if (max_em_iterations < 1 || solver_max_iterations < 1 || restart_em_iterations < 1) {
    throw std::invalid_argument("iteration caps must be at least 1");
  }
  if (!(em_rel_tol > 0.0)) throw std::invalid_argument("em_rel_tol must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

void to_json(nlohmann::json& j, const MarchingConfig& c) {
  j = nlohmann::json{
      {"truncation_ratio", c.truncation_ratio},
      {"alpha", c.alpha},
      {"nc", c.n_c},
      {"gamma", c.gamma},
      {"termination_ratio", c.termination_ratio},
      {"p0", c.p0},
      {"activation_ratio", c.activation_ratio},
      {"max_em_iterations", c.max_em_iterations},
      {"em_rel_tol", c.em_rel_tol},
      {"solver_max_iterations", c.solver_max_iterations},
      {"restart_em_iterations", c.restart_em_iterations},
      {"axis_restarts", c.axis_restarts},
      {"seed", c.seed},
      {"threads", c.threads},
  };
}

void from_json(const nlohmann::json& j, MarchingConfig& c) {
  c.truncation_ratio = j.value("truncation_ratio", c.truncation_ratio);
  c.alpha = j.value("alpha", c.alpha);
  c.n_c = j.value("nc", c.n_c);
  c.gamma = j.value("gamma", c.gamma);
  c.termination_ratio = j.value("termination_ratio", c.termination_ratio);
  c.p0 = j.value("p0", c.p0);
  c.activation_ratio = j.value("activation_ratio", c.activation_ratio);
  c.max_em_iterations = j.value("max_em_iterations", c.max_em_iterations);
  c.em_rel_tol = j.value("em_rel_tol", c.em_rel_tol);
  c.solver_max_iterations = j.value("solver_max_iterations", c.solver_max_iterations);
  c.restart_em_iterations = j.value("restart_em_iterations", c.restart_em_iterations);
  c.axis_restarts = j.value("axis_restarts", c.axis_restarts);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
}

}  // namespace sqabs
