#pragma once

#include <string>
#include <vector>

#include "cbp/model.hpp"

namespace cbp::test {

inline std::string model_path(const std::string& name) { return std::string(CBP_MODELS_DIR) + "/" + name; }

inline CbpModel load(const std::string& name) { return model::load_model_file(model_path(name)); }

inline ChainModel two_state_chain() {
  ChainDescription d;
  d.labels = {"0", "1"};
  d.generator = {{-1.0, 1.0}, {1.0, -1.0}};
  return ChainModel::validate(d);
}

/// Two-state chain, catalyst at state 1 with alpha = 0.5, beta = 1.
inline CbpModel two_state(const std::vector<double>& law, int n_max = 2, double alpha = 0.5) {
  Catalyst c;
  c.site = Site::index(1);
  c.alpha = alpha;
  c.beta = 1.0;
  c.law = law;
  return CbpModel::make(two_state_chain(), std::vector<Catalyst>{c}, n_max);
}

inline ChainModel z1_chain(double tolerance = 1e-12) {
  ChainDescription d;
  d.kind = ChainKind::LatticeWalk;
  d.dim = 1;
  d.kernel = {Jump{{1}, 0.5}, Jump{{-1}, 0.5}};
  d.truncation.initial_radius = 16;
  d.truncation.tolerance = tolerance;
  d.recurrent_override = true;
  return ChainModel::validate(d);
}

}  // namespace cbp::test
