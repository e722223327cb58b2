#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cbp/model.hpp"

namespace cbp {

struct SuiteResult {
  std::string name;
  double tolerance = 0.0;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double max_error = 0.0;
  std::string first_failure;

  bool passed() const { return failures == 0 && cases > 0; }
};

/// Accumulates checks by suite name, keeping first-seen order.
class SuiteLog {
 public:
  /// Records |a - b| / max(1, |a|, |b|) against `tol`.
  void compare(const std::string& suite, double tol, double a, double b, const std::string& context);
  /// Records a boolean outcome; `error` is reported as the magnitude.
  void check(const std::string& suite, double tol, bool ok, double error, const std::string& context);
  void merge(const SuiteLog& other);
  const std::vector<SuiteResult>& results() const { return results_; }

 private:
  SuiteResult& get(const std::string& suite, double tol);
  std::vector<SuiteResult> results_;
};

double relative_error(double a, double b);

namespace verify {

/// Random finite model with `n` catalysts on N + 2..N + 5 states, random
/// sparse irreducible generator and offspring laws on {0..4}; n_max = 3.
CbpModel random_model(std::mt19937_64& rng, int n);

/// Runs every applicable identity suite on one model. Lattice models use
/// tolerances widened to the truncation accuracy and skip finite
/// differences.
void verify_model(const CbpModel& model, std::mt19937_64& rng, SuiteLog& log);

/// `count` random models with N cycling through 1, 2, 3.
SuiteLog verify_random(std::size_t count, std::uint64_t seed);

}  // namespace verify
}  // namespace cbp
