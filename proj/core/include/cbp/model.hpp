#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbp/chain.hpp"

namespace cbp {

struct Catalyst {
  Site site;
  double alpha = 0.0;
  double beta = 1.0;
  /// moments[r-1] = f^{(r)}(1), the r-th factorial moment of the offspring law.
  std::vector<double> moments;
  /// law[k] = P(xi = k); empty when only moments are known.
  std::vector<double> law;
};

/// Unvalidated catalyst entry as read from a config; `site` is a label.
struct CatalystDescription {
  std::string site;
  double alpha = 0.0;
  double beta = 1.0;
  std::vector<double> moments;
  std::vector<double> law;
};

/// Factorial moments E[xi (xi-1) ... (xi-r+1)] for r = 1..n.
std::vector<double> factorial_moments(const std::vector<double>& law, int n);

/// A catalytic branching process: motion chain plus catalysts. Immutable.
class CbpModel {
 public:
  /// Throws UnknownSite, DuplicateSite, AlphaOutOfRange, MomentOrderMissing,
  /// MomentLawMismatch or InvalidConfig.
  static CbpModel make(ChainModel chain, std::vector<Catalyst> catalysts, int n_max);
  static CbpModel make(ChainModel chain, const std::vector<CatalystDescription>& catalysts, int n_max);

  const ChainModel& chain() const { return chain_; }
  const std::vector<Catalyst>& catalysts() const { return catalysts_; }
  const Catalyst& catalyst(std::size_t i) const { return catalysts_.at(i); }
  std::size_t size() const { return catalysts_.size(); }
  int n_max() const { return n_max_; }

  const SiteSet& catalyst_set() const { return site_set_; }
  std::vector<Site> sites() const;
  /// Index of the catalyst at `s`, if any.
  std::optional<std::size_t> catalyst_index(const Site& s) const;

  double mean(std::size_t i) const { return catalysts_[i].moments.at(0); }
  /// f_i^{(r)}(1); throws MomentOrderMissing beyond n_max.
  double factorial_moment(std::size_t i, int r) const;
  /// False iff the offspring law of catalyst i is the point mass at 1.
  bool nondegenerate_law(std::size_t i) const;

  /// Copy with offspring means replaced; higher moments and laws are kept
  /// only if still consistent, otherwise dropped (analysis-only model).
  CbpModel with_means(const std::vector<double>& means) const;

 private:
  CbpModel(ChainModel chain) : chain_(std::move(chain)) {}

  ChainModel chain_;
  std::vector<Catalyst> catalysts_;
  SiteSet site_set_;
  int n_max_ = 1;
};

namespace model {

/// Parses a JSON config document (`chain`, `catalysts`, `n_max`; other keys
/// such as `run` are ignored). Throws InvalidConfig on malformed input.
CbpModel load_model(std::string_view json_text);
CbpModel load_model_file(const std::filesystem::path& path);
ChainModel load_chain(std::string_view json_text);

/// Serialises the model so that load_model(dump_model(m)) reproduces m
/// exactly, numeric fields included.
std::string dump_model(const CbpModel& m);

}  // namespace model
}  // namespace cbp
