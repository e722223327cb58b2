#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cbp {

/// A state of the motion chain. Finite chains use a single coordinate (the
/// state index); lattice walks use one coordinate per dimension.
struct Site {
  std::vector<std::int64_t> coords;

  Site() = default;
  explicit Site(std::vector<std::int64_t> c) : coords(std::move(c)) {}
  static Site index(std::size_t i) { return Site({static_cast<std::int64_t>(i)}); }

  std::size_t as_index() const { return static_cast<std::size_t>(coords.at(0)); }

  friend auto operator<=>(const Site&, const Site&) = default;
  friend bool operator==(const Site&, const Site&) = default;
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept;
};

/// Sorted, duplicate-free set of sites (taboo sets are small).
using SiteSet = std::vector<Site>;
SiteSet make_site_set(std::vector<Site> sites);
bool contains(const SiteSet& set, const Site& s);

enum class ChainKind { FiniteExplicit, LatticeWalk };

struct Jump {
  std::vector<std::int64_t> offset;
  double rate = 0.0;
};

/// Absorbing-box truncation for lattice walks: states farther than the
/// current radius from the sites of interest are killed.
struct TruncationPolicy {
  std::int64_t initial_radius = 8;
  std::int64_t growth = 2;
  double tolerance = 1e-8;
  std::size_t max_states = 1'000'000;
  int max_rounds = 16;
};

/// Unvalidated chain description as read from a config.
struct ChainDescription {
  ChainKind kind = ChainKind::FiniteExplicit;
  // FiniteExplicit
  std::vector<std::string> labels;
  std::vector<std::vector<double>> generator;
  // LatticeWalk
  int dim = 0;
  std::vector<Jump> kernel;
  TruncationPolicy truncation;
  std::optional<bool> recurrent_override;
};

/// A conservative, irreducible continuous-time Markov chain. Immutable once
/// validated.
class ChainModel {
 public:
  /// Throws RowSumNonzero, NegativeOffDiagonal, NotIrreducible or EmptyModel.
  static ChainModel validate(ChainDescription raw);

  ChainKind kind() const { return desc_.kind; }
  bool is_finite() const { return desc_.kind == ChainKind::FiniteExplicit; }
  const ChainDescription& description() const { return desc_; }
  const TruncationPolicy& truncation() const { return desc_.truncation; }
  int dim() const { return desc_.dim; }

  std::size_t num_states() const { return static_cast<std::size_t>(q_.rows()); }
  const Eigen::MatrixXd& generator() const { return q_; }

  bool contains(const Site& s) const;
  double q(const Site& x, const Site& y) const;
  double exit_rate(const Site& x) const;
  /// Off-diagonal transitions out of x with positive rate.
  std::vector<std::pair<Site, double>> jumps(const Site& x) const;
  bool kernel_symmetric() const { return symmetric_; }
  /// Largest |coordinate| of any kernel offset.
  std::int64_t max_jump() const { return max_jump_; }

  std::string label(const Site& s) const;
  /// Accepts a state label (finite) or comma-separated coordinates (lattice).
  std::optional<Site> parse_site(std::string_view text) const;

 private:
  ChainDescription desc_;
  Eigen::MatrixXd q_;
  double exit_rate_ = 0.0;
  bool symmetric_ = true;
  std::int64_t max_jump_ = 0;
};

/// Laplace-Stieltjes transform of a (taboo) hitting time.
struct TabooLst {
  double value = 0.0;   ///< transform at lambda
  double dvalue = 0.0;  ///< d/dlambda; -inf when the mean is infinite at 0
  double atom0 = 0.0;   ///< mass at t = 0
  double total = 0.0;   ///< value at lambda = 0
};

namespace chain {

/// Transform of the hitting time of y from x (holding time at x included)
/// avoiding `taboo`. y must not be in `taboo`.
TabooLst hit_lst(const ChainModel& model, const Site& x, const Site& y,
                 const SiteSet& taboo, double lambda);

/// Same, measured from the first exit out of x.
TabooLst bar_hit_lst(const ChainModel& model, const Site& x, const Site& y,
                     const SiteSet& taboo, double lambda);

/// Batched form of bar_hit_lst/hit_lst for one (y, taboo, lambda): a single
/// factorisation serves every start point. `total` is filled only when
/// `with_total` is set.
struct TransformBatch {
  std::vector<TabooLst> bar;  ///< measured from first exit
  std::vector<TabooLst> hit;  ///< including the holding time at the start
};
TransformBatch transforms(const ChainModel& model, std::span<const Site> starts,
                          const Site& y, const SiteSet& taboo, double lambda,
                          bool with_derivative, bool with_total);

/// Laplace transform of the transition probability, entry (x, y) of
/// (lambda I - Q)^{-1}. lambda = 0 only for transient chains.
double green_lst(const ChainModel& model, const Site& x, const Site& y, double lambda);

struct RecurrenceReport {
  bool recurrent = true;
  bool overridden = false;
  /// (radius, G_0 estimate at the reference site) per truncation round.
  std::vector<std::pair<std::int64_t, double>> green_by_radius;
  double green_limit = 0.0;  ///< extrapolated G_0 when transient
};

/// Throws Undecided when truncation neither stabilises nor diverges.
RecurrenceReport recurrence(const ChainModel& model);
bool is_recurrent(const ChainModel& model);

}  // namespace chain
}  // namespace cbp
