#include "cbp/chain.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <unordered_set>

#include "cbp/error.hpp"
#include "truncation.hpp"

namespace cbp {

std::size_t SiteHash::operator()(const Site& s) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (std::int64_t c : s.coords) {
    h ^= std::hash<std::int64_t>{}(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

SiteSet make_site_set(std::vector<Site> sites) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

bool contains(const SiteSet& set, const Site& s) {
  return std::binary_search(set.begin(), set.end(), s);
}

namespace {

bool strongly_connected(const Eigen::MatrixXd& q) {
  const auto n = q.rows();
  auto reach_all = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      for (Eigen::Index y = 0; y < n; ++y) {
        const double rate = transpose ? q(y, x) : q(x, y);
        if (y != x && rate > 0.0 && !seen[static_cast<std::size_t>(y)]) {
          seen[static_cast<std::size_t>(y)] = 1;
          ++count;
          stack.push_back(y);
        }
      }
    }
    return count == n;
  };
  return reach_all(false) && reach_all(true);
}

// The kernel generates Z^d iff every unit vector (and its negative) is
// reachable. Paths are searched inside a box a few jump lengths wide, which
// suffices for the small kernels this tool is meant for.
bool kernel_generates_lattice(int dim, const std::vector<Jump>& kernel, std::int64_t max_jump) {
  const std::int64_t radius = 4 * max_jump + 2;
  std::vector<std::int64_t> lo(static_cast<std::size_t>(dim), -radius), hi(static_cast<std::size_t>(dim), radius);
  detail::Box box(lo, hi);
  if (box.size() > 5'000'000) return true;  // too large to search; accept
  std::vector<char> seen(box.size(), 0);
  Site origin(std::vector<std::int64_t>(static_cast<std::size_t>(dim), 0));
  std::deque<std::size_t> queue{*box.index(origin)};
  seen[queue.front()] = 1;
  while (!queue.empty()) {
    const Site s = box.site(queue.front());
    queue.pop_front();
    for (const Jump& j : kernel) {
      Site t = s;
      for (int d = 0; d < dim; ++d) t.coords[static_cast<std::size_t>(d)] += j.offset[static_cast<std::size_t>(d)];
      if (auto idx = box.index(t); idx && !seen[*idx]) {
        seen[*idx] = 1;
        queue.push_back(*idx);
      }
    }
  }
  for (int d = 0; d < dim; ++d) {
    for (std::int64_t sign : {1, -1}) {
      Site e = origin;
      e.coords[static_cast<std::size_t>(d)] = sign;
      if (!seen[*box.index(e)]) return false;
    }
  }
  return true;
}

}  // namespace

ChainModel ChainModel::validate(ChainDescription raw) {
  ChainModel m;
  if (raw.kind == ChainKind::FiniteExplicit) {
    const std::size_t n = raw.generator.size();
    if (n == 0) fail(ErrorCode::EmptyModel, "generator has no states");
    if (raw.labels.empty()) {
      for (std::size_t i = 0; i < n; ++i) raw.labels.push_back(std::to_string(i + 1));
    }
    if (raw.labels.size() != n) fail(ErrorCode::InvalidConfig, "number of state labels differs from generator size");
    {
      auto sorted = raw.labels;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        fail(ErrorCode::InvalidConfig, "duplicate state label");
      }
    }
    m.q_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (raw.generator[i].size() != n) fail(ErrorCode::InvalidConfig, "generator is not square");
      double sum = 0.0, scale = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = raw.generator[i][j];
        if (!std::isfinite(v)) fail(ErrorCode::InvalidConfig, "generator entry is not finite");
        if (i != j && v < 0.0) {
          fail(ErrorCode::NegativeOffDiagonal, "q(" + raw.labels[i] + "," + raw.labels[j] + ") < 0");
        }
        m.q_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        sum += v;
        scale += std::abs(v);
      }
      if (std::abs(sum) > 1e-12 * std::max(1.0, scale)) {
        fail(ErrorCode::RowSumNonzero, "row " + raw.labels[i] + " sums to " + std::to_string(sum));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(m.q_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) < 0.0)) {
        fail(ErrorCode::NotIrreducible, "state " + raw.labels[i] + " is absorbing");
      }
    }
    if (!strongly_connected(m.q_)) fail(ErrorCode::NotIrreducible, "transition graph is not strongly connected");
    m.exit_rate_ = 0.0;
    m.symmetric_ = m.q_.isApprox(m.q_.transpose(), 0.0);
    m.max_jump_ = 0;
  } else {
    if (raw.dim < 1) fail(ErrorCode::InvalidConfig, "lattice dimension must be positive");
    if (raw.kernel.empty()) fail(ErrorCode::EmptyModel, "jump kernel is empty");
    std::map<std::vector<std::int64_t>, double> merged;
    for (const Jump& j : raw.kernel) {
      if (j.offset.size() != static_cast<std::size_t>(raw.dim)) {
        fail(ErrorCode::InvalidConfig, "kernel offset has wrong dimension");
      }
      if (std::all_of(j.offset.begin(), j.offset.end(), [](std::int64_t c) { return c == 0; })) {
        fail(ErrorCode::InvalidConfig, "kernel offset must be nonzero");
      }
      if (!std::isfinite(j.rate)) fail(ErrorCode::InvalidConfig, "kernel rate is not finite");
      if (j.rate < 0.0) fail(ErrorCode::NegativeOffDiagonal, "negative kernel rate");
      if (j.rate > 0.0) merged[j.offset] += j.rate;
    }
    if (merged.empty()) fail(ErrorCode::NotIrreducible, "kernel has no positive rate");
    raw.kernel.clear();
    double total = 0.0;
    std::int64_t max_jump = 0;
    for (const auto& [off, rate] : merged) {
      raw.kernel.push_back(Jump{off, rate});
      total += rate;
      for (std::int64_t c : off) max_jump = std::max(max_jump, std::abs(c));
    }
    bool symmetric = true;
    for (const auto& [off, rate] : merged) {
      std::vector<std::int64_t> neg(off.size());
      std::transform(off.begin(), off.end(), neg.begin(), [](std::int64_t c) { return -c; });
      auto it = merged.find(neg);
      if (it == merged.end() || it->second != rate) symmetric = false;
    }
    if (!kernel_generates_lattice(raw.dim, raw.kernel, max_jump)) {
      fail(ErrorCode::NotIrreducible, "kernel support does not generate the lattice");
    }
    const auto& t = raw.truncation;
    if (t.initial_radius < 1 || t.growth < 2 || !(t.tolerance > 0.0) || t.max_rounds < 2 || t.max_states < 1) {
      fail(ErrorCode::InvalidConfig, "invalid truncation policy");
    }
    m.exit_rate_ = total;
    m.symmetric_ = symmetric;
    m.max_jump_ = max_jump;
  }
  m.desc_ = std::move(raw);
  return m;
}

bool ChainModel::contains(const Site& s) const {
  if (is_finite()) {
    return s.coords.size() == 1 && s.coords[0] >= 0 && s.coords[0] < static_cast<std::int64_t>(num_states());
  }
  return s.coords.size() == static_cast<std::size_t>(desc_.dim);
}

double ChainModel::q(const Site& x, const Site& y) const {
  if (is_finite()) {
    return q_(static_cast<Eigen::Index>(x.as_index()), static_cast<Eigen::Index>(y.as_index()));
  }
  if (x == y) return -exit_rate_;
  for (const Jump& j : desc_.kernel) {
    bool match = true;
    for (std::size_t d = 0; d < j.offset.size(); ++d) {
      if (x.coords[d] + j.offset[d] != y.coords[d]) {
        match = false;
        break;
      }
    }
    if (match) return j.rate;
  }
  return 0.0;
}

double ChainModel::exit_rate(const Site& x) const {
  if (is_finite()) return -q_(static_cast<Eigen::Index>(x.as_index()), static_cast<Eigen::Index>(x.as_index()));
  return exit_rate_;
}

std::vector<std::pair<Site, double>> ChainModel::jumps(const Site& x) const {
  std::vector<std::pair<Site, double>> out;
  if (is_finite()) {
    const auto i = static_cast<Eigen::Index>(x.as_index());
    for (Eigen::Index j = 0; j < q_.cols(); ++j) {
      if (j != i && q_(i, j) > 0.0) out.emplace_back(Site::index(static_cast<std::size_t>(j)), q_(i, j));
    }
    return out;
  }
  for (const Jump& j : desc_.kernel) {
    Site y = x;
    for (std::size_t d = 0; d < j.offset.size(); ++d) y.coords[d] += j.offset[d];
    out.emplace_back(std::move(y), j.rate);
  }
  return out;
}

std::string ChainModel::label(const Site& s) const {
  if (is_finite()) return desc_.labels.at(s.as_index());
  std::string out;
  for (std::size_t d = 0; d < s.coords.size(); ++d) {
    if (d) out += ',';
    out += std::to_string(s.coords[d]);
  }
  return out;
}

std::optional<Site> ChainModel::parse_site(std::string_view text) const {
  if (is_finite()) {
    for (std::size_t i = 0; i < desc_.labels.size(); ++i) {
      if (desc_.labels[i] == text) return Site::index(i);
    }
    return std::nullopt;
  }
  std::vector<std::int64_t> coords;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = std::min(text.find(',', pos), text.size());
    std::string_view part = text.substr(pos, next - pos);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty()) return std::nullopt;
    coords.push_back(v);
    pos = next + 1;
  }
  if (coords.size() != static_cast<std::size_t>(desc_.dim)) return std::nullopt;
  return Site(std::move(coords));
}

namespace chain {
namespace {

struct RawTransforms {
  std::vector<double> bar, dbar;
};

void check_sites(const ChainModel& model, std::span<const Site> starts, const Site& y, const SiteSet& taboo) {
  auto check = [&](const Site& s) {
    if (!model.contains(s)) fail(ErrorCode::UnknownSite, "site is not a state of the chain");
  };
  for (const Site& s : starts) check(s);
  check(y);
  for (const Site& s : taboo) check(s);
  if (contains(taboo, y)) fail(ErrorCode::InvalidArgument, "target state lies in the taboo set");
}

// Finite chain: solve (lambda I - Q_UU) u = Q_{U,y} once, then first-jump
// decomposition from every start.
RawTransforms finite_transforms(const ChainModel& model, std::span<const Site> starts, const Site& y,
                                const SiteSet& taboo, double lambda, bool with_derivative) {
  const Eigen::MatrixXd& q = model.generator();
  const auto n = static_cast<std::size_t>(q.rows());
  const std::size_t yi = y.as_index();
  std::vector<long> pos(n, -1);
  std::vector<std::size_t> unknowns;
  for (std::size_t z = 0; z < n; ++z) {
    if (z == yi || contains(taboo, Site::index(z))) continue;
    pos[z] = static_cast<long>(unknowns.size());
    unknowns.push_back(z);
  }
  const auto m = static_cast<Eigen::Index>(unknowns.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m), du = Eigen::VectorXd::Zero(m);
  if (m > 0) {
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto zr = static_cast<Eigen::Index>(unknowns[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < m; ++c) {
        a(r, c) = -q(zr, static_cast<Eigen::Index>(unknowns[static_cast<std::size_t>(c)]));
      }
      a(r, r) += lambda;
      b(r) = q(zr, static_cast<Eigen::Index>(yi));
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (!(std::abs(lu.determinant()) > 0.0)) fail(ErrorCode::SingularSystem, "singular hitting system");
    u = lu.solve(b);
    if (with_derivative) du = -lu.solve(u);
  }
  auto ext = [&](const Eigen::VectorXd& v, std::size_t z, double at_y) {
    if (z == yi) return at_y;
    return pos[z] < 0 ? 0.0 : v(pos[z]);
  };
  RawTransforms out;
  for (const Site& s : starts) {
    const std::size_t x = s.as_index();
    const double e = -q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x));
    double v = 0.0, dv = 0.0;
    for (std::size_t z = 0; z < n; ++z) {
      if (z == x) continue;
      const double p = q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(z)) / e;
      if (p == 0.0) continue;
      v += p * ext(u, z, 1.0);
      if (with_derivative) dv += p * ext(du, z, 0.0);
    }
    out.bar.push_back(v);
    out.dbar.push_back(dv);
  }
  return out;
}

// One truncation round on the lattice: box of `radius` around the sites of
// interest, states outside the box absorbing with value 0.
RawTransforms lattice_round(const ChainModel& model, std::span<const Site> starts, const Site& y,
                            const SiteSet& taboo, double lambda, bool with_derivative, std::int64_t radius) {
  std::vector<Site> anchors(starts.begin(), starts.end());
  anchors.push_back(y);
  anchors.insert(anchors.end(), taboo.begin(), taboo.end());
  const detail::Box box = detail::Box::around(anchors, radius);
  const std::size_t n = box.size();
  const auto& kernel = model.description().kernel;
  const double e = model.exit_rate(y);
  const std::size_t yi = *box.index(y);
  std::vector<char> fixed(n, 0);
  fixed[yi] = 1;
  for (const Site& h : taboo) fixed[*box.index(h)] = 1;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(n * (kernel.size() + 1));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  b(static_cast<Eigen::Index>(yi)) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (fixed[i]) {
      trips.emplace_back(r, r, 1.0);
      continue;
    }
    trips.emplace_back(r, r, lambda + e);
    const Site z = box.site(i);
    for (const Jump& j : kernel) {
      Site t = z;
      for (std::size_t d = 0; d < j.offset.size(); ++d) t.coords[d] += j.offset[d];
      const auto ti = box.index(t);
      if (!ti) continue;
      if (*ti == yi) {
        b(r) += j.rate;
      } else if (!fixed[*ti]) {
        trips.emplace_back(r, static_cast<Eigen::Index>(*ti), -j.rate);
      }
    }
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(trips.begin(), trips.end());
  detail::LinearSystem sys(std::move(a), model.kernel_symmetric());
  const Eigen::VectorXd u = sys.solve(b);
  Eigen::VectorXd du;
  if (with_derivative) {
    Eigen::VectorXd rhs = -u;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) rhs(static_cast<Eigen::Index>(i)) = 0.0;
    }
    du = sys.solve(rhs);
  }
  RawTransforms out;
  for (const Site& s : starts) {
    double v = 0.0, dv = 0.0;
    for (const Jump& j : kernel) {
      Site t = s;
      for (std::size_t d = 0; d < j.offset.size(); ++d) t.coords[d] += j.offset[d];
      const auto ti = box.index(t);
      if (!ti) continue;
      const double p = j.rate / e;
      v += p * u(static_cast<Eigen::Index>(*ti));
      if (with_derivative) dv += p * du(static_cast<Eigen::Index>(*ti));
    }
    out.bar.push_back(v);
    out.dbar.push_back(dv);
  }
  return out;
}

// Radii R0, R0*g, ... until every tracked component settles, the state budget
// is exhausted or max_rounds is reached. Calls `round(radius)` and feeds the
// returned components to a LimitTracker.
template <typename RoundFn>
detail::LimitTracker run_rounds(const ChainModel& model, std::span<const Site> anchors, std::size_t components,
                                std::span<const std::size_t> required, std::span<const std::size_t> optional,
                                RoundFn&& round) {
  const TruncationPolicy& pol = model.truncation();
  detail::LimitTracker tracker(components, static_cast<double>(pol.growth), pol.tolerance);
  std::int64_t radius = pol.initial_radius;
  for (int r = 0; r < pol.max_rounds; ++r) {
    const detail::Box box = detail::Box::around(anchors, radius);
    if (box.size() > pol.max_states) break;
    const std::vector<double> raw = round(radius);
    tracker.push(raw);
    if (tracker.all_settled(required, false) && tracker.all_settled(optional, true)) break;
    if (radius > std::numeric_limits<std::int64_t>::max() / pol.growth) break;
    radius *= pol.growth;
  }
  return tracker;
}

RawTransforms lattice_transforms(const ChainModel& model, std::span<const Site> starts, const Site& y,
                                 const SiteSet& taboo, double lambda, bool with_derivative) {
  const std::size_t k = starts.size();
  std::vector<Site> anchors(starts.begin(), starts.end());
  anchors.push_back(y);
  anchors.insert(anchors.end(), taboo.begin(), taboo.end());
  std::vector<std::size_t> values(k), derivs;
  for (std::size_t i = 0; i < k; ++i) values[i] = i;
  if (with_derivative) {
    for (std::size_t i = 0; i < k; ++i) derivs.push_back(k + i);
  }
  // At lambda > 0 the derivative must converge; at lambda = 0 an infinite
  // mean is legitimate and shows up as divergence.
  const bool deriv_may_diverge = lambda == 0.0;
  std::vector<std::size_t> required = values, optional;
  (deriv_may_diverge ? optional : required).insert((deriv_may_diverge ? optional : required).end(),
                                                   derivs.begin(), derivs.end());
  auto tracker = run_rounds(model, anchors, with_derivative ? 2 * k : k, required, optional,
                            [&](std::int64_t radius) {
                              RawTransforms r = lattice_round(model, starts, y, taboo, lambda, with_derivative, radius);
                              std::vector<double> v = r.bar;
                              if (with_derivative) v.insert(v.end(), r.dbar.begin(), r.dbar.end());
                              return v;
                            });
  RawTransforms out;
  for (std::size_t i = 0; i < k; ++i) {
    if (tracker.rounds() == 0 || tracker.state(i) != detail::LimitTracker::State::Converged) {
      fail(ErrorCode::TruncationNotConverged,
           "taboo transform did not stabilise under truncation (lambda=" + std::to_string(lambda) + ")");
    }
    out.bar.push_back(std::clamp(tracker.estimate(i), 0.0, 1.0));
  }
  for (std::size_t i = 0; i < k && with_derivative; ++i) {
    if (tracker.state(k + i) == detail::LimitTracker::State::Converged) {
      out.dbar.push_back(std::min(0.0, tracker.estimate(k + i)));
    } else if (deriv_may_diverge) {
      out.dbar.push_back(-std::numeric_limits<double>::infinity());
    } else {
      fail(ErrorCode::TruncationNotConverged, "derivative of taboo transform did not stabilise under truncation");
    }
  }
  if (!with_derivative) out.dbar.assign(k, 0.0);
  return out;
}

RawTransforms raw_transforms(const ChainModel& model, std::span<const Site> starts, const Site& y,
                             const SiteSet& taboo, double lambda, bool with_derivative) {
  if (model.is_finite()) return finite_transforms(model, starts, y, taboo, lambda, with_derivative);
  return lattice_transforms(model, starts, y, taboo, lambda, with_derivative);
}

}  // namespace

TransformBatch transforms(const ChainModel& model, std::span<const Site> starts, const Site& y,
                          const SiteSet& taboo, double lambda, bool with_derivative, bool with_total) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  check_sites(model, starts, y, taboo);
  const RawTransforms raw = raw_transforms(model, starts, y, taboo, lambda, with_derivative);
  RawTransforms zero;
  if (with_total) zero = lambda == 0.0 ? raw : raw_transforms(model, starts, y, taboo, 0.0, false);

  TransformBatch out;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const Site& x = starts[i];
    const double e = model.exit_rate(x);
    const double r = e / (lambda + e);
    const double dr = -e / ((lambda + e) * (lambda + e));
    TabooLst bar;
    // Transforms are nonnegative; drop round-off below zero.
    bar.value = std::max(0.0, raw.bar[i]);
    bar.dvalue = raw.dbar[i];
    bar.atom0 = x == y ? 0.0 : model.q(x, y) / e;
    bar.total = with_total ? std::max(0.0, zero.bar[i]) : 0.0;
    TabooLst hit;
    hit.value = r * bar.value;
    hit.dvalue = std::isinf(bar.dvalue) ? bar.dvalue : dr * bar.value + r * bar.dvalue;
    hit.atom0 = 0.0;
    hit.total = bar.total;
    out.bar.push_back(bar);
    out.hit.push_back(hit);
  }
  return out;
}

TabooLst hit_lst(const ChainModel& model, const Site& x, const Site& y, const SiteSet& taboo, double lambda) {
  return transforms(model, std::span<const Site>(&x, 1), y, taboo, lambda, true, true).hit.front();
}

TabooLst bar_hit_lst(const ChainModel& model, const Site& x, const Site& y, const SiteSet& taboo, double lambda) {
  return transforms(model, std::span<const Site>(&x, 1), y, taboo, lambda, true, true).bar.front();
}

namespace {

double lattice_green_round(const ChainModel& model, const Site& x, const Site& y, double lambda,
                           std::int64_t radius) {
  const std::array<Site, 2> anchors{x, y};
  const detail::Box box = detail::Box::around(anchors, radius);
  const std::size_t n = box.size();
  const auto& kernel = model.description().kernel;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(n * (kernel.size() + 1));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    trips.emplace_back(r, r, lambda + model.exit_rate(y));
    const Site z = box.site(i);
    for (const Jump& j : kernel) {
      Site t = z;
      for (std::size_t d = 0; d < j.offset.size(); ++d) t.coords[d] += j.offset[d];
      if (const auto ti = box.index(t)) trips.emplace_back(r, static_cast<Eigen::Index>(*ti), -j.rate);
    }
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(trips.begin(), trips.end());
  detail::LinearSystem sys(std::move(a), model.kernel_symmetric());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  b(static_cast<Eigen::Index>(*box.index(y))) = 1.0;
  return sys.solve(b)(static_cast<Eigen::Index>(*box.index(x)));
}

}  // namespace

double green_lst(const ChainModel& model, const Site& x, const Site& y, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  if (!model.contains(x) || !model.contains(y)) fail(ErrorCode::UnknownSite, "site is not a state of the chain");
  if (model.is_finite()) {
    if (lambda == 0.0) fail(ErrorCode::GreenDivergent, "finite chains are recurrent; G_0 is infinite");
    const Eigen::MatrixXd& q = model.generator();
    Eigen::MatrixXd a = -q;
    a.diagonal().array() += lambda;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(q.rows());
    b(static_cast<Eigen::Index>(y.as_index())) = 1.0;
    return Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(b)(static_cast<Eigen::Index>(x.as_index()));
  }
  const std::array<Site, 2> anchors{x, y};
  const std::array<std::size_t, 1> required{0};
  auto tracker = run_rounds(model, anchors, 1, lambda == 0.0 ? std::span<const std::size_t>() : required,
                            lambda == 0.0 ? std::span<const std::size_t>(required) : std::span<const std::size_t>(),
                            [&](std::int64_t radius) {
                              return std::vector<double>{lattice_green_round(model, x, y, lambda, radius)};
                            });
  if (tracker.rounds() > 0 && tracker.state(0) == detail::LimitTracker::State::Converged) return tracker.estimate(0);
  if (lambda == 0.0) fail(ErrorCode::GreenDivergent, "G_0 does not stabilise under truncation (recurrent chain)");
  fail(ErrorCode::TruncationNotConverged, "Green function did not stabilise under truncation");
}

RecurrenceReport recurrence(const ChainModel& model) {
  RecurrenceReport rep;
  if (model.is_finite()) {
    rep.recurrent = true;
    if (model.description().recurrent_override) {
      rep.overridden = true;
      rep.recurrent = *model.description().recurrent_override;
    }
    return rep;
  }
  if (model.description().recurrent_override) {
    rep.overridden = true;
    rep.recurrent = *model.description().recurrent_override;
    return rep;
  }
  const Site origin(std::vector<std::int64_t>(static_cast<std::size_t>(model.dim()), 0));
  const std::array<Site, 1> anchors{origin};
  const std::array<std::size_t, 1> comp{0};
  auto tracker = run_rounds(model, anchors, 1, {}, comp, [&](std::int64_t radius) {
    const double g = lattice_green_round(model, origin, origin, 0.0, radius);
    rep.green_by_radius.emplace_back(radius, g);
    return std::vector<double>{g};
  });
  if (tracker.rounds() > 0 && tracker.state(0) == detail::LimitTracker::State::Converged) {
    rep.recurrent = false;
    rep.green_limit = tracker.estimate(0);
    return rep;
  }
  const auto& h = rep.green_by_radius;
  if (h.size() >= 2) {
    const double prev = h[h.size() - 2].second, last = h.back().second;
    if (last > 1.1 * prev) {
      rep.recurrent = true;
      return rep;
    }
  }
  fail(ErrorCode::Undecided, "G_0 neither stabilises nor diverges under truncation");
}

bool is_recurrent(const ChainModel& model) { return recurrence(model).recurrent; }

}  // namespace chain
}  // namespace cbp
