#include "cbp/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cbp/error.hpp"

namespace cbp {

using nlohmann::json;

std::vector<double> factorial_moments(const std::vector<double>& law, int n) {
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)), 0.0);
  for (std::size_t k = 0; k < law.size(); ++k) {
    double falling = 1.0;
    for (int r = 1; r <= n; ++r) {
      falling *= static_cast<double>(k) - (r - 1);
      if (falling == 0.0) break;
      out[static_cast<std::size_t>(r - 1)] += law[k] * falling;
    }
  }
  return out;
}

namespace {

void check_law(const std::vector<double>& law) {
  double sum = 0.0;
  for (double p : law) {
    if (!(p >= 0.0) || !std::isfinite(p)) fail(ErrorCode::InvalidConfig, "offspring probabilities must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) fail(ErrorCode::InvalidConfig, "offspring probabilities do not sum to 1");
}

}  // namespace

CbpModel CbpModel::make(ChainModel chain, std::vector<Catalyst> catalysts, int n_max) {
  if (catalysts.empty()) fail(ErrorCode::InvalidConfig, "at least one catalyst is required");
  if (n_max < 1) fail(ErrorCode::InvalidConfig, "n_max must be >= 1");
  CbpModel m(std::move(chain));
  for (std::size_t i = 0; i < catalysts.size(); ++i) {
    Catalyst& c = catalysts[i];
    if (!m.chain_.contains(c.site)) fail(ErrorCode::UnknownSite, "catalyst site is not a state of the chain");
    const std::string name = m.chain_.label(c.site);
    if (!(c.alpha >= 0.0 && c.alpha < 1.0)) {
      fail(ErrorCode::AlphaOutOfRange, "alpha at " + name + " must lie in [0, 1)");
    }
    if (!(c.beta > 0.0) || !std::isfinite(c.beta)) fail(ErrorCode::InvalidConfig, "beta at " + name + " must be > 0");
    for (double v : c.moments) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        fail(ErrorCode::InvalidConfig, "factorial moments at " + name + " must be finite and >= 0");
      }
    }
    if (!c.law.empty()) {
      check_law(c.law);
      const int want = std::max<int>(n_max, static_cast<int>(c.moments.size()));
      std::vector<double> from_law = factorial_moments(c.law, want);
      for (std::size_t r = 0; r < c.moments.size(); ++r) {
        if (std::abs(c.moments[r] - from_law[r]) > 1e-10 * std::max(1.0, std::abs(from_law[r]))) {
          fail(ErrorCode::MomentLawMismatch, "factorial moment " + std::to_string(r + 1) + " at " + name +
                                                 " disagrees with the offspring law");
        }
      }
      c.moments = std::move(from_law);
    }
    if (c.moments.size() < static_cast<std::size_t>(n_max)) {
      fail(ErrorCode::MomentOrderMissing, "catalyst " + name + " lacks factorial moments up to order " +
                                              std::to_string(n_max));
    }
  }
  std::vector<Site> sites;
  for (const Catalyst& c : catalysts) sites.push_back(c.site);
  m.site_set_ = make_site_set(sites);
  if (m.site_set_.size() != sites.size()) fail(ErrorCode::DuplicateSite, "catalyst sites must be distinct");
  m.catalysts_ = std::move(catalysts);
  m.n_max_ = n_max;
  return m;
}

CbpModel CbpModel::make(ChainModel chain, const std::vector<CatalystDescription>& catalysts, int n_max) {
  std::vector<Catalyst> resolved;
  for (const CatalystDescription& d : catalysts) {
    auto site = chain.parse_site(d.site);
    if (!site) fail(ErrorCode::UnknownSite, "unknown catalyst site '" + d.site + "'");
    resolved.push_back(Catalyst{*site, d.alpha, d.beta, d.moments, d.law});
  }
  return make(std::move(chain), std::move(resolved), n_max);
}

std::vector<Site> CbpModel::sites() const {
  std::vector<Site> out;
  for (const Catalyst& c : catalysts_) out.push_back(c.site);
  return out;
}

std::optional<std::size_t> CbpModel::catalyst_index(const Site& s) const {
  for (std::size_t i = 0; i < catalysts_.size(); ++i) {
    if (catalysts_[i].site == s) return i;
  }
  return std::nullopt;
}

double CbpModel::factorial_moment(std::size_t i, int r) const {
  const Catalyst& c = catalysts_.at(i);
  if (r < 1 || static_cast<std::size_t>(r) > c.moments.size()) {
    fail(ErrorCode::MomentOrderMissing, "factorial moment of order " + std::to_string(r) + " is not available");
  }
  return c.moments[static_cast<std::size_t>(r - 1)];
}

bool CbpModel::nondegenerate_law(std::size_t i) const {
  const Catalyst& c = catalysts_.at(i);
  if (!c.law.empty()) {
    for (std::size_t k = 0; k < c.law.size(); ++k) {
      if (k != 1 && c.law[k] > 0.0) return true;
    }
    return false;
  }
  // E xi = 1 and E xi(xi-1) = 0 force xi = 1 almost surely.
  return c.moments[0] != 1.0 || (c.moments.size() >= 2 && c.moments[1] > 0.0);
}

CbpModel CbpModel::with_means(const std::vector<double>& means) const {
  if (means.size() != catalysts_.size()) fail(ErrorCode::InvalidArgument, "one mean per catalyst is required");
  CbpModel out = *this;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (!(means[i] >= 0.0) || !std::isfinite(means[i])) fail(ErrorCode::InvalidArgument, "offspring means must be >= 0");
    Catalyst& c = out.catalysts_[i];
    if (c.moments[0] != means[i]) {
      c.moments[0] = means[i];
      c.law.clear();
    }
  }
  return out;
}

namespace model {
namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

std::string site_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  if (j.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(j.at(i).get<std::int64_t>());
    }
    return out;
  }
  fail(ErrorCode::InvalidConfig, "catalyst site must be a label, an integer or a coordinate array");
}

std::vector<double> parse_law(const json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "law must be an array or an object {count: probability}");
  std::vector<double> law;
  for (const auto& [key, value] : j.items()) {
    std::size_t pos = 0;
    long k = -1;
    try {
      k = std::stol(key, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != key.size() || k < 0) fail(ErrorCode::InvalidConfig, "law keys must be offspring counts");
    if (law.size() <= static_cast<std::size_t>(k)) law.resize(static_cast<std::size_t>(k) + 1, 0.0);
    law[static_cast<std::size_t>(k)] += value.get<double>();
  }
  return law;
}

ChainDescription parse_chain(const json& c) {
  ChainDescription d;
  if (c.contains("lattice")) {
    const json& l = c.at("lattice");
    d.kind = ChainKind::LatticeWalk;
    d.dim = l.at("dim").get<int>();
    for (const json& k : l.at("kernel")) {
      d.kernel.push_back(Jump{k.at("offset").get<std::vector<std::int64_t>>(), k.at("rate").get<double>()});
    }
    if (l.contains("truncation")) {
      const json& t = l.at("truncation");
      TruncationPolicy& p = d.truncation;
      p.initial_radius = get_or<std::int64_t>(t, "initial_radius", p.initial_radius);
      p.growth = get_or<std::int64_t>(t, "growth", p.growth);
      p.tolerance = get_or<double>(t, "tolerance", p.tolerance);
      p.max_states = get_or<std::size_t>(t, "max_states", p.max_states);
      p.max_rounds = get_or<int>(t, "max_rounds", p.max_rounds);
    }
  } else if (c.contains("generator")) {
    d.kind = ChainKind::FiniteExplicit;
    d.generator = c.at("generator").get<std::vector<std::vector<double>>>();
    if (c.contains("states")) {
      for (const json& s : c.at("states")) d.labels.push_back(site_text(s));
    }
  } else {
    fail(ErrorCode::InvalidConfig, "chain needs either `generator` or `lattice`");
  }
  if (c.contains("recurrent")) d.recurrent_override = c.at("recurrent").get<bool>();
  return d;
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what());
  }
}

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("bad config field: ") + e.what());
  }
}

}  // namespace

ChainModel load_chain(std::string_view json_text) {
  const json doc = parse_document(json_text);
  return guarded([&] {
    const json& c = doc.contains("chain") ? doc.at("chain") : doc;
    return ChainModel::validate(parse_chain(c));
  });
}

CbpModel load_model(std::string_view json_text) {
  const json doc = parse_document(json_text);
  return guarded([&] {
    if (!doc.is_object() || !doc.contains("chain") || !doc.contains("catalysts")) {
      fail(ErrorCode::InvalidConfig, "config needs `chain` and `catalysts` sections");
    }
    ChainModel chain = ChainModel::validate(parse_chain(doc.at("chain")));
    std::vector<CatalystDescription> cats;
    int n_max_default = 4;
    for (const json& c : doc.at("catalysts")) {
      CatalystDescription d;
      d.site = site_text(c.at("site"));
      d.alpha = c.at("alpha").get<double>();
      d.beta = c.at("beta").get<double>();
      if (c.contains("moments")) d.moments = c.at("moments").get<std::vector<double>>();
      if (c.contains("law")) d.law = parse_law(c.at("law"));
      if (d.moments.empty() && d.law.empty()) {
        fail(ErrorCode::MomentOrderMissing, "catalyst " + d.site + " needs `moments` or `law`");
      }
      if (d.law.empty()) n_max_default = std::min<int>(n_max_default, static_cast<int>(d.moments.size()));
      cats.push_back(std::move(d));
    }
    const int n_max = doc.contains("n_max") ? doc.at("n_max").get<int>() : std::max(1, n_max_default);
    return CbpModel::make(std::move(chain), cats, n_max);
  });
}

CbpModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidConfig, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

std::string dump_model(const CbpModel& m) {
  const ChainModel& ch = m.chain();
  const ChainDescription& d = ch.description();
  json chain;
  if (ch.is_finite()) {
    chain["states"] = d.labels;
    chain["generator"] = d.generator;
  } else {
    json kernel = json::array();
    for (const Jump& j : d.kernel) kernel.push_back({{"offset", j.offset}, {"rate", j.rate}});
    const TruncationPolicy& t = d.truncation;
    chain["lattice"] = {{"dim", d.dim},
                        {"kernel", kernel},
                        {"truncation",
                         {{"initial_radius", t.initial_radius},
                          {"growth", t.growth},
                          {"tolerance", t.tolerance},
                          {"max_states", t.max_states},
                          {"max_rounds", t.max_rounds}}}};
  }
  if (d.recurrent_override) chain["recurrent"] = *d.recurrent_override;
  json cats = json::array();
  for (const Catalyst& c : m.catalysts()) {
    json e{{"site", ch.label(c.site)}, {"alpha", c.alpha}, {"beta", c.beta}, {"moments", c.moments}};
    if (!c.law.empty()) e["law"] = c.law;
    cats.push_back(std::move(e));
  }
  json doc{{"chain", chain}, {"catalysts", cats}, {"n_max", m.n_max()}};
  return doc.dump(2);
}

}  // namespace model
}  // namespace cbp
