#include "cbp/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include "cbp/error.hpp"

namespace cbp::sim {

namespace {

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return Rng(seq);
}

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double exponential(Rng& rng, double rate) { return std::exponential_distribution<double>(rate)(rng); }

std::size_t pick(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * cumulative.back());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

struct Branching {
  double alpha = 0.0;
  double beta = 1.0;
  std::vector<double> law_cumulative;
};

std::vector<Branching> branching_of(const CbpModel& model) {
  std::vector<Branching> out;
  for (const Catalyst& c : model.catalysts()) {
    Branching b{c.alpha, c.beta, {}};
    double acc = 0.0;
    for (double p : c.law) b.law_cumulative.push_back(acc += p);
    out.push_back(std::move(b));
  }
  return out;
}

// Finite chain: positions are state indices.
struct FiniteMotion {
  using Pos = std::uint32_t;
  std::vector<double> exit;
  std::vector<int> catalyst;
  std::vector<std::vector<double>> cumulative;
  std::vector<std::vector<Pos>> targets;

  explicit FiniteMotion(const CbpModel& model) {
    const ChainModel& chain = model.chain();
    const std::size_t n = chain.num_states();
    exit.resize(n);
    catalyst.assign(n, -1);
    cumulative.resize(n);
    targets.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
      const Site s = Site::index(x);
      exit[x] = chain.exit_rate(s);
      double acc = 0.0;
      for (const auto& [y, rate] : chain.jumps(s)) {
        cumulative[x].push_back(acc += rate);
        targets[x].push_back(static_cast<Pos>(y.as_index()));
      }
    }
    for (std::size_t k = 0; k < model.size(); ++k) catalyst[model.catalyst(k).site.as_index()] = static_cast<int>(k);
  }
  Pos from_site(const Site& s) const { return static_cast<Pos>(s.as_index()); }
  Site to_site(Pos p) const { return Site::index(p); }
  int catalyst_at(Pos p) const { return catalyst[p]; }
  double exit_rate(Pos p) const { return exit[p]; }
  Pos jump(Pos p, Rng& rng) const { return targets[p][pick(cumulative[p], uniform(rng))]; }
};

// Lattice walk: positions are coordinate vectors.
struct LatticeMotion {
  using Pos = Site;
  double exit = 0.0;
  std::vector<Site> catalysts;
  std::vector<double> cumulative;
  std::vector<std::vector<std::int64_t>> offsets;

  explicit LatticeMotion(const CbpModel& model) {
    const ChainModel& chain = model.chain();
    const Site origin(std::vector<std::int64_t>(static_cast<std::size_t>(chain.dim()), 0));
    exit = chain.exit_rate(origin);
    double acc = 0.0;
    for (const auto& [y, rate] : chain.jumps(origin)) {
      cumulative.push_back(acc += rate);
      offsets.push_back(y.coords);
    }
    catalysts = model.sites();
  }
  Pos from_site(const Site& s) const { return s; }
  Site to_site(const Pos& p) const { return p; }
  int catalyst_at(const Pos& p) const {
    for (std::size_t k = 0; k < catalysts.size(); ++k) {
      if (catalysts[k] == p) return static_cast<int>(k);
    }
    return -1;
  }
  double exit_rate(const Pos&) const { return exit; }
  Pos jump(const Pos& p, Rng& rng) const {
    const auto& off = offsets[pick(cumulative, uniform(rng))];
    Pos out = p;
    for (std::size_t d = 0; d < off.size(); ++d) out.coords[d] += off[d];
    return out;
  }
};

template <class Pos>
struct Particle {
  double time;
  Pos pos;
};

template <class Pos>
bool later(const Particle<Pos>& a, const Particle<Pos>& b) {
  return a.time > b.time;
}

// Event-driven trajectory. `record(sample, particles, births, deaths)` is
// called at each sample time. Returns false when the population cap is hit.
template <class Motion, class Record>
bool run(const Motion& motion, const std::vector<Branching>& branching, const SimConfig& config, Rng& rng,
         Record&& record) {
  using Pos = typename Motion::Pos;
  using P = Particle<Pos>;
  auto rate_at = [&](const Pos& p) {
    const int k = motion.catalyst_at(p);
    return k >= 0 ? branching[static_cast<std::size_t>(k)].beta : motion.exit_rate(p);
  };
  std::vector<P> heap;
  const Pos start = motion.from_site(config.start);
  heap.push_back(P{exponential(rng, rate_at(start)), start});
  std::uint64_t births = 0, deaths = 0;
  std::size_t sample = 0;
  const std::size_t samples = config.sample_times.size();
  while (sample < samples) {
    const double next = heap.empty() ? std::numeric_limits<double>::infinity() : heap.front().time;
    while (sample < samples && config.sample_times[sample] < next) {
      record(sample, heap, births, deaths);
      ++sample;
    }
    if (sample == samples) break;
    std::pop_heap(heap.begin(), heap.end(), later<Pos>);
    P p = std::move(heap.back());
    heap.pop_back();
    const int k = motion.catalyst_at(p.pos);
    if (k >= 0) {
      const Branching& b = branching[static_cast<std::size_t>(k)];
      if (b.alpha > 0.0 && uniform(rng) < b.alpha) {
        const std::size_t offspring = pick(b.law_cumulative, uniform(rng));
        ++deaths;
        births += offspring;
        if (heap.size() + offspring > config.population_cap) return false;
        for (std::size_t c = 0; c < offspring; ++c) {
          heap.push_back(P{p.time + exponential(rng, b.beta), p.pos});
          std::push_heap(heap.begin(), heap.end(), later<Pos>);
        }
        continue;
      }
    }
    Pos to = motion.jump(p.pos, rng);
    const double t = p.time + exponential(rng, rate_at(to));
    heap.push_back(P{t, std::move(to)});
    std::push_heap(heap.begin(), heap.end(), later<Pos>);
  }
  return true;
}

template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::size_t>(count, 1024))));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

template <class Motion>
ReplicateResult replicate_with(const Motion& motion, const CbpModel& model, const SimConfig& config,
                               std::size_t index) {
  Rng rng = make_rng(config.seed, index);
  ReplicateResult out;
  const auto branching = branching_of(model);
  auto record = [&](std::size_t sample, const auto& particles, std::uint64_t births, std::uint64_t deaths) {
    Snapshot s;
    s.time = config.sample_times[sample];
    std::map<Site, std::uint64_t> counts;
    for (const auto& p : particles) ++counts[motion.to_site(p.pos)];
    s.occupancy.assign(counts.begin(), counts.end());
    s.total = particles.size();
    s.births = births;
    s.deaths = deaths;
    out.snapshots.push_back(std::move(s));
  };
  if (!run(motion, branching, config, rng, record)) {
    out.truncated = true;
    out.snapshots.clear();
  }
  return out;
}

// Per replicate: counts[sample * (sites + 1) + s], the last slot per sample
// being the total.
template <class Motion>
std::vector<std::vector<std::uint64_t>> count_all(const Motion& motion, const CbpModel& model, const SimConfig& config,
                                                  std::vector<char>& truncated) {
  const auto branching = branching_of(model);
  const std::size_t width = config.sites.size() + 1;
  std::vector<typename Motion::Pos> tracked;
  for (const Site& s : config.sites) tracked.push_back(motion.from_site(s));
  std::vector<std::vector<std::uint64_t>> counts(config.replicates);
  truncated.assign(config.replicates, 0);
  parallel_for(config.replicates, config.workers, [&](std::size_t r) {
    Rng rng = make_rng(config.seed, r);
    std::vector<std::uint64_t> row(config.sample_times.size() * width, 0);
    auto record = [&](std::size_t sample, const auto& particles, std::uint64_t, std::uint64_t) {
      std::uint64_t* slot = row.data() + sample * width;
      for (const auto& p : particles) {
        for (std::size_t s = 0; s < tracked.size(); ++s) {
          if (p.pos == tracked[s]) ++slot[s];
        }
      }
      slot[width - 1] = particles.size();
    };
    if (run(motion, branching, config, rng, record)) {
      counts[r] = std::move(row);
    } else {
      truncated[r] = 1;
    }
  });
  return counts;
}

double falling(std::uint64_t k, int n) {
  double out = 1.0;
  for (int i = 0; i < n; ++i) out *= static_cast<double>(k) - i;
  return out;
}

}  // namespace

int default_workers() {
  if (const char* env = std::getenv("CBP_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void validate(const CbpModel& model, const SimConfig& config) {
  const ChainModel& chain = model.chain();
  if (!chain.contains(config.start)) fail(ErrorCode::UnknownSite, "start site is not a state of the chain");
  for (const Site& s : config.sites) {
    if (!chain.contains(s)) fail(ErrorCode::UnknownSite, "tracked site is not a state of the chain");
  }
  if (config.replicates < 1) fail(ErrorCode::InvalidArgument, "at least one replicate is required");
  if (config.population_cap < 1) fail(ErrorCode::InvalidArgument, "population cap must be >= 1");
  if (config.max_order < 1) fail(ErrorCode::InvalidArgument, "moment order must be >= 1");
  if (!(config.horizon >= 0.0) || !std::isfinite(config.horizon)) fail(ErrorCode::InvalidArgument, "bad horizon");
  if (!std::is_sorted(config.sample_times.begin(), config.sample_times.end())) {
    fail(ErrorCode::InvalidArgument, "sample times must be sorted");
  }
  for (double t : config.sample_times) {
    if (!(t >= 0.0 && t <= config.horizon)) fail(ErrorCode::InvalidArgument, "sample times must lie in [0, horizon]");
  }
  for (std::size_t k = 0; k < model.size(); ++k) {
    const Catalyst& c = model.catalyst(k);
    if (c.alpha > 0.0 && c.law.empty()) {
      fail(ErrorCode::InvalidConfig, "catalyst " + chain.label(c.site) + " needs an offspring law for simulation");
    }
  }
}

ReplicateResult simulate_replicate(const CbpModel& model, const SimConfig& config, std::size_t index) {
  validate(model, config);
  if (model.chain().is_finite()) return replicate_with(FiniteMotion(model), model, config, index);
  return replicate_with(LatticeMotion(model), model, config, index);
}

std::vector<MomentEstimate> estimate_moments(const CbpModel& model, const SimConfig& config) {
  validate(model, config);
  std::vector<char> truncated;
  const auto counts = model.chain().is_finite() ? count_all(FiniteMotion(model), model, config, truncated)
                                                : count_all(LatticeMotion(model), model, config, truncated);
  const std::size_t n_trunc = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  const std::size_t n_ok = config.replicates - n_trunc;
  if (n_ok == 0) fail(ErrorCode::AllReplicatesTruncated, "every replicate exceeded the population cap");
  const std::size_t width = config.sites.size() + 1;
  std::vector<MomentEstimate> out;
  std::vector<double> values(n_ok);
  for (std::size_t sample = 0; sample < config.sample_times.size(); ++sample) {
    for (std::size_t s = 0; s < width; ++s) {
      for (int order = 1; order <= config.max_order; ++order) {
        std::size_t v = 0;
        double sum = 0.0;
        for (std::size_t r = 0; r < config.replicates; ++r) {
          if (truncated[r]) continue;
          values[v] = falling(counts[r][sample * width + s], order);
          sum += values[v++];
        }
        const double n = static_cast<double>(n_ok);
        const double mean = sum / n;
        double se = 0.0;
        if (n_ok > 1) {
          // Leave-one-out means (sum - x_i)/(n - 1) have average `mean`.
          double ss = 0.0;
          for (double x : values) {
            const double d = (sum - x) / (n - 1.0) - mean;
            ss += d * d;
          }
          se = std::sqrt((n - 1.0) / n * ss);
        }
        MomentEstimate e;
        e.time = config.sample_times[sample];
        if (s + 1 < width) e.site = config.sites[s];
        e.order = order;
        e.estimate = mean;
        e.stderr_ = se;
        e.replicates = n_ok;
        e.truncated = n_trunc;
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

}  // namespace cbp::sim
