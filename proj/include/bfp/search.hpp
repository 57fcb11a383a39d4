#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "bfp/evidence.hpp"
#include "bfp/rng.hpp"

namespace bfp {

struct Population {
  std::vector<Feature> features;
  int generation = 0;
};

// Operator mixture for population replacement. FP mode keeps P_mu = 0;
// interaction mode requires P_mu > 0. Projection is not implemented.
struct OperatorProbs {
  double p_mutation = 0.6;
  double p_multiplication = 0.0;
  double p_modification = 0.4;
  double p_projection = 0.0;
};

struct MjmcmcParams {
  double rho_jump = 0.05;  // probability of a mode-jump proposal
  double eps = 0.05;       // randomization kernel flip probability
  int greedy_flips = 0;    // 0 means 2*s
  double w_min = 0.02;     // survival threshold in evolution
  double delta = 0.01;     // smoothing for multiplication sampling
};

// Everything a visited model leaves behind. Grows by visitation, never by
// acceptance; merging is a signature union.
class VisitLog {
 public:
  void record(const std::string& sig, const Model& m, const Evidence& ev) {
    map_.try_emplace(sig, m, ev);
  }

  void merge(const VisitLog& other) {
    for (const auto& [sig, entry] : other.map_) map_.try_emplace(sig, entry);
  }

  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }

  const std::unordered_map<std::string, std::pair<Model, Evidence>>& entries() const {
    return map_;
  }

  double best_log_posterior() const {
    double best = kNegInf;
    for (const auto& [sig, entry] : map_)
      best = std::max(best, entry.second.log_posterior_unnorm());
    return best;
  }

 private:
  std::unordered_map<std::string, std::pair<Model, Evidence>> map_;
};

using EvidenceFn = std::function<Evidence(const Model&)>;

struct ChainState {
  std::vector<char> gamma;
  double log_post = kNegInf;
};

namespace detail {

inline Model decode(const std::vector<char>& gamma, const Population& pop) {
  std::vector<Feature> fs;
  for (std::size_t i = 0; i < gamma.size(); ++i)
    if (gamma[i]) fs.push_back(pop.features[i]);
  return Model::of(std::move(fs));
}

inline double log_eps_kernel(const std::vector<char>& a, const std::vector<char>& b,
                             double eps) {
  int h = 0;
  for (std::size_t i = 0; i < a.size(); ++i) h += a[i] != b[i];
  return h * std::log(eps) + (static_cast<int>(a.size()) - h) * std::log1p(-eps);
}

// deterministic best-improvement coordinate ascent, at most max_flips flips
inline std::pair<std::vector<char>, double> greedy_ascent(
    std::vector<char> gamma, double lp, const Population& pop, const EvidenceFn& eval,
    int max_flips) {
  const std::size_t s = gamma.size();
  for (int flip = 0; flip < max_flips; ++flip) {
    int best_j = -1;
    double best_lp = lp;
    for (std::size_t j = 0; j < s; ++j) {
      gamma[j] ^= 1;
      double cand = eval(decode(gamma, pop)).log_posterior_unnorm();
      gamma[j] ^= 1;
      if (cand > best_lp) {
        best_lp = cand;
        best_j = static_cast<int>(j);
      }
    }
    if (best_j < 0) break;
    gamma[static_cast<std::size_t>(best_j)] ^= 1;
    lp = best_lp;
  }
  return {std::move(gamma), lp};
}

}  // namespace detail

// One MJMCMC transition: a single-bit Metropolis-Hastings flip, or (with
// probability rho_jump) a mode jump built from a large random flip, greedy
// local ascent and an eps-randomization, accepted with the randomization
// kernel densities at the two ascent endpoints.
inline ChainState mjmcmc_step(const ChainState& state, const Population& pop,
                              const EvidenceFn& eval, const MjmcmcParams& params,
                              CounterRng& rng) {
  const std::size_t s = pop.features.size();
  ChainState next = state;
  if (s == 0) return next;

  if (rng.uniform() >= params.rho_jump) {
    std::vector<char> proposal = state.gamma;
    proposal[rng.below(s)] ^= 1;
    double lp = eval(detail::decode(proposal, pop)).log_posterior_unnorm();
    if (std::log(rng.uniform() + 1e-300) < lp - state.log_post) {
      next.gamma = std::move(proposal);
      next.log_post = lp;
    }
    return next;
  }

  const int max_flips = params.greedy_flips > 0 ? params.greedy_flips
                                                : 2 * static_cast<int>(s);

  // large jump: flip a random subset of size U[ceil(s/4), ceil(s/2)]
  auto lo = static_cast<std::size_t>((s + 3) / 4);
  auto hi = static_cast<std::size_t>((s + 1) / 2);
  std::size_t r = lo + rng.below(hi - lo + 1);
  std::vector<std::size_t> idx(s);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < r; ++i) std::swap(idx[i], idx[i + rng.below(s - i)]);

  std::vector<char> chi0 = state.gamma;
  for (std::size_t i = 0; i < r; ++i) chi0[idx[i]] ^= 1;
  double chi0_lp = eval(detail::decode(chi0, pop)).log_posterior_unnorm();
  auto [chi1, chi1_lp] =
      detail::greedy_ascent(std::move(chi0), chi0_lp, pop, eval, max_flips);

  std::vector<char> proposal = chi1;
  for (std::size_t j = 0; j < s; ++j)
    if (rng.uniform() < params.eps) proposal[j] ^= 1;
  double prop_lp = eval(detail::decode(proposal, pop)).log_posterior_unnorm();
  if (prop_lp == kNegInf) return next;  // never rest on an excluded state

  // mirrored large jump from the proposal, then the reverse ascent
  std::vector<char> rchi0 = proposal;
  for (std::size_t i = 0; i < r; ++i) rchi0[idx[i]] ^= 1;
  double rchi0_lp = eval(detail::decode(rchi0, pop)).log_posterior_unnorm();
  auto [rchi1, rchi1_lp] =
      detail::greedy_ascent(std::move(rchi0), rchi0_lp, pop, eval, max_flips);

  double log_q_fwd = detail::log_eps_kernel(proposal, chi1, params.eps);
  double log_q_rev = detail::log_eps_kernel(state.gamma, rchi1, params.eps);
  double log_ratio = prop_lp + log_q_rev - state.log_post - log_q_fwd;
  if (std::log(rng.uniform() + 1e-300) < log_ratio) {
    next.gamma = std::move(proposal);
    next.log_post = prop_lp;
  }
  return next;
}

// Wrap an EvidenceFn so that every evaluation lands in the log.
inline EvidenceFn logging_eval(const Dataset& ds, const PriorConfig& cfg,
                               EvidenceCache* cache, VisitLog* log,
                               VisitLog* epoch_log = nullptr) {
  return [&ds, &cfg, cache, log, epoch_log](const Model& m) {
    Evidence ev = evaluate_model(m, ds, cfg, cache);
    std::string sig = m.signature(ds);
    if (log) log->record(sig, m, ev);
    if (epoch_log) epoch_log->record(sig, m, ev);
    return ev;
  };
}

inline ChainState random_valid_state(const Population& pop, const EvidenceFn& eval,
                                     CounterRng& rng, int attempts = 16) {
  const std::size_t s = pop.features.size();
  for (int a = 0; a < attempts; ++a) {
    ChainState st;
    st.gamma.assign(s, 0);
    for (auto& g : st.gamma) g = rng.uniform() < 0.25 ? 1 : 0;
    st.log_post = eval(detail::decode(st.gamma, pop)).log_posterior_unnorm();
    if (st.log_post > kNegInf) return st;
  }
  ChainState st;  // the null model is always prior-valid
  st.gamma.assign(s, 0);
  st.log_post = eval(Model{}).log_posterior_unnorm();
  return st;
}

inline ChainState run_mjmcmc(const Population& pop, const EvidenceFn& eval,
                             int n_iters, const MjmcmcParams& params, CounterRng& rng,
                             ChainState state) {
  for (int i = 0; i < n_iters; ++i) state = mjmcmc_step(state, pop, eval, params, rng);
  return state;
}

// Renormalized posterior mass, within `log`, of models containing each
// population feature.
inline std::vector<double> estimate_inclusion_within(const Population& pop,
                                                     const VisitLog& log) {
  std::vector<double> weights(pop.features.size(), 0.0);
  double best = log.best_log_posterior();
  if (best == kNegInf) return weights;
  double z = 0.0;
  for (const auto& [sig, entry] : log.entries()) {
    double lp = entry.second.log_posterior_unnorm();
    if (lp > kNegInf) z += std::exp(lp - best);
  }
  for (const auto& [sig, entry] : log.entries()) {
    double lp = entry.second.log_posterior_unnorm();
    if (lp == kNegInf) continue;
    double w = std::exp(lp - best) / z;
    for (std::size_t i = 0; i < pop.features.size(); ++i)
      if (entry.first.contains(pop.features[i])) weights[i] += w;
  }
  return weights;
}

struct SearchConfig {
  PriorConfig prior;
  OperatorProbs operators;
  MjmcmcParams params;
  int population_size = 20;
  int total_iters = 20000;
  int evolve_period = 250;
  int last_evolve_iter = 15000;
  int n_chains = 4;
  std::uint64_t seed = 1;
  std::vector<Feature> pinned;  // forced into every population (ideal mode)

  // (chain, epoch, best log posterior so far, |Omega|), called once per epoch
  std::function<void(int, int, double, std::size_t)> progress;

  void validate() const {
    double sum = operators.p_mutation + operators.p_multiplication +
                 operators.p_modification + operators.p_projection;
    if (std::abs(sum - 1.0) > 1e-9) throw Error("operator probabilities must sum to 1");
    if (!prior.interactions && operators.p_multiplication != 0.0)
      throw Error("FP mode requires P_mu = 0");
    if (prior.interactions && operators.p_multiplication <= 0.0)
      throw Error("interaction mode requires P_mu > 0");
    if (population_size < prior.q) throw Error("population size must be >= q");
    if (n_chains < 1 || total_iters < 1) throw Error("invalid search budget");
  }
};

// Low-weight features are replaced through the operator mixture; survivors
// and pinned features are kept; the result has distinct features.
inline Population evolve_population(const Population& pop,
                                    const std::vector<double>& weights,
                                    const std::vector<Feature>& universe,
                                    const SearchConfig& cfg, CounterRng& rng) {
  const auto s = static_cast<std::size_t>(cfg.population_size);
  Population next;
  next.generation = pop.generation + 1;

  auto is_pinned = [&](const Feature& f) {
    return std::find(cfg.pinned.begin(), cfg.pinned.end(), f) != cfg.pinned.end();
  };
  std::vector<double> surviving_weights;
  for (std::size_t i = 0; i < pop.features.size(); ++i) {
    if (weights[i] >= cfg.params.w_min || is_pinned(pop.features[i])) {
      next.features.push_back(pop.features[i]);
      surviving_weights.push_back(weights[i]);
    }
  }
  auto contains = [&](const Feature& f) {
    return std::find(next.features.begin(), next.features.end(), f) !=
           next.features.end();
  };

  int stall = 0;
  while (next.features.size() < s && stall < 1000) {
    double u = rng.uniform();
    Feature cand;
    if (u < cfg.operators.p_mutation || next.features.empty()) {
      cand = universe[rng.below(universe.size())];
    } else if (u < cfg.operators.p_mutation + cfg.operators.p_modification) {
      // re-draw the transform of a present feature's predictor
      const Feature& base = next.features[rng.below(next.features.size())];
      int j = base.factors[rng.below(base.factors.size())].first;
      const auto& all = fp_transforms();
      cand = Feature(j, all[rng.below(all.size())]);
    } else {
      // multiplication: product of two features sampled prop. to weight+delta
      auto sample = [&]() -> const Feature& {
        double total = 0.0;
        for (double w : surviving_weights) total += w + cfg.params.delta;
        double target = rng.uniform() * total;
        for (std::size_t i = 0; i < next.features.size(); ++i) {
          target -= surviving_weights[i] + cfg.params.delta;
          if (target <= 0.0) return next.features[i];
        }
        return next.features.back();
      };
      cand = Feature::product(sample(), sample());
      if (static_cast<int>(cand.order()) > cfg.prior.order_cap) {
        ++stall;
        continue;
      }
    }
    if (!cand.factors.empty() && !contains(cand)) {
      next.features.push_back(cand);
      surviving_weights.push_back(0.0);
      stall = 0;
    } else {
      ++stall;  // duplicate; universe may be exhausted
    }
  }
  return next;
}

inline Population initial_population(const Dataset& ds,
                                     const std::vector<Feature>& universe,
                                     const SearchConfig& cfg, CounterRng& rng) {
  const auto s = static_cast<std::size_t>(cfg.population_size);
  Population pop;
  for (const Feature& f : cfg.pinned)
    if (pop.features.size() < s) pop.features.push_back(f);
  // all identity features first, mirroring a linear-first start
  for (const Feature& f : universe) {
    if (pop.features.size() >= s) break;
    if (f.factors[0].second.is_identity() &&
        std::find(pop.features.begin(), pop.features.end(), f) == pop.features.end())
      pop.features.push_back(f);
  }
  int stall = 0;
  while (pop.features.size() < s && stall < 1000) {
    const Feature& f = universe[rng.below(universe.size())];
    if (std::find(pop.features.begin(), pop.features.end(), f) == pop.features.end()) {
      pop.features.push_back(f);
      stall = 0;
    } else {
      ++stall;
    }
  }
  (void)ds;
  return pop;
}

// Algorithm: explore S_0, then evolve every `evolve_period` iterations up to
// `last_evolve_iter`, and spend the remaining budget on the final population.
inline VisitLog gmjmcmc(const Dataset& ds, const SearchConfig& cfg,
                        EvidenceCache* cache = nullptr, std::uint64_t chain_index = 0) {
  cfg.validate();
  CounterRng rng(cfg.seed, chain_index + 1);
  std::vector<Feature> universe = enumerate_terms(ds);
  VisitLog log;

  // the pinned model itself is part of the forced search path
  if (!cfg.pinned.empty()) {
    Model forced = Model::of(cfg.pinned);
    log.record(forced.signature(ds), forced,
               evaluate_model(forced, ds, cfg.prior, cache));
  }

  Population pop = initial_population(ds, universe, cfg, rng);
  int done = 0;
  ChainState state;
  bool have_state = false;

  while (done < cfg.total_iters) {
    int budget = done < cfg.last_evolve_iter
                     ? std::min(cfg.evolve_period, cfg.last_evolve_iter - done)
                     : cfg.total_iters - done;
    VisitLog epoch_log;
    EvidenceFn eval = logging_eval(ds, cfg.prior, cache, &log, &epoch_log);

    if (!have_state) {
      state = random_valid_state(pop, eval, rng);
      have_state = true;
    }
    state = run_mjmcmc(pop, eval, budget, cfg.params, rng, state);
    done += budget;
    if (cfg.progress)
      cfg.progress(static_cast<int>(chain_index), pop.generation,
                   log.best_log_posterior(), log.size());

    if (done < cfg.total_iters && done <= cfg.last_evolve_iter) {
      Model current = detail::decode(state.gamma, pop);
      std::vector<double> weights = estimate_inclusion_within(pop, epoch_log);
      pop = evolve_population(pop, weights, universe, cfg, rng);
      // project the chain state onto the new population
      state.gamma.assign(pop.features.size(), 0);
      for (std::size_t i = 0; i < pop.features.size(); ++i)
        if (current.contains(pop.features[i])) state.gamma[i] = 1;
      state.log_post =
          eval(detail::decode(state.gamma, pop)).log_posterior_unnorm();
      if (state.log_post == kNegInf) have_state = false;
    }
  }
  return log;
}

// Independent chains with per-chain RNG streams, merged by signature union.
inline VisitLog run_parallel(const Dataset& ds, const SearchConfig& cfg,
                             EvidenceCache* cache = nullptr) {
  cfg.validate();
  if (cfg.n_chains == 1) return gmjmcmc(ds, cfg, cache, 0);

  std::vector<VisitLog> logs(static_cast<std::size_t>(cfg.n_chains));
  std::vector<std::thread> threads;
  for (int c = 0; c < cfg.n_chains; ++c)
    threads.emplace_back([&, c] {
      logs[static_cast<std::size_t>(c)] =
          gmjmcmc(ds, cfg, cache, static_cast<std::uint64_t>(c));
    });
  for (auto& t : threads) t.join();

  VisitLog merged;
  for (const auto& l : logs) merged.merge(l);
  return merged;
}

}  // namespace bfp
