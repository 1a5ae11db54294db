#pragma once

// Schedule enumeration and property checks for GAInstance, shared by the unit tests and
// the acceptance binary. Everything here is computed independently of the GA tallies.

#include <ssf/ga/graded_agreement.hpp>

#include <map>
#include <random>
#include <string>
#include <vector>

namespace ga_suite {

using ssf::BlockId;
using ssf::Tick;
using ssf::ValidatorId;

/// genesis <- A <- B and genesis <- A2 <- B2; A and A2 conflict.
struct Fixture {
   ssf::core::BlockTree tree;
   BlockId A, A2, B, B2;

   Fixture() {
      auto g = tree.genesis().id;
      auto a = ssf::core::make_block(g, 1, 0, "A");
      auto a2 = ssf::core::make_block(g, 1, 1, "A2");
      auto b = ssf::core::make_block(a.id, 2, 0, "B");
      auto b2 = ssf::core::make_block(a2.id, 2, 1, "B2");
      for (const auto& blk : {a, a2, b, b2})
         tree.insert(blk);
      A = a.id;
      A2 = a2.id;
      B = b.id;
      B2 = b2.id;
   }
};

struct Delivery {
   ValidatorId from = 0;
   ValidatorId to = 0;
   BlockId     log;
   Tick        at = 0;
};

struct Schedule {
   std::size_t           n = 0;
   std::vector<bool>     adversary;  ///< per validator
   std::vector<BlockId>  inputs;     ///< honest inputs (ignored for adversaries)
   std::vector<Delivery> deliveries; ///< everything except honest self-delivery
};

struct Result {
   std::size_t                        schedules = 0;
   std::map<std::string, std::size_t> violations;  ///< property -> schedules violating it

   std::size_t total_violations() const {
      std::size_t t = 0;
      for (const auto& [k, v] : violations)
         t += v;
      return t;
   }
};

/// Runs every honest participant through the schedule and returns the names of violated properties:
/// consistency (a grade >= 1 output conflicts with any honest output), graded_delivery, validity,
/// integrity, uniqueness (two conflicting grade >= 1 outputs). Two grade-0 outputs may conflict.
inline std::vector<std::string> check(const Fixture& fx, const Schedule& sc, int grades, Tick delta = 1) {
   const auto& tree = fx.tree;
   ssf::ga::GAConfig cfg;
   cfg.grades = grades;
   cfg.delta = delta;
   std::vector<std::size_t> honest;
   for (std::size_t v = 0; v < sc.n; ++v)
      if (!sc.adversary[v]) honest.push_back(v);

   std::map<std::size_t, std::vector<ssf::ga::GradedOutput>> outputs;
   for (auto v : honest) {
      ssf::ga::GAInstance inst(cfg, 1, tree);
      inst.input(static_cast<ValidatorId>(v), sc.inputs[v], 0);
      std::map<Tick, std::vector<ssf::ga::GAMessage>> inbox;
      for (const auto& d : sc.deliveries)
         if (d.to == v) inbox[d.at].push_back({d.from, 1, d.log, 0});
      for (Tick t = 0; t <= inst.end_time(); ++t) {
         for (const auto& m : inbox[t])
            inst.receive(m);
         inst.tick(t);
      }
      outputs[v] = inst.outputs();
   }

   auto compatible = [&](const BlockId& x, const BlockId& y) { return tree.is_prefix(x, y) || tree.is_prefix(y, x); };
   auto outputs_at = [&](std::size_t v, const BlockId& log, int grade) {
      for (const auto& o : outputs[v])
         if (o.grade == grade && tree.is_prefix(log, o.log)) return true;
      return false;
   };

   std::vector<std::string> bad;
   auto flag = [&](const char* p) {
      for (const auto& b : bad)
         if (b == p) return;
      bad.emplace_back(p);
   };

   std::vector<ssf::ga::GradedOutput> all;
   for (auto v : honest)
      for (const auto& o : outputs[v])
         all.push_back(o);
   for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = i + 1; j < all.size(); ++j) {
         if (compatible(all[i].log, all[j].log)) continue;
         if (all[i].grade >= 1 && all[j].grade >= 1) flag("uniqueness");
         if (all[i].grade >= 1 || all[j].grade >= 1) flag("consistency");
      }
   }

   for (auto v : honest)
      for (const auto& o : outputs[v]) {
         if (o.grade >= 1)
            for (auto w : honest)
               if (!outputs_at(w, o.log, o.grade - 1)) flag("graded_delivery");
         bool backed = false;
         for (auto w : honest)
            backed = backed || tree.is_prefix(o.log, sc.inputs[w]);
         if (!backed && !o.log.is_zero() && o.log != tree.genesis().id) flag("integrity");
      }

   // Longest prefix common to every honest input.
   BlockId common = sc.inputs[honest.front()];
   for (auto v : honest)
      while (!tree.is_prefix(common, sc.inputs[v]))
         common = tree.get(common).parent;
   if (common != tree.genesis().id)
      for (auto v : honest)
         if (!outputs_at(v, common, grades - 1)) flag("validity");
   return bad;
}

/// Gossip: a message one honest participant receives at t reaches every honest participant by t + Δ.
inline void close_under_relay(Schedule& sc, Tick delta) {
   std::map<std::pair<ValidatorId, BlockId>, Tick> first;
   for (const auto& d : sc.deliveries) {
      if (sc.adversary[d.to]) continue;
      auto [it, fresh] = first.emplace(std::make_pair(d.from, d.log), d.at);
      if (!fresh) it->second = std::min(it->second, d.at);
   }
   for (const auto& [key, t0] : first) {
      for (std::size_t v = 0; v < sc.n; ++v) {
         if (sc.adversary[v] || (v == key.first && sc.inputs[v] == key.second)) continue;
         bool covered = false;
         for (auto& d : sc.deliveries) {
            if (d.to != v || d.from != key.first || d.log != key.second) continue;
            d.at = std::min(d.at, t0 + delta);
            covered = true;
         }
         if (!covered) sc.deliveries.push_back({key.first, static_cast<ValidatorId>(v), key.second, t0 + delta});
      }
   }
}

inline void record(Result& r, const std::vector<std::string>& bad) {
   ++r.schedules;
   for (const auto& p : bad)
      ++r.violations[p];
}

/**
 * n-1 honest participants and one adversary (the last id). Honest inputs range over {A, A2, B},
 * honest-to-honest delays over {0, Δ}, and the adversary picks, per honest recipient,
 * one of: nothing, one log early or late, or both conflicting logs in either order.
 */
inline Result exhaustive(std::size_t n, int grades) {
   Fixture fx;
   const Tick delta = 1;
   const std::vector<BlockId> alphabet{fx.A, fx.A2, fx.B};
   struct AdvOption {
      std::vector<std::pair<BlockId, Tick>> sends;
   };
   const std::vector<AdvOption> options{
       {{}},
       {{{fx.B, 1}}},
       {{{fx.B, 3}}},
       {{{fx.A2, 1}}},
       {{{fx.A2, 3}}},
       {{{fx.B, 1}, {fx.A2, 1}}},
       {{{fx.B, 1}, {fx.A2, 3}}},
       {{{fx.A2, 1}, {fx.B, 3}}},
   };
   const std::size_t h = n - 1;
   const auto adv = static_cast<ValidatorId>(n - 1);
   std::vector<std::pair<std::size_t, std::size_t>> links;
   for (std::size_t a = 0; a < h; ++a)
      for (std::size_t b = 0; b < h; ++b)
         if (a != b) links.emplace_back(a, b);

   std::size_t input_combos = 1, delay_combos = std::size_t{1} << links.size(), adv_combos = 1;
   for (std::size_t i = 0; i < h; ++i) {
      input_combos *= alphabet.size();
      adv_combos *= options.size();
   }

   Result r;
   Schedule sc;
   sc.n = n;
   sc.adversary.assign(n, false);
   sc.adversary[n - 1] = true;
   sc.inputs.assign(n, fx.A);
   for (std::size_t ic = 0; ic < input_combos; ++ic) {
      for (std::size_t i = 0, x = ic; i < h; ++i, x /= alphabet.size())
         sc.inputs[i] = alphabet[x % alphabet.size()];
      for (std::size_t dc = 0; dc < delay_combos; ++dc) {
         for (std::size_t ac = 0; ac < adv_combos; ++ac) {
            sc.deliveries.clear();
            for (std::size_t l = 0; l < links.size(); ++l)
               sc.deliveries.push_back({static_cast<ValidatorId>(links[l].first),
                                        static_cast<ValidatorId>(links[l].second), sc.inputs[links[l].first],
                                        ((dc >> l) & 1) ? delta : 0});
            for (std::size_t i = 0, x = ac; i < h; ++i, x /= options.size())
               for (const auto& [log, at] : options[x % options.size()].sends)
                  sc.deliveries.push_back({adv, static_cast<ValidatorId>(i), log, at});
            close_under_relay(sc, delta);
            record(r, check(fx, sc, grades, delta));
         }
      }
   }
   return r;
}

/// Seeded random schedules: fewer than n/2 adversaries sending any subset of {A, B, A2, B2} to each
/// honest participant at arbitrary ticks; honest delays uniform in [0, Δ].
inline Result random_schedules(std::size_t n, std::size_t count, int grades, std::uint64_t seed, Tick delta = 1) {
   Fixture fx;
   const std::vector<BlockId> honest_inputs{fx.A, fx.B, fx.A2, fx.B2};
   const std::vector<BlockId> adv_logs{fx.A, fx.B, fx.A2, fx.B2};
   std::mt19937_64 rng(seed);
   Result r;
   for (std::size_t k = 0; k < count; ++k) {
      Schedule sc;
      sc.n = n;
      const std::size_t f = std::uniform_int_distribution<std::size_t>(0, (n - 1) / 2)(rng);
      sc.adversary.assign(n, false);
      std::vector<std::size_t> ids(n);
      for (std::size_t i = 0; i < n; ++i)
         ids[i] = i;
      std::shuffle(ids.begin(), ids.end(), rng);
      for (std::size_t i = 0; i < f; ++i)
         sc.adversary[ids[i]] = true;
      // Inputs: everyone on one branch, or a random mix.
      const bool mixed = std::bernoulli_distribution(0.5)(rng);
      const auto base = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
      sc.inputs.assign(n, fx.A);
      for (std::size_t v = 0; v < n; ++v)
         sc.inputs[v] = mixed ? honest_inputs[std::uniform_int_distribution<std::size_t>(0, 3)(rng)]
                              : honest_inputs[(base & 2) + std::uniform_int_distribution<std::size_t>(0, 1)(rng)];
      std::uniform_int_distribution<Tick> honest_delay(0, delta);
      std::uniform_int_distribution<Tick> adv_time(0, 5 * delta + 1);
      std::bernoulli_distribution send(0.5);
      for (std::size_t a = 0; a < n; ++a) {
         for (std::size_t b = 0; b < n; ++b) {
            if (a == b || sc.adversary[b]) continue;
            if (!sc.adversary[a]) {
               sc.deliveries.push_back({static_cast<ValidatorId>(a), static_cast<ValidatorId>(b), sc.inputs[a],
                                        honest_delay(rng)});
               continue;
            }
            for (const auto& log : adv_logs)
               if (send(rng))
                  sc.deliveries.push_back({static_cast<ValidatorId>(a), static_cast<ValidatorId>(b), log, adv_time(rng)});
         }
      }
      close_under_relay(sc, delta);
      record(r, check(fx, sc, grades, delta));
   }
   return r;
}

} // namespace ga_suite
