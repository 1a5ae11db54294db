#include <ssf/netsim/simulator.hpp>

#include <ssf/core/rng.hpp>

#include <algorithm>
#include <istream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace ssf::netsim {

using nlohmann::json;

const char* to_string(AdversaryKind k) {
   switch (k) {
      case AdversaryKind::none: return "none";
      case AdversaryKind::equivocate: return "equivocate";
      case AdversaryKind::withhold_reveal: return "withhold_reveal";
      case AdversaryKind::split_view: return "split_view";
      case AdversaryKind::crash_leader: return "crash_leader";
   }
   return "?";
}

AdversaryKind adversary_kind_from_string(const std::string& s) {
   for (auto k : {AdversaryKind::none, AdversaryKind::equivocate, AdversaryKind::withhold_reveal,
                  AdversaryKind::split_view, AdversaryKind::crash_leader})
      if (s == to_string(k)) return k;
   throw ConfigError("adversary.kind", "unknown adversary kind '" + s + "'");
}

bool AdversaryPolicy::contains(ValidatorId v) const {
   return std::find(validators.begin(), validators.end(), v) != validators.end();
}

bool SleepSchedule::awake(ValidatorId v, Tick t) const {
   auto it = intervals.find(v);
   if (it == intervals.end()) return true;
   for (const auto& [sleep, wake] : it->second)
      if (t >= sleep && t < wake) return false;
   return true;
}

Tick SleepSchedule::next_awake(ValidatorId v, Tick t) const {
   auto it = intervals.find(v);
   if (it == intervals.end()) return t;
   for (const auto& [sleep, wake] : it->second)
      if (t >= sleep && t < wake) t = wake;
   return t;
}

void NetworkConfig::validate() const {
   if (n == 0) throw ConfigError("n", "validator count must be positive");
   if (slots == 0) throw ConfigError("slots", "run length must be at least one slot");
   if (delta < 1) throw ConfigError("delta", "must be >= 1");
   if (gst < 0) throw ConfigError("gst", "must be >= 0");
   if (eta && *eta == 0) throw ConfigError("eta", "must be positive");
   if (!stakes.empty()) {
      if (stakes.size() != n) throw ConfigError("stakes", "needs one entry per validator");
      ffg::Stake total = 0;
      for (auto s : stakes)
         total += s;
      if (total == 0) throw ConfigError("stakes", "total stake must be positive");
   }
   std::set<ValidatorId> seen;
   for (auto v : adversary.validators) {
      if (v >= n) throw ConfigError("adversary.validators", "id " + std::to_string(v) + " out of range");
      if (!seen.insert(v).second) throw ConfigError("adversary.validators", "duplicate id " + std::to_string(v));
   }
   for (auto v : adversary.partition)
      if (v >= n) throw ConfigError("adversary.partition", "id " + std::to_string(v) + " out of range");
   if (adversary.reveal_delay < 0) throw ConfigError("adversary.reveal_delay", "must be >= 0");
   for (const auto& [v, list] : sleep.intervals) {
      if (v >= n) throw ConfigError("sleep", "id " + std::to_string(v) + " out of range");
      Tick last = -1;
      for (const auto& [a, b] : list) {
         if (a < 0 || b <= a || a < last)
            throw ConfigError("sleep." + std::to_string(v), "intervals must be non-empty, disjoint and ordered");
         last = b;
      }
   }
}

Tick NetworkConfig::end_tick() const {
   return static_cast<Tick>(slots) * tob::rounds_per_slot(variant) * delta;
}

// ---------------------------------------------------------------------------
// Trace I/O

void Trace::write_jsonl(std::ostream& os) const {
   for (const auto& e : events) {
      json j{{"tick", e.tick}, {"validator", e.validator}, {"kind", e.kind}, {"data", e.data}};
      os << j.dump() << '\n';
   }
}

std::string Trace::to_jsonl() const {
   std::ostringstream os;
   write_jsonl(os);
   return os.str();
}

Trace Trace::read_jsonl(std::istream& is) {
   Trace t;
   std::string line;
   std::size_t lineno = 0;
   while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
         auto j = json::parse(line);
         t.events.push_back({j.at("tick").get<Tick>(), j.at("validator").get<std::int64_t>(),
                             j.at("kind").get<std::string>(), j.at("data")});
      } catch (const json::exception& e) {
         throw Error("trace line " + std::to_string(lineno) + ": " + e.what());
      }
   }
   return t;
}

// ---------------------------------------------------------------------------
// Delivery and adversary

namespace {

bool same_side(const AdversaryPolicy& p, ValidatorId a, ValidatorId b) {
   auto in = [&](ValidatorId v) { return std::find(p.partition.begin(), p.partition.end(), v) != p.partition.end(); };
   return in(a) == in(b);
}

} // namespace

Tick schedule_delivery(const NetworkConfig& cfg, Tick sent_at, ValidatorId from, ValidatorId to,
                       std::uint64_t msg_index) {
   auto draw = [&](Tick hi) { return core::keyed_uniform(cfg.seed, "delivery", {msg_index, to}, 1, hi); };
   if (sent_at >= cfg.gst) return sent_at + draw(cfg.delta);
   if (cfg.adversary.kind == AdversaryKind::split_view)
      return same_side(cfg.adversary, from, to) ? sent_at + draw(cfg.delta) : cfg.gst + cfg.delta;
   const Tick latest = cfg.gst + cfg.delta;
   return std::min(sent_at + draw(2 * cfg.delta), latest);
}

namespace {

std::vector<ValidatorId> everyone_but(std::size_t n, ValidatorId me) {
   std::vector<ValidatorId> out;
   for (ValidatorId v = 0; v < n; ++v)
      if (v != me) out.push_back(v);
   return out;
}

// A block for `slot` that competes with `of` (same parent, different payload).
core::Block conflicting_block(const core::BlockTree& tree, const BlockId& of, Slot slot, ValidatorId who) {
   const core::Block* b = tree.find(of);
   BlockId parent = (b && !b->is_genesis()) ? b->parent : tree.genesis().id;
   return core::make_block(parent, slot, who, "equivocation:" + std::to_string(slot) + ":" + of.hex().substr(0, 16));
}

} // namespace

std::vector<Outgoing> adversary_act(const AdversaryPolicy& policy, Tick tick, const tob::Message& produced,
                                    const AdversaryView& view) {
   std::vector<Outgoing> out;
   const ValidatorId me = produced.from;
   auto all = everyone_but(view.n, me);

   switch (policy.kind) {
      case AdversaryKind::none:
      case AdversaryKind::split_view:
         out.push_back({produced, all, std::nullopt, ""});
         return out;

      case AdversaryKind::crash_leader:
         if (std::holds_alternative<tob::Proposal>(produced.payload)) return out;
         out.push_back({produced, all, std::nullopt, ""});
         return out;

      case AdversaryKind::withhold_reveal:
         out.push_back({produced, all, tick + policy.reveal_delay, ""});
         return out;

      case AdversaryKind::equivocate: break;
   }

   // EQUIVOCATE: conflicting head votes (and optionally proposals) to two halves of the honest set.
   std::vector<ValidatorId> coalition, honest;
   for (auto v : all)
      (policy.contains(v) ? coalition : honest).push_back(v);
   core::RngStream rng(view.seed, "equivocate", {me, static_cast<std::uint64_t>(tick)});
   std::shuffle(honest.begin(), honest.end(), rng.engine());
   std::sort(honest.begin(), honest.begin() + static_cast<std::ptrdiff_t>(honest.size() / 2));
   std::sort(honest.begin() + static_cast<std::ptrdiff_t>(honest.size() / 2), honest.end());
   std::vector<ValidatorId> first(honest.begin(), honest.begin() + static_cast<std::ptrdiff_t>(honest.size() / 2));
   std::vector<ValidatorId> second(honest.begin() + static_cast<std::ptrdiff_t>(honest.size() / 2), honest.end());
   first.insert(first.end(), coalition.begin(), coalition.end());
   std::sort(first.begin(), first.end());
   const auto& tree = view.self->state().tree;

   if (const auto* hv = std::get_if<tob::HeadVote>(&produced.payload)) {
      auto alt = conflicting_block(tree, hv->log, hv->instance, me);
      tob::HeadVote other = *hv;
      other.log = alt.id;
      tob::Message m2{me, produced.sent_at, other, {alt}};
      out.push_back({produced, first, std::nullopt, ""});
      if (!second.empty()) out.push_back({m2, second, std::nullopt, ""});
      return out;
   }
   const auto* p = std::get_if<tob::Proposal>(&produced.payload);
   if (p && policy.equivocate_proposals) {
      tob::Proposal alt = *p;
      alt.block = core::make_block(p->block.parent, p->slot, me, "equivocation:" + std::to_string(p->slot));
      tob::Message m2{me, produced.sent_at, alt, {alt.block}};
      out.push_back({produced, first, std::nullopt, ""});
      if (!second.empty()) out.push_back({m2, second, std::nullopt, ""});
      return out;
   }
   out.push_back({produced, all, std::nullopt, ""});
   if (const auto* v = std::get_if<ffg::FFGVote>(&produced.payload)) {
      if (policy.ffg_injection == FFGInjection::double_vote) {
         auto alt = core::make_block(v->source.block, v->target.slot, me,
                                     "ffg-equivocation:" + std::to_string(v->target.slot));
         ffg::FFGVote dv = *v;
         dv.target = ffg::Checkpoint{alt.id, v->target.slot};
         out.push_back({tob::Message{me, produced.sent_at, dv, {alt}}, all, std::nullopt, "DOUBLE_VOTE"});
      } else if (policy.ffg_injection == FFGInjection::surround && v->source.slot > 0 && view.previous_ffg) {
         bool surrounds = std::any_of(view.previous_ffg->begin(), view.previous_ffg->end(), [&](const ffg::FFGVote& p) {
            return p.source.slot > 0 && p.target.slot < v->target.slot;
         });
         if (surrounds) {
            ffg::FFGVote sv = *v;
            sv.source = ffg::genesis_checkpoint();
            out.push_back({tob::Message{me, produced.sent_at, sv, {}}, all, std::nullopt, "SURROUND"});
         }
      }
   }
   return out;
}

// ---------------------------------------------------------------------------
// Event loop

namespace {

json checkpoint_json(const ffg::Checkpoint& c) { return json{{"block", c.block.hex()}, {"slot", c.slot}}; }

json vote_json(const ffg::FFGVote& v) {
   return json{{"sender", v.sender},
               {"source", checkpoint_json(v.source)},
               {"target", checkpoint_json(v.target)},
               {"cast_at", v.cast_at}};
}

class Simulation {
public:
   explicit Simulation(const NetworkConfig& cfg) : cfg_(cfg), observer_(stakes(cfg)) {
      auto params = std::make_shared<tob::ProtocolParams>();
      params->variant = cfg.variant;
      params->n = cfg.n;
      params->delta = cfg.delta;
      params->eta = cfg.eta;
      params->kappa = cfg.kappa;
      params->stakes = stakes(cfg);
      params->leaders = tob::LeaderSchedule(cfg.leaders, cfg.n, cfg.seed);
      params_ = params;
      for (ValidatorId v = 0; v < cfg.n; ++v)
         validators_.push_back(std::make_unique<tob::Validator>(v, params_));
      end_ = cfg.end_tick();
      previous_ffg_.resize(cfg.n);
   }

   Trace run() {
      write_meta();
      for (Tick t = 0; t < end_; ++t) {
         deliver(t);
         for (ValidatorId v = 0; v < cfg_.n; ++v)
            drain(v, t);
         for (ValidatorId v = 0; v < cfg_.n; ++v) {
            auto out = validators_[v]->on_tick(t, cfg_.sleep.awake(v, t));
            for (const auto& b : validators_[v]->drain_created_blocks())
               note_block(b, t, v);
            drain(v, t);
            for (auto& m : out)
               dispatch(std::move(m), t);
         }
      }
      return std::move(trace_);
   }

private:
   struct Pending {
      ValidatorId   to;
      std::uint64_t msg;
      Tick          sent_at;
   };

   static std::vector<ffg::Stake> stakes(const NetworkConfig& cfg) {
      return cfg.stakes.empty() ? std::vector<ffg::Stake>(cfg.n, 32) : cfg.stakes;
   }

   void emit(Tick t, std::int64_t v, const char* kind, json data) {
      trace_.events.push_back({t, v, kind, std::move(data)});
   }

   void write_meta() {
      const auto& P = *params_;
      json leaders = json::array();
      for (Slot s = 1; s <= cfg_.slots; ++s)
         leaders.push_back(P.leaders.leader(s));
      json adversary = json::array();
      for (auto v : cfg_.adversary.validators)
         adversary.push_back(v);
      json data{{"name", cfg_.name},
                {"variant", tob::to_string(cfg_.variant)},
                {"n", cfg_.n},
                {"slots", cfg_.slots},
                {"delta", cfg_.delta},
                {"gst", cfg_.gst},
                {"seed", cfg_.seed},
                {"kappa", cfg_.kappa},
                {"eta", cfg_.eta ? json(*cfg_.eta) : json(nullptr)},
                {"rounds_per_slot", tob::rounds_per_slot(cfg_.variant)},
                {"slot_ticks", P.slot_ticks()},
                {"stakes", stakes(cfg_)},
                {"adversary_kind", to_string(cfg_.adversary.kind)},
                {"adversary", adversary},
                {"leaders", leaders}};
      emit(0, -1, "meta", std::move(data));
   }

   void note_block(const core::Block& b, Tick t, std::int64_t v) {
      if (!traced_blocks_.insert(b.id).second) return;
      emit(t, v, "block",
           json{{"id", b.id.hex()}, {"parent", b.parent.hex()}, {"slot", b.slot}, {"proposer", b.proposer}});
   }

   void drain(ValidatorId v, Tick t) {
      for (const auto& e : validators_[v]->drain_events()) {
         json d{{"slot", e.slot}, {"block", e.block.hex()}};
         if (e.grade >= 0) d["grade"] = e.grade;
         if (e.checkpoint) d["checkpoint"] = checkpoint_json(*e.checkpoint);
         emit(t, v, tob::to_string(e.kind), std::move(d));
      }
   }

   void deliver(Tick t) {
      auto it = queue_.find(t);
      if (it == queue_.end()) return;
      auto batch = std::move(it->second);
      queue_.erase(it);
      std::sort(batch.begin(), batch.end(), [](const Pending& a, const Pending& b) {
         return std::tie(a.to, a.msg) < std::tie(b.to, b.msg);
      });
      for (const auto& p : batch) {
         if (!cfg_.sleep.awake(p.to, t)) {
            enqueue(cfg_.sleep.next_awake(p.to, t), p);
            continue;
         }
         validators_[p.to]->on_message(*messages_[p.msg], t);
         if (cfg_.trace_level == TraceLevel::full)
            emit(t, p.to, "deliver", json{{"msg", p.msg}, {"sent_at", p.sent_at}});
      }
   }

   void enqueue(Tick at, const Pending& p) {
      if (at < end_) queue_[at].push_back(p);
   }

   json describe(const tob::Message& m, std::uint64_t id) {
      json d{{"msg", id}, {"slot", tob::slot_of(m.payload)}};
      std::visit(
          [&](const auto& x) {
             using T = std::decay_t<decltype(x)>;
             if constexpr (std::is_same_v<T, tob::Proposal>) {
                d["block"] = x.block.id.hex();
                d["b_c"] = x.b_c.hex();
                if (x.q_c) d["q_c"] = x.q_c->signers.size();
                if (x.lj) d["lj"] = checkpoint_json(*x.lj);
             } else if constexpr (std::is_same_v<T, tob::HeadVote>) {
                d["block"] = x.log.hex();
             } else if constexpr (std::is_same_v<T, ffg::FFGVote>) {
                d["source"] = checkpoint_json(x.source);
                d["target"] = checkpoint_json(x.target);
             } else {
                d["target"] = checkpoint_json(x.target);
             }
          },
          m.payload);
      return d;
   }

   void observe(const tob::Message& m, Tick t) {
      if (const auto* v = std::get_if<ffg::FFGVote>(&m.payload)) {
         for (const auto& o : ffg::detect_slashable(observer_, *v))
            record_offense(o, t);
         observer_.apply_ffg_vote(*v);
      } else if (const auto* a = std::get_if<ffg::Ack>(&m.payload)) {
         for (const auto& o : ffg::detect_slashable(observer_, *a))
            record_offense(o, t);
         observer_.record_ack(*a);
      }
   }

   void record_offense(const ffg::SlashingOffense& o, Tick t) {
      json d{{"offender", o.offender}, {"offense", ffg::to_string(o.kind)}, {"vote", vote_json(o.vote)}};
      if (o.other) d["other"] = vote_json(*o.other);
      if (o.ack) d["ack"] = checkpoint_json(o.ack->target);
      emit(t, -1, "offense", std::move(d));
   }

   void dispatch(tob::Message m, Tick t) {
      const ValidatorId from = m.from;
      std::vector<Outgoing> outs;
      if (cfg_.adversary.contains(from)) {
         AdversaryView view{cfg_.n, cfg_.seed, validators_[from].get(), &previous_ffg_[from]};
         outs = adversary_act(cfg_.adversary, t, m, view);
         if (const auto* v = std::get_if<ffg::FFGVote>(&m.payload)) previous_ffg_[from].push_back(*v);
      } else {
         outs.push_back({m, everyone_but(cfg_.n, from), std::nullopt, ""});
      }

      for (auto& o : outs) {
         const std::uint64_t id = messages_.size();
         for (const auto& b : o.msg.blocks)
            note_block(b, t, from);
         json d = describe(o.msg, id);
         if (!o.injected.empty()) d["injected"] = o.injected;
         if (o.release_at) d["release_at"] = *o.release_at;
         emit(t, from, tob::kind_of(o.msg.payload), std::move(d));
         observe(o.msg, t);
         messages_.push_back(std::make_shared<const tob::Message>(std::move(o.msg)));

         struct Plan {
            ValidatorId to;
            Tick        at;
            Tick        sent;
         };
         std::vector<Plan> plan;
         for (auto to : o.recipients) {
            const bool coalition = cfg_.adversary.contains(to);
            Tick sent = t;
            if (o.release_at && !coalition) sent = *o.release_at;
            Tick at = coalition && o.release_at ? t + 1 : schedule_delivery(cfg_, sent, from, to, id);
            plan.push_back({to, at, sent});
         }
         // Gossip: once an honest validator holds the message, the others have it within delta.
         const bool relayed = !(cfg_.adversary.kind == AdversaryKind::split_view && t < cfg_.gst);
         if (relayed) {
            std::optional<Tick> first;
            for (const auto& p : plan)
               if (!cfg_.adversary.contains(p.to)) first = first ? std::min(*first, p.at) : p.at;
            if (first) {
               for (auto& p : plan)
                  if (!cfg_.adversary.contains(p.to) && p.at > *first + cfg_.delta) {
                     p.at = *first + cfg_.delta;
                     p.sent = *first;
                  }
               std::vector<bool> covered(cfg_.n, false);
               covered[from] = true;
               for (const auto& p : plan)
                  covered[p.to] = true;
               for (ValidatorId v = 0; v < cfg_.n; ++v)
                  if (!covered[v] && !cfg_.adversary.contains(v)) plan.push_back({v, *first + cfg_.delta, *first});
            }
         }
         for (const auto& p : plan)
            enqueue(p.at, Pending{p.to, id, p.sent});
      }
   }

   const NetworkConfig&                          cfg_;
   std::shared_ptr<const tob::ProtocolParams>    params_;
   std::vector<std::unique_ptr<tob::Validator>>  validators_;
   ffg::JustificationState                       observer_;
   std::vector<std::shared_ptr<const tob::Message>> messages_;
   std::map<Tick, std::vector<Pending>>          queue_;
   std::vector<std::vector<ffg::FFGVote>>        previous_ffg_;
   std::set<BlockId>                             traced_blocks_;
   Trace                                         trace_;
   Tick                                          end_ = 0;
};

} // namespace

Trace run(const NetworkConfig& cfg) {
   cfg.validate();
   Simulation sim(cfg);
   return sim.run();
}

} // namespace ssf::netsim
