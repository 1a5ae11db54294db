#include <ssf/netsim/simulator.hpp>

#include <algorithm>
#include <ostream>
#include <set>
#include <unordered_map>

namespace ssf::netsim {

using nlohmann::json;

double Metrics::msgs_per_slot_per_validator() const {
   if (slots == 0 || n == 0) return 0.0;
   return static_cast<double>(messages) / static_cast<double>(slots) / static_cast<double>(n);
}

namespace {

void cell(std::ostream& os, const std::optional<Slot>& v) {
   if (v) os << *v;
}

// Number of ids that do not lie on the chain ending at the deepest one.
std::size_t off_chain(const core::BlockTree& tree, const std::vector<BlockId>& ids) {
   std::vector<BlockId> known;
   for (const auto& id : ids)
      if (tree.contains(id)) known.push_back(id);
   if (known.size() < 2) return 0;
   auto deepest = *std::max_element(known.begin(), known.end(), [&](const BlockId& a, const BlockId& b) {
      return std::make_pair(tree.depth(a), b) < std::make_pair(tree.depth(b), a);
   });
   std::size_t bad = 0;
   for (const auto& id : known)
      if (!tree.is_prefix(id, deepest)) ++bad;
   return bad;
}

void keep_min(std::optional<Slot>& slot, Slot v) {
   if (!slot || v < *slot) slot = v;
}

} // namespace

void Metrics::write_csv(std::ostream& os) const {
   os << "block,slot,proposer,honest,confirmed_slot,justified_slot,finalized_slot,ssf_finalized_slot,"
         "decided_slot,reorged\n";
   for (const auto& b : blocks) {
      if (!b.proposal) continue;
      os << b.id.hex() << ',' << b.slot << ',' << b.proposer << ',' << (b.honest ? 1 : 0) << ',';
      cell(os, b.confirmed);
      os << ',';
      cell(os, b.justified);
      os << ',';
      cell(os, b.finalized);
      os << ',';
      cell(os, b.ssf_finalized);
      os << ',';
      cell(os, b.decided);
      os << ',' << (b.reorged ? 1 : 0) << '\n';
   }
}

Metrics evaluate(const Trace& trace) {
   Metrics m;
   if (trace.events.empty() || trace.events.front().kind != "meta") throw Error("trace has no meta record");
   const json& meta = trace.events.front().data;
   m.name = meta.at("name").get<std::string>();
   m.variant = meta.at("variant").get<std::string>();
   m.n = meta.at("n").get<std::size_t>();
   m.slots = meta.at("slots").get<Slot>();
   m.rounds_per_slot = meta.at("rounds_per_slot").get<int>();
   const Tick slot_ticks = meta.at("slot_ticks").get<Tick>();
   const bool synchronous = meta.at("gst").get<Tick>() == 0 && meta.at("adversary_kind") != "split_view";
   std::set<std::int64_t> adversary;
   for (const auto& v : meta.at("adversary"))
      adversary.insert(v.get<std::int64_t>());
   std::vector<ValidatorId> leaders = meta.at("leaders").get<std::vector<ValidatorId>>();
   auto honest = [&](std::int64_t v) { return v >= 0 && !adversary.count(v); };
   auto slot_of_tick = [&](Tick t) { return static_cast<Slot>(t / slot_ticks) + 1; };

   core::BlockTree tree;
   std::unordered_map<BlockId, std::size_t, BlockIdHash> index;
   auto metric_for = [&](const BlockId& id) -> BlockMetrics* {
      auto it = index.find(id);
      return it == index.end() ? nullptr : &m.blocks[it->second];
   };

   std::vector<BlockId> finalized, ssf_finalized, decided;
   std::map<Slot, std::vector<BlockId>> grade1;
   std::vector<std::pair<Slot, BlockId>> honest_votes;  // (instance, block)
   std::set<std::string> injected, detected;

   for (std::size_t i = 1; i < trace.events.size(); ++i) {
      const auto& e = trace.events[i];
      const auto& d = e.data;
      const std::string& k = e.kind;
      if (k == "block") {
         core::Block b{BlockId::from_hex(d.at("id").get<std::string>()),
                       BlockId::from_hex(d.at("parent").get<std::string>()), d.at("slot").get<Slot>(),
                       d.at("proposer").get<ValidatorId>(), ""};
         if (b.is_genesis()) continue;
         try {
            tree.insert(b);
         } catch (const Error&) {
            continue;
         }
         if (!index.count(b.id)) {
            index[b.id] = m.blocks.size();
            BlockMetrics bm;
            bm.id = b.id;
            bm.slot = b.slot;
            bm.proposer = b.proposer;
            bm.honest = honest(b.proposer);
            m.blocks.push_back(bm);
         }
      } else if (k == "proposal" || k == "ga-input" || k == "ffg-vote" || k == "ack") {
         ++m.messages;
         if (k == "proposal") {
            if (auto* bm = metric_for(BlockId::from_hex(d.at("block").get<std::string>()))) {
               bm->proposal = true;
               const Slot s = d.at("slot").get<Slot>();
               bm->honest = honest(e.validator) && s >= 1 && s <= leaders.size() &&
                            leaders[s - 1] == static_cast<ValidatorId>(e.validator) && bm->slot == s;
            }
         } else if (k == "ga-input" && honest(e.validator)) {
            honest_votes.emplace_back(d.at("slot").get<Slot>(), BlockId::from_hex(d.at("block").get<std::string>()));
         } else if (k == "ffg-vote" && d.contains("injected")) {
            ++m.injected;
            injected.insert(json{{"sender", e.validator}, {"source", d.at("source")}, {"target", d.at("target")}}.dump());
         }
      } else if (k == "offense") {
         ++m.offenses;
         if (honest(d.at("offender").get<std::int64_t>())) ++m.honest_offenses;
         for (const char* key : {"vote", "other"}) {
            if (!d.contains(key)) continue;
            const auto& v = d.at(key);
            detected.insert(json{{"sender", v.at("sender")}, {"source", v.at("source")}, {"target", v.at("target")}}.dump());
         }
      } else if (honest(e.validator) && d.contains("block")) {
         const BlockId id = BlockId::from_hex(d.at("block").get<std::string>());
         BlockMetrics* bm = metric_for(id);
         const Slot at = slot_of_tick(e.tick);
         if (k == "confirm") {
            if (bm) keep_min(bm->confirmed, at);
         } else if (k == "justify") {
            if (bm) keep_min(bm->justified, at);
         } else if (k == "finalize") {
            if (bm) keep_min(bm->finalized, at);
            finalized.push_back(id);
         } else if (k == "ssf-finalize") {
            // Acks cast in the last round of a slot land on the opening tick of the next one.
            if (bm) keep_min(bm->ssf_finalized, e.tick > 0 ? slot_of_tick(e.tick - 1) : at);
            ssf_finalized.push_back(id);
         } else if (k == "decide") {
            if (bm) keep_min(bm->decided, at);
            decided.push_back(id);
         } else if (k == "ga-output" && d.at("grade").get<int>() == 1) {
            grade1[d.at("slot").get<Slot>()].push_back(id);
         }
      }
   }

   // Reorgs: every honest head vote cast in slot t must extend every honest proposal from slots before t.
   std::vector<std::pair<Slot, BlockId>> honest_props;
   for (const auto& b : m.blocks)
      if (b.proposal && b.honest) honest_props.emplace_back(b.slot, b.id);
   std::sort(honest_props.begin(), honest_props.end());
   std::unordered_map<BlockId, std::size_t, BlockIdHash> on_path;
   {
      std::set<BlockId> hp;
      for (const auto& [s, id] : honest_props)
         hp.insert(id);
      for (const auto& id : tree.ids()) {
         const auto& b = tree.get(id);
         std::size_t base = b.is_genesis() ? 0 : on_path.at(b.parent);
         on_path[id] = base + (hp.count(id) ? 1 : 0);
      }
   }
   std::set<BlockId> reorged;
   for (const auto& [t, vote] : honest_votes) {
      if (!tree.contains(vote)) continue;
      auto before = static_cast<std::size_t>(
          std::lower_bound(honest_props.begin(), honest_props.end(), std::make_pair(t, BlockId{})) -
          honest_props.begin());
      if (on_path.at(vote) == before) continue;
      for (std::size_t i = 0; i < before; ++i)
         if (!tree.is_prefix(honest_props[i].second, vote)) reorged.insert(honest_props[i].second);
   }
   for (const auto& id : reorged)
      if (auto* bm = metric_for(id)) bm->reorged = true;
   m.honest_reorgs = reorged.size();

   m.conflicting_finalized = off_chain(tree, finalized);
   m.conflicting_ssf_finalized = off_chain(tree, ssf_finalized);
   m.conflicting_decided = off_chain(tree, decided);
   if (synchronous)
      for (const auto& [slot, outs] : grade1)
         m.ga_grade1_conflicts += off_chain(tree, outs);

   for (const auto& s : injected)
      if (detected.count(s)) ++m.injected_detected;

   for (const auto& b : m.blocks) {
      if (!b.proposal || !b.honest) continue;
      auto lat = [&](const std::optional<Slot>& at, std::map<std::int64_t, std::size_t>& hist) {
         if (at) ++hist[static_cast<std::int64_t>(*at) - static_cast<std::int64_t>(b.slot)];
      };
      lat(b.justified, m.justify_latency);
      lat(b.finalized, m.finalize_latency);
      lat(b.ssf_finalized, m.ssf_finalize_latency);
      lat(b.confirmed, m.confirm_latency);
      lat(b.decided, m.decide_latency);
   }
   return m;
}

} // namespace ssf::netsim
