#include <ssf/cumulative/finality.hpp>

#include <ssf/core/rng.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ssf::cumulative {

const char* to_string(Modification m) {
   switch (m) {
   case Modification::native: return "native";
   case Modification::mod1: return "mod1";
   case Modification::mod2: return "mod2";
   case Modification::mod3: return "mod3";
   }
   return "?";
}

Modification modification_from_string(const std::string& s) {
   for (auto m : {Modification::native, Modification::mod1, Modification::mod2, Modification::mod3})
      if (s == to_string(m)) return m;
   throw ConfigError("cumulative.modification", "unknown modification '" + s + "'");
}

void StakeDistribution::validate() const {
   if (!(threshold > 0.0)) throw ConfigError("cumulative.threshold", "must be positive");
   for (std::size_t i = 0; i < stakes.size(); ++i)
      if (!(stakes[i] >= 0.0) || !std::isfinite(stakes[i]))
         throw ConfigError("stakes[" + std::to_string(i) + "]", "must be a finite non-negative number");
}

double StakeDistribution::total() const {
   double t = 0.0;
   for (double s : stakes)
      t += s;
   return t;
}

double CommitteeSample::total() const {
   double t = 0.0;
   for (double s : effective)
      t += s;
   return t;
}

namespace {

double unit(std::uint64_t seed, Slot slot, ValidatorId v) {
   return static_cast<double>(core::stream_seed(seed, "committee", {slot, v}) >> 11) * 0x1.0p-53;
}

bool mod1_slot(std::uint64_t seed, ValidatorId v, Slot slot, Slot window) {
   const Slot start = ((slot - 1) / window) * window + 1;
   const auto pick = core::keyed_uniform(seed, "mod1", {v, (slot - 1) / window}, 0,
                                         static_cast<std::int64_t>(window) - 1);
   return slot == start + static_cast<Slot>(pick);
}

// Large-validator contribution for `slot`, or 0 when not in the committee.
double large_share(Modification mod, double stake, std::uint64_t seed, ValidatorId v, Slot slot, Slot window) {
   switch (mod) {
   case Modification::mod1: return mod1_slot(seed, v, slot, window) ? stake : 0.0;
   case Modification::mod2: return stake / static_cast<double>(window);
   default: return stake;
   }
}

} // namespace

CommitteeSample sample_committee(const StakeDistribution& dist, Slot slot, Modification mod, std::uint64_t seed,
                                 Slot window) {
   if (window == 0) throw ConfigError("cumulative.window", "must be at least 1");
   if (slot == 0) throw Error("committees start at slot 1");
   CommitteeSample out;
   out.slot = slot;
   for (std::size_t i = 0; i < dist.stakes.size(); ++i) {
      const auto v = static_cast<ValidatorId>(i);
      const double stake = dist.stakes[i];
      if (stake <= 0.0) continue;
      double share = 0.0;
      if (stake >= dist.threshold)
         share = large_share(mod, stake, seed, v, slot, window);
      else if (unit(seed, slot, v) < stake / dist.threshold)
         share = stake;
      if (share > 0.0) {
         out.members.push_back(v);
         out.effective.push_back(share);
      }
   }
   return out;
}

void FinalityLedger::add(const BlockId& b, double stake, Slot slot) {
   history_[b][slot] += stake;
}

bool FinalityLedger::attested_by(ValidatorId v, const BlockId& b) const {
   auto it = frontier_.find(v);
   if (it == frontier_.end()) return false;
   return std::any_of(it->second.begin(), it->second.end(), [&](const BlockId& tip) { return tree_->is_prefix(b, tip); });
}

void FinalityLedger::accumulate(const CommitteeSample& sample, const BlockId& voted) {
   if (mod_ == Modification::mod3) {
      for (std::size_t i = 0; i < sample.members.size(); ++i)
         accumulate_vote(sample.members[i], sample.effective[i], sample.slot, voted);
      return;
   }
   const double total = sample.total();
   const core::Block* b = &tree_->get(voted);
   while (!b->is_genesis()) {
      add(b->id, total, sample.slot);
      if (mod_ == Modification::native) break;
      b = &tree_->get(b->parent);
   }
}

void FinalityLedger::accumulate_vote(ValidatorId v, double stake, Slot slot, const BlockId& voted) {
   const core::Block* b = &tree_->get(voted);
   if (mod_ != Modification::mod3) {
      while (!b->is_genesis()) {
         add(b->id, stake, slot);
         if (mod_ == Modification::native) break;
         b = &tree_->get(b->parent);
      }
      return;
   }
   while (!b->is_genesis() && !attested_by(v, b->id)) {
      add(b->id, stake, slot);
      b = &tree_->get(b->parent);
   }
   auto& tips = frontier_[v];
   std::erase_if(tips, [&](const BlockId& tip) { return tree_->is_prefix(tip, voted); });
   if (std::none_of(tips.begin(), tips.end(), [&](const BlockId& tip) { return tree_->is_prefix(voted, tip); }))
      tips.push_back(voted);
}

double FinalityLedger::attested_stake(const BlockId& b) const {
   auto it = history_.find(b);
   if (it == history_.end()) return 0.0;
   double t = 0.0;
   for (const auto& [slot, stake] : it->second)
      t += stake;
   return t;
}

double FinalityLedger::attested_stake_at(const BlockId& b, Slot slot) const {
   auto it = history_.find(b);
   if (it == history_.end()) return 0.0;
   double t = 0.0;
   for (auto jt = it->second.begin(); jt != it->second.end() && jt->first <= slot; ++jt)
      t += jt->second;
   return t;
}

std::vector<CurvePoint> attack_cost_curve(const FinalityLedger& ledger, const BlockId& block, Slot max_depth) {
   const Slot proposed = ledger.tree().get(block).slot;
   std::vector<CurvePoint> out;
   out.push_back({0, 0.0});
   for (Slot d = 1; d <= max_depth; ++d)
      out.push_back({d, ledger.attested_stake_at(block, proposed + d - 1) / 3.0});
   return out;
}

double min_reversion_stake(const FinalityLedger& ledger, const BlockId& block) {
   const double attested = ledger.attested_stake(block);
   if (attested <= 0.0) throw ffg::NotFinalized("block " + block.hex() + " has no attested stake");
   return attested / 3.0;
}

CommitteeSample Chapter7Fixture::committee(Slot slot, Modification mod, std::uint64_t seed) const {
   if (slot == 0) throw Error("committees start at slot 1");
   CommitteeSample out;
   out.slot = slot;
   for (std::size_t i = 0; i < large_count; ++i) {
      const auto v = static_cast<ValidatorId>(i);
      const double share = large_share(mod, large_stake, seed, v, slot, window);
      if (share > 0.0) {
         out.members.push_back(v);
         out.effective.push_back(share);
      }
   }
   const auto first = static_cast<ValidatorId>(large_count + (slot - 1) * small_per_slot);
   for (std::size_t i = 0; i < small_per_slot; ++i) {
      out.members.push_back(first + static_cast<ValidatorId>(i));
      out.effective.push_back(small_stake);
   }
   return out;
}

std::vector<CurvePoint> chain_curve(Modification mod, Slot slots,
                                    const std::function<CommitteeSample(Slot)>& committee) {
   core::BlockTree tree;
   FinalityLedger ledger(mod, tree);
   BlockId head = tree.genesis().id;
   BlockId first = head;
   for (Slot s = 1; s <= slots; ++s) {
      const core::Block b = core::make_block(head, s, 0, "slot:" + std::to_string(s));
      tree.insert(b);
      head = b.id;
      if (s == 1) first = head;
      auto sample = committee(s);
      sample.slot = s;
      ledger.accumulate(sample, head);
   }
   if (slots == 0) return {{0, 0.0}};
   return attack_cost_curve(ledger, first, slots);
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve, Modification mod, bool header) {
   if (header) os << "depth,cost_eth,modification\n";
   const auto flags = os.flags();
   const auto prec = os.precision();
   os.setf(std::ios::fixed);
   os.precision(3);
   for (const auto& p : curve)
      os << p.depth << ',' << p.cost << ',' << to_string(mod) << '\n';
   os.flags(flags);
   os.precision(prec);
}

} // namespace ssf::cumulative
