#include <ssf/ffg/casper.hpp>

#include <algorithm>

namespace ssf::ffg {

namespace {

bool is_double_vote(const FFGVote& a, const FFGVote& b) {
   return a.sender == b.sender && a.target.slot == b.target.slot && a.target != b.target;
}

// `outer` surrounds `inner`.
bool surrounds(const FFGVote& outer, const FFGVote& inner) {
   return outer.sender == inner.sender && outer.source.slot < inner.source.slot &&
          inner.target.slot < outer.target.slot;
}

bool stale_after_ack(const FFGVote& v, const Ack& a) {
   return v.sender == a.sender && v.cast_at >= a.target.slot && v.target.slot < a.target.slot;
}

} // namespace

Checkpoint genesis_checkpoint() { return Checkpoint{core::genesis_block().id, 0}; }

const char* to_string(OffenseKind k) {
   switch (k) {
      case OffenseKind::double_vote: return "DOUBLE_VOTE";
      case OffenseKind::surround: return "SURROUND";
      case OffenseKind::stale_ffg_after_ack: return "STALE_FFG_AFTER_ACK";
   }
   return "?";
}

JustificationState::JustificationState(std::vector<Stake> stakes, const core::BlockTree* tree)
    : stakes_(std::move(stakes)), tree_(tree) {
   for (auto s : stakes_)
      total_ += s;
   if (total_ == 0) throw Error("total stake must be positive");
   justified_.insert(genesis_checkpoint());
   latest_ = genesis_checkpoint();
   finalized_.insert(genesis_checkpoint());
}

bool JustificationState::well_formed(const FFGVote& v) const {
   if (v.sender >= stakes_.size()) return false;
   if (v.source.slot >= v.target.slot) return false;
   if (tree_ && tree_->contains(v.source.block) && tree_->contains(v.target.block)) {
      if (!tree_->is_prefix(v.source.block, v.target.block)) return false;
      if (tree_->get(v.target.block).slot > v.target.slot) return false;
   }
   return true;
}

void JustificationState::settle_link(const Checkpoint& source, const Checkpoint& target,
                                     std::vector<Checkpoint>& newly) {
   std::vector<std::pair<Checkpoint, Checkpoint>> work{{source, target}};
   while (!work.empty()) {
      auto [s, t] = work.back();
      work.pop_back();
      if (!supermajority(links_.at({s, t}).stake)) continue;
      if (t.slot == s.slot + 1 && finalized_.insert(s).second) pending_finalized_.push_back(s);
      if (!justified_.insert(t).second) continue;
      newly.push_back(t);
      if (t.slot > latest_.slot || (t.slot == latest_.slot && t.block < latest_.block)) latest_ = t;
      if (auto it = targets_by_source_.find(t); it != targets_by_source_.end())
         for (const auto& next : it->second)
            work.emplace_back(t, next);
   }
}

JustificationState::Applied JustificationState::apply_ffg_votes(std::span<const FFGVote> votes) {
   Applied out;
   for (const auto& v : votes) {
      if (!well_formed(v)) {
         out.rejected.push_back(v);
         continue;
      }
      if (!seen_.insert(v).second) continue;
      by_sender_[v.sender].push_back(v);
      log_.push_back(v);

      Link link{v.source, v.target};
      auto [it, fresh] = links_.try_emplace(link);
      if (fresh) targets_by_source_[v.source].push_back(v.target);
      if (it->second.voters.insert(v.sender).second) it->second.stake += stake_of(v.sender);
      if (justified_.count(v.source)) settle_link(v.source, v.target, out.justified);
   }
   return out;
}

std::vector<Checkpoint> JustificationState::finalize() {
   std::vector<Checkpoint> out;
   out.swap(pending_finalized_);
   return out;
}

bool JustificationState::record_ack(const Ack& ack) {
   if (ack.sender >= stakes_.size()) return false;
   auto& [who, stake] = acks_[ack.target];
   if (!who.insert(ack.sender).second) return false;
   acks_by_sender_[ack.sender].push_back(ack);
   stake += stake_of(ack.sender);
   if (supermajority(stake) && !ssf_finalized_.count(ack.target)) {
      ssf_finalized_.insert(ack.target);
      return true;
   }
   return false;
}

std::span<const FFGVote> JustificationState::votes_by(ValidatorId v) const {
   auto it = by_sender_.find(v);
   if (it == by_sender_.end()) return {};
   return it->second;
}

const std::vector<Ack>& JustificationState::acks_by(ValidatorId v) const {
   static const std::vector<Ack> none;
   auto it = acks_by_sender_.find(v);
   return it == acks_by_sender_.end() ? none : it->second;
}

std::optional<Slot> JustificationState::latest_ack_slot(ValidatorId v) const {
   std::optional<Slot> best;
   for (const auto& a : acks_by(v))
      if (!best || a.target.slot > *best) best = a.target.slot;
   return best;
}

std::vector<SlashingOffense> detect_slashable(const JustificationState& js, const FFGVote& vote) {
   std::vector<SlashingOffense> out;
   for (const auto& prev : js.votes_by(vote.sender)) {
      if (prev == vote) continue;
      if (is_double_vote(prev, vote))
         out.push_back({vote.sender, OffenseKind::double_vote, vote, prev, std::nullopt});
      else if (surrounds(prev, vote) || surrounds(vote, prev))
         out.push_back({vote.sender, OffenseKind::surround, vote, prev, std::nullopt});
   }
   for (const auto& a : js.acks_by(vote.sender))
      if (stale_after_ack(vote, a))
         out.push_back({vote.sender, OffenseKind::stale_ffg_after_ack, vote, std::nullopt, a});
   return out;
}

std::vector<SlashingOffense> detect_slashable(const JustificationState& js, const Ack& ack) {
   std::vector<SlashingOffense> out;
   for (const auto& v : js.votes_by(ack.sender))
      if (stale_after_ack(v, ack))
         out.push_back({ack.sender, OffenseKind::stale_ffg_after_ack, v, std::nullopt, ack});
   return out;
}

std::vector<SlashingOffense> detect_all(std::span<const FFGVote> votes, std::span<const Ack> acks) {
   std::map<ValidatorId, std::vector<const FFGVote*>> by_sender;
   for (const auto& v : votes) {
      auto& mine = by_sender[v.sender];
      bool dup = std::any_of(mine.begin(), mine.end(), [&](const FFGVote* p) { return *p == v; });
      if (!dup) mine.push_back(&v);
   }
   std::vector<SlashingOffense> out;
   for (const auto& [sender, mine] : by_sender) {
      for (std::size_t i = 0; i < mine.size(); ++i)
         for (std::size_t j = i + 1; j < mine.size(); ++j) {
            const auto& a = *mine[i];
            const auto& b = *mine[j];
            if (is_double_vote(a, b))
               out.push_back({sender, OffenseKind::double_vote, b, a, std::nullopt});
            else if (surrounds(a, b) || surrounds(b, a))
               out.push_back({sender, OffenseKind::surround, b, a, std::nullopt});
         }
   }
   for (const auto& a : acks)
      for (const auto* v : by_sender[a.sender])
         if (stale_after_ack(*v, a))
            out.push_back({a.sender, OffenseKind::stale_ffg_after_ack, *v, std::nullopt, a});
   return out;
}

double min_reversion_stake(const JustificationState& js, const Checkpoint& cp) {
   if (!js.is_finalized(cp) && !js.is_ssf_finalized(cp))
      throw NotFinalized("checkpoint at slot " + std::to_string(cp.slot) + " is not finalized");
   return static_cast<double>(js.total_stake()) / 3.0;
}

} // namespace ssf::ffg
