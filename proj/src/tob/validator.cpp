#include <ssf/tob/validator.hpp>

#include <ssf/core/rng.hpp>

#include <algorithm>

namespace ssf::tob {

ValidatorId LeaderSchedule::leader(Slot slot) const {
   if (n_ == 0) throw Error("leader schedule over zero validators");
   if (kind_ == Kind::round_robin) return static_cast<ValidatorId>(slot % n_);
   core::RngStream rng(seed_, "leader", {slot});
   return static_cast<ValidatorId>(rng.uniform(0, static_cast<std::int64_t>(n_) - 1));
}

const char* to_string(ProtocolEvent::Kind k) {
   switch (k) {
      case ProtocolEvent::Kind::ga_output: return "ga-output";
      case ProtocolEvent::Kind::confirm: return "confirm";
      case ProtocolEvent::Kind::decide: return "decide";
      case ProtocolEvent::Kind::justify: return "justify";
      case ProtocolEvent::Kind::finalize: return "finalize";
      case ProtocolEvent::Kind::ssf_finalize: return "ssf-finalize";
   }
   return "?";
}

ValidatorState::ValidatorState(ValidatorId id, Variant v) : me(id), variant(v) {
   const auto g = core::genesis_block().id;
   b_c = b_c_prime = lock = candidate = kappa_confirmed = g;
   lj = lj_prime = ffg::genesis_checkpoint();
}

namespace {

std::vector<ffg::Stake> stakes_or_unit(const ProtocolParams& p) {
   if (!p.stakes.empty()) {
      if (p.stakes.size() != p.n) throw Error("stakes must have one entry per validator");
      return p.stakes;
   }
   return std::vector<ffg::Stake>(p.n, 1);
}

} // namespace

Validator::Validator(ValidatorId me, std::shared_ptr<const ProtocolParams> params)
    : me_(me), params_(std::move(params)), state_(me, params_->variant),
      js_(stakes_or_unit(*params_), &state_.tree) {
   if (params_->n == 0) throw Error("validator set is empty");
   if (me_ >= params_->n) throw Error("validator id out of range");
   if (params_->delta < 1) throw Error("delta must be at least 1");
   const bool three_grade = params_->variant == Variant::baseline_4d;
   ga_config_.grades = three_grade ? 3 : 2;
   ga_config_.delta = params_->delta;
   ga_config_.eta = params_->eta;
   ga_config_.validate();
}

const ga::GAInstance* Validator::ga(Slot slot) const {
   auto it = ga_.find(slot);
   return it == ga_.end() ? nullptr : &it->second;
}

const std::optional<Proposal>& Validator::proposal_for(Slot slot) const {
   static const std::optional<Proposal> none;
   auto it = proposals_.find(slot);
   return it == proposals_.end() ? none : it->second;
}

std::vector<ProtocolEvent> Validator::drain_events() {
   std::vector<ProtocolEvent> out;
   out.swap(events_);
   return out;
}

std::vector<core::Block> Validator::drain_created_blocks() {
   std::vector<core::Block> out;
   out.swap(created_);
   return out;
}

ga::GAInstance& Validator::ensure_ga(Slot slot) {
   auto it = ga_.find(slot);
   if (it != ga_.end()) return it->second;
   auto& inst = ga_.emplace(slot, ga::GAInstance(ga_config_, slot, state_.tree)).first->second;
   Slot lo = slot;
   if (ga_config_.eta) lo = slot >= *ga_config_.eta ? slot - *ga_config_.eta + 1 : 0;
   for (auto b = vote_book_.lower_bound(lo); b != vote_book_.end() && b->first <= slot; ++b)
      for (const auto& v : b->second)
         inst.receive(v);
   return inst;
}

void Validator::ingest_blocks(const std::vector<core::Block>& blocks) {
   for (const auto& b : blocks) {
      try {
         state_.tree.insert(b);
      } catch (const core::InvalidBlock&) {
      } catch (const ConflictingContent&) {
      }
   }
}

void Validator::feed_vote(const HeadVote& v) {
   auto& book = vote_book_[v.instance];
   if (std::find(book.begin(), book.end(), v) != book.end()) return;
   book.push_back(v);
   for (auto it = ga_.lower_bound(v.instance); it != ga_.end(); ++it)
      it->second.receive(v);
   if (v.instance == params_->slot_at(now_)) state_.support[v.sender] = v.log;
}

void Validator::refresh_lj() { state_.lj = js_.latest_justified(); }

void Validator::on_ffg_vote(const ffg::FFGVote& v) {
   auto applied = js_.apply_ffg_vote(v);
   const Slot cur = params_->slot_at(now_);
   for (const auto& c : applied.justified)
      events_.push_back({ProtocolEvent::Kind::justify, cur, c.block, -1, c});
   for (const auto& c : js_.finalize())
      events_.push_back({ProtocolEvent::Kind::finalize, cur, c.block, -1, c});
   if (!applied.justified.empty()) refresh_lj();
}

std::vector<Message> Validator::on_message(const Message& m, Tick now) {
   now_ = std::max(now_, now);
   ingest_blocks(m.blocks);
   std::visit(
       [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Proposal>) {
             if (p.proposer == m.from && p.proposer == params_->leaders.leader(p.slot) &&
                 !proposals_.count(p.slot))
                proposals_[p.slot] = p;
          } else if constexpr (std::is_same_v<T, HeadVote>) {
             feed_vote(p);
          } else if constexpr (std::is_same_v<T, ffg::FFGVote>) {
             on_ffg_vote(p);
          } else {
             if (js_.record_ack(p))
                events_.push_back({ProtocolEvent::Kind::ssf_finalize, params_->slot_at(now_), p.target.block,
                                   -1, p.target});
          }
       },
       m.payload);
   return {};
}

void Validator::tick_ga(Tick now) {
   const auto& P = *params_;
   const Slot now_slot = P.slot_at(now);
   for (Slot s = now_slot > 2 ? now_slot - 2 : 1; s <= now_slot; ++s)
      if (P.slot_start(s) + P.delta <= now && !ga_.count(s)) ensure_ga(s);
   for (auto& [k, inst] : ga_) {
      const Tick start = P.slot_start(k) + P.delta;
      if (now < start || inst.finished()) continue;
      for (const auto& o : inst.tick(now - start))
         events_.push_back({ProtocolEvent::Kind::ga_output, k, o.log, o.grade, std::nullopt});
   }
   const Slot cur = now_slot;
   const Slot keep = ga_config_.eta ? *ga_config_.eta + 2 : 2;
   while (!ga_.empty() && ga_.begin()->first + 3 < cur && ga_.begin()->second.finished())
      ga_.erase(ga_.begin());
   while (!vote_book_.empty() && vote_book_.begin()->first + keep < cur)
      vote_book_.erase(vote_book_.begin());
   while (!proposals_.empty() && proposals_.begin()->first + 3 < cur)
      proposals_.erase(proposals_.begin());
}

std::optional<BlockId> Validator::ga_output(Slot instance, int grade) const {
   if (instance == 0) return std::nullopt;
   auto it = ga_.find(instance);
   if (it == ga_.end()) return std::nullopt;
   return it->second.output_at_grade(grade);
}

Message Validator::make_message(Payload p, Tick now, std::vector<core::Block> blocks) const {
   return Message{me_, now, std::move(p), std::move(blocks)};
}

Proposal Validator::propose(Slot slot) {
   if (params_->leaders.leader(slot) != me_)
      throw NotLeader("validator " + std::to_string(me_) + " does not lead slot " + std::to_string(slot));
   const auto& tree = state_.tree;
   BlockId parent;
   auto g0 = ga_output(slot - 1, 0);
   if (state_.variant == Variant::baseline_4d || state_.variant == Variant::prob_3d) {
      parent = g0 && tree.contains(*g0) ? *g0 : state_.candidate;
      state_.candidate = parent;
   } else {
      parent = g0 && tree.contains(*g0) && tree.is_prefix(state_.b_c, *g0) ? *g0 : state_.b_c;
   }
   auto block = core::make_block(parent, slot, me_, "slot:" + std::to_string(slot) + "/proposer:" +
                                                        std::to_string(me_));
   state_.tree.insert(block);
   created_.push_back(block);

   Proposal p;
   p.proposer = me_;
   p.slot = slot;
   p.block = block;
   if (state_.variant == Variant::baseline_4d || state_.variant == Variant::prob_3d) {
      p.b_c = parent;
   } else {
      p.b_c = state_.b_c;
      p.q_c = state_.q_c;
      if (uses_ffg(state_.variant)) p.lj = state_.lj;
   }
   proposals_[slot] = p;
   return p;
}

bool Validator::proposal_valid(const Proposal& p, Slot slot) const {
   const auto& tree = state_.tree;
   if (p.slot != slot || p.block.slot != slot) return false;
   if (p.proposer != params_->leaders.leader(slot) || p.block.proposer != p.proposer) return false;
   if (!tree.contains(p.block.id) || !tree.contains(p.b_c)) return false;
   if (!tree.is_prefix(p.b_c, p.block.id)) return false;
   if (state_.variant == Variant::baseline_4d || state_.variant == Variant::prob_3d) return true;

   const bool ffg = uses_ffg(state_.variant);
   if (ffg && (!p.lj || !js_.is_justified(*p.lj))) return false;
   if (p.b_c == tree.genesis().id) return true;
   if (ffg && p.b_c == p.lj->block) return true;
   if (!p.q_c || p.q_c->block != p.b_c) return false;
   std::vector<ValidatorId> signers = p.q_c->signers;
   std::sort(signers.begin(), signers.end());
   signers.erase(std::unique(signers.begin(), signers.end()), signers.end());
   if (std::any_of(signers.begin(), signers.end(), [&](ValidatorId v) { return v >= params_->n; }))
      return false;
   return signers.size() >= quorum_size(params_->n);
}

std::optional<QuorumCert> Validator::certificate_for(Slot slot, const BlockId& block) const {
   auto it = ga_.find(slot);
   if (it == ga_.end()) return std::nullopt;
   auto signers = it->second.live_voters(block, slot);
   if (signers.size() < quorum_size(params_->n)) return std::nullopt;
   return QuorumCert{block, slot, std::move(signers)};
}

std::pair<HeadVote, std::optional<ffg::FFGVote>> Validator::vote(const Proposal* proposal, Slot slot,
                                                                 Tick now) {
   now_ = std::max(now_, now);
   const auto& tree = state_.tree;
   const bool valid = proposal && proposal_valid(*proposal, slot);
   std::optional<ffg::FFGVote> ffg_out;

   if (state_.variant == Variant::baseline_4d || state_.variant == Variant::prob_3d) {
      auto g1 = ga_output(slot - 1, 1);
      state_.lock = g1 && tree.contains(*g1) ? *g1 : tree.genesis().id;
   } else {
      if (uses_ffg(state_.variant) && valid && proposal->lj->slot > state_.lj_prime.slot)
         state_.lj_prime = *proposal->lj;
      if (state_.variant == Variant::streamlined) {
         ffg_out = ffg_vote(slot);
         if (slot > 1) fast_confirm(slot - 1);
      }
      if (uses_ffg(state_.variant) && !tree.is_prefix(state_.lj_prime.block, state_.b_c_prime))
         state_.b_c_prime = state_.lj_prime.block;
      if (valid && tree.is_prefix(state_.b_c_prime, proposal->b_c)) state_.b_c_prime = proposal->b_c;
      auto g1 = ga_output(slot - 1, 1);
      state_.lock = g1 && tree.contains(*g1) && tree.is_prefix(state_.b_c_prime, *g1) ? *g1 : state_.b_c_prime;
   }

   BlockId target = state_.lock;
   if (valid && tree.is_prefix(state_.lock, proposal->block.id)) target = proposal->block.id;

   auto& inst = ensure_ga(slot);
   const Tick local = now - (params_->slot_start(slot) + params_->delta);
   HeadVote hv = inst.input(me_, target, local);
   hv.sent_at = now;
   auto& book = vote_book_[slot];
   if (std::find(book.begin(), book.end(), hv) == book.end()) book.push_back(hv);
   for (auto it = ga_.upper_bound(slot); it != ga_.end(); ++it)
      it->second.receive(hv);
   state_.support[me_] = target;
   return {hv, ffg_out};
}

std::pair<std::optional<BlockId>, std::optional<QuorumCert>> Validator::fast_confirm(Slot slot) {
   const auto& tree = state_.tree;
   std::optional<BlockId> base;
   if (uses_ffg(state_.variant)) base = state_.lj_prime.block;
   std::optional<BlockId> found;
   if (auto it = ga_.find(slot); it != ga_.end()) {
      auto votes = it->second.live_votes(slot);
      found = core::highest_with_support(tree, votes, quorum_size(params_->n), base);
   }
   if (found) {
      state_.b_c = *found;
      state_.q_c = certificate_for(slot, *found);
      if (confirmed_.insert(*found).second)
         events_.push_back({ProtocolEvent::Kind::confirm, slot, *found, -1, std::nullopt});
      return {found, state_.q_c};
   }
   if (base) {
      state_.b_c = *base;
      if (state_.q_c && state_.q_c->block != *base) state_.q_c.reset();
   }
   return {std::nullopt, std::nullopt};
}

ffg::FFGVote Validator::ffg_vote(Slot slot) {
   const auto& tree = state_.tree;
   const auto& src = state_.lj_prime;
   BlockId target = tree.is_prefix(src.block, state_.b_c) ? state_.b_c : src.block;
   ffg::FFGVote v{me_, src, ffg::Checkpoint{target, slot}, slot};
   last_ffg_ = v;
   on_ffg_vote(v);
   return v;
}

std::vector<BlockId> Validator::decide(Slot slot) {
   auto g2 = ga_output(slot - 1, 2);
   if (!g2 || !state_.tree.contains(*g2)) return {};
   if (!state_.decided.empty() && state_.tree.is_prefix(*g2, state_.decided.back())) return {};
   state_.decided.push_back(*g2);
   events_.push_back({ProtocolEvent::Kind::decide, slot, *g2, -1, std::nullopt});
   return {*g2};
}

std::optional<ffg::Ack> Validator::acknowledge(Slot slot) {
   if (!last_ffg_ || last_ffg_->target.slot != slot) return std::nullopt;
   if (!js_.is_justified(last_ffg_->target)) return std::nullopt;
   ffg::Ack a{me_, last_ffg_->target};
   if (js_.record_ack(a))
      events_.push_back({ProtocolEvent::Kind::ssf_finalize, slot, a.target.block, -1, a.target});
   return a;
}

void Validator::end_of_slot(Slot slot) {
   if (uses_ffg(state_.variant)) state_.lj_prime = state_.lj;
   state_.support_prime = std::move(state_.support);
   state_.support.clear();
   state_.b_c_prime = state_.b_c;

   if (state_.variant == Variant::prob_3d && slot > params_->kappa) {
      const auto& tree = state_.tree;
      BlockId tip = state_.lock;
      if (auto it = state_.support_prime.find(me_); it != state_.support_prime.end()) tip = it->second;
      const Slot bound = slot - params_->kappa;
      const core::Block* b = tree.find(tip);
      while (b && b->slot > bound)
         b = tree.find(b->parent);
      if (b && b->id != state_.kappa_confirmed && !tree.is_prefix(b->id, state_.kappa_confirmed)) {
         state_.kappa_confirmed = b->id;
         if (confirmed_.insert(b->id).second)
            events_.push_back({ProtocolEvent::Kind::confirm, slot, b->id, -1, std::nullopt});
      }
   }
}

std::vector<Message> Validator::on_tick(Tick now, bool awake) {
   now_ = std::max(now_, now);
   tick_ga(now);
   if (!awake) return {};
   const auto& P = *params_;
   const Slot slot = P.slot_at(now);
   const Tick off = now - P.slot_start(slot);
   if (off % P.delta != 0) return {};
   const auto round = off / P.delta;
   const Variant v = state_.variant;
   std::vector<Message> out;

   auto send_vote = [&](const std::optional<Proposal>& p) {
      auto [hv, ffg] = vote(p ? &*p : nullptr, slot, now);
      std::vector<core::Block> carry;
      if (const auto* b = state_.tree.find(hv.log); b && !b->is_genesis()) carry.push_back(*b);
      out.push_back(make_message(hv, now, carry));
      if (ffg) out.push_back(make_message(*ffg, now));
   };

   if (round == 0) {
      if (P.leaders.leader(slot) == me_) {
         auto p = propose(slot);
         out.push_back(make_message(p, now, {p.block}));
      }
      return out;
   }
   if (round == 1) {
      send_vote(proposal_for(slot));
      return out;
   }
   switch (v) {
      case Variant::baseline_4d:
         if (round == 2) decide(slot);
         break;
      case Variant::prob_3d:
      case Variant::streamlined:
         if (round == 2) end_of_slot(slot);
         break;
      case Variant::fastconfirm:
         if (round == 2) fast_confirm(slot);
         if (round == 3) end_of_slot(slot);
         break;
      case Variant::ssf:
         if (round == 2) {
            fast_confirm(slot);
            out.push_back(make_message(ffg_vote(slot), now));
         }
         if (round == 3) {
            if (auto a = acknowledge(slot)) out.push_back(make_message(*a, now));
            end_of_slot(slot);
         }
         break;
   }
   return out;
}

} // namespace ssf::tob
