#include <ssf/tob/validator.hpp>

#include <gtest/gtest.h>

#include <map>

using namespace ssf;
using namespace ssf::tob;

namespace {

// Every message reaches every other validator exactly one tick after it is sent.
struct Lockstep {
   std::shared_ptr<ProtocolParams>         params;
   std::vector<std::unique_ptr<Validator>> vals;
   std::map<Tick, std::vector<Message>>    inbox;
   struct Seen {
      Tick          tick;
      ValidatorId   who;
      ProtocolEvent event;
   };
   std::vector<Seen>       events;
   std::map<Slot, BlockId> proposed;

   Lockstep(Variant v, std::size_t n) : params(std::make_shared<ProtocolParams>()) {
      params->variant = v;
      params->n = n;
      params->stakes.assign(n, 32);
      params->leaders = LeaderSchedule(LeaderSchedule::Kind::round_robin, n, 0);
      for (std::size_t i = 0; i < n; ++i)
         vals.push_back(std::make_unique<Validator>(static_cast<ValidatorId>(i), params));
   }

   void collect(Tick t) {
      for (auto& v : vals)
         for (auto& e : v->drain_events())
            events.push_back({t, v->state().me, e});
   }

   void run_slots(Slot slots) {
      const Tick end = static_cast<Tick>(slots) * params->slot_ticks();
      for (Tick t = 0; t < end; ++t) {
         for (const auto& m : inbox[t])
            for (auto& v : vals)
               if (v->state().me != m.from) v->on_message(m, t);
         inbox.erase(t);
         collect(t);
         for (auto& v : vals)
            for (auto& m : v->on_tick(t, true)) {
               if (const auto* p = std::get_if<Proposal>(&m.payload)) proposed[p->slot] = p->block.id;
               inbox[t + 1].push_back(m);
            }
         collect(t);
      }
   }

   BlockId proposal_block(Slot s) const {
      auto it = proposed.find(s);
      EXPECT_NE(it, proposed.end()) << "no proposal for slot " << s;
      return it == proposed.end() ? BlockId{} : it->second;
   }

   // First tick at which any validator reports `kind` for `block`.
   std::optional<Tick> first(ProtocolEvent::Kind kind, const BlockId& block) const {
      for (const auto& e : events)
         if (e.event.kind == kind && e.event.block == block) return e.tick;
      return std::nullopt;
   }

   std::size_t count(ProtocolEvent::Kind kind, const BlockId& block) const {
      std::set<ValidatorId> who;
      for (const auto& e : events)
         if (e.event.kind == kind && e.event.block == block) who.insert(e.who);
      return who.size();
   }
};

} // namespace

TEST(Variant, RoundsAndNames) {
   EXPECT_EQ(rounds_per_slot(Variant::baseline_4d), 4);
   EXPECT_EQ(rounds_per_slot(Variant::prob_3d), 3);
   EXPECT_EQ(rounds_per_slot(Variant::fastconfirm), 4);
   EXPECT_EQ(rounds_per_slot(Variant::ssf), 4);
   EXPECT_EQ(rounds_per_slot(Variant::streamlined), 3);
   for (auto v : {Variant::baseline_4d, Variant::prob_3d, Variant::fastconfirm, Variant::ssf, Variant::streamlined})
      EXPECT_EQ(variant_from_string(to_string(v)), v);
   EXPECT_THROW(variant_from_string("pbft"), Error);
   EXPECT_TRUE(uses_ffg(Variant::ssf));
   EXPECT_FALSE(uses_ffg(Variant::fastconfirm));
}

TEST(Quorum, CeilTwoThirds) {
   EXPECT_EQ(quorum_size(3), 2u);
   EXPECT_EQ(quorum_size(4), 3u);
   EXPECT_EQ(quorum_size(16), 11u);
   EXPECT_EQ(quorum_size(64), 43u);
}

TEST(LeaderSchedule, RoundRobinAndSeeded) {
   LeaderSchedule rr(LeaderSchedule::Kind::round_robin, 5, 0);
   EXPECT_EQ(rr.leader(1), 1u);
   EXPECT_EQ(rr.leader(5), 0u);
   LeaderSchedule a(LeaderSchedule::Kind::random, 7, 42), b(LeaderSchedule::Kind::random, 7, 42);
   std::set<ValidatorId> seen;
   for (Slot s = 1; s < 200; ++s) {
      EXPECT_EQ(a.leader(s), b.leader(s));
      EXPECT_LT(a.leader(s), 7u);
      seen.insert(a.leader(s));
   }
   EXPECT_EQ(seen.size(), 7u);
}

TEST(ProtocolParams, SlotArithmetic) {
   ProtocolParams p;
   p.variant = Variant::ssf;
   p.delta = 2;
   EXPECT_EQ(p.slot_ticks(), 8);
   EXPECT_EQ(p.slot_start(3), 16);
   EXPECT_EQ(p.slot_at(15), 2u);
   EXPECT_EQ(p.slot_at(16), 3u);
}

TEST(Validator, OnlyTheLeaderProposes) {
   Lockstep net(Variant::ssf, 4);
   EXPECT_THROW(net.vals[0]->propose(1), NotLeader);
   auto p = net.vals[1]->propose(1);
   EXPECT_EQ(p.proposer, 1u);
   EXPECT_EQ(p.slot, 1u);
   EXPECT_EQ(p.block.parent, net.vals[1]->state().tree.genesis().id);
   EXPECT_FALSE(net.vals[2]->proposal_valid(p, 1));  // block not yet known
   net.vals[2]->on_message(Message{1, 0, p, {p.block}}, 0);
   EXPECT_TRUE(net.vals[2]->proposal_valid(p, 1));
   EXPECT_FALSE(net.vals[2]->proposal_valid(p, 2));
   auto forged = p;
   forged.proposer = 3;
   EXPECT_FALSE(net.vals[2]->proposal_valid(forged, 1));
}

TEST(Validator, SsfJustifiesAndFinalizesInTheProposalSlot) {
   Lockstep net(Variant::ssf, 4);
   net.run_slots(6);
   const Tick len = net.params->slot_ticks();
   for (Slot s = 1; s <= 5; ++s) {
      const BlockId b = net.proposal_block(s);
      auto j = net.first(ProtocolEvent::Kind::justify, b);
      ASSERT_TRUE(j) << "slot " << s;
      EXPECT_EQ(net.params->slot_at(*j), s);
      EXPECT_EQ(net.count(ProtocolEvent::Kind::justify, b), 4u);
      auto f = net.first(ProtocolEvent::Kind::ssf_finalize, b);
      ASSERT_TRUE(f) << "slot " << s;
      // Acks go out in the last round and land on the next slot's opening tick.
      EXPECT_LE(*f, net.params->slot_start(s) + len);
      auto c = net.first(ProtocolEvent::Kind::confirm, b);
      ASSERT_TRUE(c);
      EXPECT_EQ(net.params->slot_at(*c), s);
   }
   for (const auto& v : net.vals)
      EXPECT_EQ(v->state().b_c, net.proposal_block(6));
}

TEST(Validator, StreamlinedJustifiesTwoSlotsLater) {
   Lockstep net(Variant::streamlined, 4);
   net.run_slots(8);
   for (Slot s = 1; s <= 5; ++s) {
      const BlockId b = net.proposal_block(s);
      auto j = net.first(ProtocolEvent::Kind::justify, b);
      ASSERT_TRUE(j) << "slot " << s;
      EXPECT_EQ(net.params->slot_at(*j), s + 2) << "slot " << s;
      auto f = net.first(ProtocolEvent::Kind::finalize, b);
      ASSERT_TRUE(f);
      EXPECT_EQ(net.params->slot_at(*f), s + 3);
   }
}

TEST(Validator, BaselineDecidesNextSlot) {
   Lockstep net(Variant::baseline_4d, 4);
   net.run_slots(6);
   for (Slot s = 1; s <= 4; ++s) {
      auto d = net.first(ProtocolEvent::Kind::decide, net.proposal_block(s));
      ASSERT_TRUE(d) << "slot " << s;
      EXPECT_EQ(net.params->slot_at(*d), s + 1);
   }
}

TEST(Validator, FastConfirmInSlot) {
   Lockstep net(Variant::fastconfirm, 4);
   net.run_slots(4);
   for (Slot s = 1; s <= 4; ++s) {
      auto c = net.first(ProtocolEvent::Kind::confirm, net.proposal_block(s));
      ASSERT_TRUE(c);
      EXPECT_EQ(net.params->slot_at(*c), s);
   }
}

TEST(Validator, ProbabilisticConfirmationIsKappaDeep) {
   Lockstep net(Variant::prob_3d, 4);
   net.params->kappa = 3;
   net.run_slots(10);
   for (Slot s = 1; s <= 5; ++s) {
      auto c = net.first(ProtocolEvent::Kind::confirm, net.proposal_block(s));
      ASSERT_TRUE(c) << "slot " << s;
      EXPECT_EQ(net.params->slot_at(*c), s + 3);
   }
}

TEST(Validator, ChainExtendsEveryHonestProposal) {
   for (auto v : {Variant::baseline_4d, Variant::prob_3d, Variant::fastconfirm, Variant::ssf, Variant::streamlined}) {
      Lockstep net(v, 5);
      net.run_slots(6);
      for (Slot s = 2; s <= 6; ++s) {
         const auto& tree = net.vals[0]->state().tree;
         EXPECT_EQ(tree.get(net.proposal_block(s)).parent, net.proposal_block(s - 1)) << to_string(v) << " slot " << s;
      }
   }
}

TEST(Validator, HonestFfgVotesNeverConflict) {
   Lockstep net(Variant::ssf, 4);
   net.run_slots(8);
   for (const auto& v : net.vals) {
      const auto& js = v->justification();
      EXPECT_TRUE(ffg::detect_all(js.vote_log()).empty());
   }
}
