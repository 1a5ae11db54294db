#include <ssf/netsim/simulator.hpp>

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace ssf;
using namespace ssf::netsim;
using nlohmann::json;

namespace {

NetworkConfig honest(tob::Variant v, std::size_t n, Slot slots, Tick delta = 1) {
   NetworkConfig c;
   c.variant = v;
   c.n = n;
   c.slots = slots;
   c.delta = delta;
   c.seed = 7;
   return c;
}

std::map<std::uint64_t, const TraceEvent*> sends(const Trace& t) {
   std::map<std::uint64_t, const TraceEvent*> out;
   for (const auto& e : t.events)
      if (e.kind == "proposal" || e.kind == "ga-input" || e.kind == "ffg-vote" || e.kind == "ack")
         out[e.data.at("msg").get<std::uint64_t>()] = &e;
   return out;
}

// Latency histogram recomputed straight from the trace: first honest event of `kind` per honest proposal.
std::map<std::int64_t, std::size_t> recount(const Trace& t, const std::string& kind) {
   const auto& meta = t.events.front().data;
   const Tick len = meta.at("slot_ticks").get<Tick>();
   std::map<std::string, Slot> proposed;
   std::map<std::string, Tick> first;
   for (const auto& e : t.events) {
      if (e.kind == "proposal") proposed[e.data.at("block").get<std::string>()] = e.data.at("slot").get<Slot>();
      if (e.kind == kind && e.validator >= 0 && !first.count(e.data.at("block").get<std::string>()))
         first[e.data.at("block").get<std::string>()] = e.tick;
   }
   std::map<std::int64_t, std::size_t> hist;
   for (const auto& [b, s] : proposed)
      if (auto it = first.find(b); it != first.end())
         ++hist[static_cast<std::int64_t>(it->second / len + 1) - static_cast<std::int64_t>(s)];
   return hist;
}

} // namespace

TEST(NetworkConfig, ValidateNamesTheField) {
   auto field_of = [](NetworkConfig c) {
      try {
         c.validate();
      } catch (const ConfigError& e) {
         return e.field;
      }
      return std::string("ok");
   };
   auto c = honest(tob::Variant::ssf, 4, 5);
   EXPECT_EQ(field_of(c), "ok");
   c.n = 0;
   EXPECT_EQ(field_of(c), "n");
   c = honest(tob::Variant::ssf, 4, 5);
   c.delta = 0;
   EXPECT_EQ(field_of(c), "delta");
   c = honest(tob::Variant::ssf, 4, 5);
   c.stakes = {1, 2};
   EXPECT_EQ(field_of(c), "stakes");
   c = honest(tob::Variant::ssf, 4, 5);
   c.sleep.intervals[9] = {{0, 3}};
   EXPECT_EQ(field_of(c), "sleep");
   c = honest(tob::Variant::ssf, 4, 0);
   EXPECT_EQ(field_of(c), "slots");
}

TEST(AdversaryKind, Names) {
   for (auto k : {AdversaryKind::none, AdversaryKind::equivocate, AdversaryKind::withhold_reveal,
                  AdversaryKind::split_view, AdversaryKind::crash_leader})
      EXPECT_EQ(adversary_kind_from_string(to_string(k)), k);
   EXPECT_THROW(adversary_kind_from_string("byzantine"), Error);
}

TEST(SleepSchedule, AwakeAndNextAwake) {
   SleepSchedule s;
   s.intervals[1] = {{4, 8}, {10, 12}};
   EXPECT_TRUE(s.awake(1, 3));
   EXPECT_FALSE(s.awake(1, 4));
   EXPECT_FALSE(s.awake(1, 7));
   EXPECT_TRUE(s.awake(1, 8));
   EXPECT_TRUE(s.awake(0, 5));
   EXPECT_EQ(s.next_awake(1, 5), 8);
   EXPECT_EQ(s.next_awake(1, 11), 12);
   EXPECT_EQ(s.next_awake(1, 9), 9);
}

TEST(Delivery, BoundsAfterAndBeforeGst) {
   auto c = honest(tob::Variant::ssf, 6, 5, 3);
   c.gst = 40;
   for (std::uint64_t id = 0; id < 2000; ++id) {
      const Tick sent = static_cast<Tick>(id % 60);
      const auto from = static_cast<ValidatorId>(id % 6), to = static_cast<ValidatorId>((id + 1) % 6);
      const Tick at = schedule_delivery(c, sent, from, to, id);
      EXPECT_EQ(at, schedule_delivery(c, sent, from, to, id));
      EXPECT_GE(at, sent + 1);
      if (sent >= c.gst)
         EXPECT_LE(at, sent + c.delta);
      else
         EXPECT_LE(at, c.gst + c.delta);
   }
}

TEST(Delivery, SplitViewHoldsCrossTrafficUntilGst) {
   auto c = honest(tob::Variant::ssf, 6, 5, 2);
   c.gst = 30;
   c.adversary.kind = AdversaryKind::split_view;
   c.adversary.partition = {0, 1, 2};
   EXPECT_EQ(schedule_delivery(c, 3, 0, 4, 1), 32);
   EXPECT_EQ(schedule_delivery(c, 3, 5, 1, 2), 32);
   EXPECT_LE(schedule_delivery(c, 3, 0, 2, 3), 3 + 4);
   EXPECT_LE(schedule_delivery(c, 30, 0, 4, 4), 32);
}

TEST(Run, DeterministicPerSeed) {
   auto c = honest(tob::Variant::ssf, 5, 6, 3);
   const auto a = run(c).to_jsonl(), b = run(c).to_jsonl();
   EXPECT_EQ(a, b);
   c.seed = 8;
   EXPECT_NE(run(c).to_jsonl(), a);
}

TEST(Run, EveryMessageArrivesOnceWithinDelta) {
   auto c = honest(tob::Variant::streamlined, 5, 6, 3);
   c.trace_level = TraceLevel::full;
   const auto t = run(c);
   const auto sent = sends(t);
   std::map<std::uint64_t, std::set<std::int64_t>> got;
   const Tick end = c.end_tick();
   for (const auto& e : t.events) {
      if (e.kind != "deliver") continue;
      const auto id = e.data.at("msg").get<std::uint64_t>();
      ASSERT_TRUE(sent.count(id));
      const Tick d = e.tick - sent.at(id)->tick;
      EXPECT_GE(d, 1);
      EXPECT_LE(d, c.delta);
      EXPECT_TRUE(got[id].insert(e.validator).second) << "duplicate delivery";
      EXPECT_NE(e.validator, sent.at(id)->validator);
   }
   for (const auto& [id, e] : sent)
      if (e->tick + c.delta < end) EXPECT_EQ(got[id].size(), c.n - 1) << "msg " << id;
}

TEST(Run, SleepersReceiveOnWaking) {
   auto c = honest(tob::Variant::streamlined, 5, 8, 1);
   c.eta = 4;
   c.sleep.intervals[2] = {{6, 15}};
   c.trace_level = TraceLevel::full;
   const auto t = run(c);
   std::size_t on_wake = 0;
   for (const auto& e : t.events) {
      if (e.validator != 2) continue;
      if (e.kind == "deliver") {
         EXPECT_FALSE(e.tick >= 6 && e.tick < 15);
         if (e.tick == 15) ++on_wake;
      }
      if (e.kind == "ga-input" || e.kind == "proposal") EXPECT_FALSE(e.tick >= 6 && e.tick < 15);
   }
   EXPECT_GT(on_wake, 0u);
}

TEST(Run, SplitViewPreGstNoCrossDelivery) {
   auto c = honest(tob::Variant::ssf, 6, 6, 1);
   c.gst = 16;
   c.adversary.kind = AdversaryKind::split_view;
   c.adversary.partition = {0, 1, 2};
   c.trace_level = TraceLevel::full;
   const auto t = run(c);
   const auto sent = sends(t);
   auto side = [](std::int64_t v) { return v < 3; };
   for (const auto& e : t.events) {
      if (e.kind != "deliver") continue;
      const auto* s = sent.at(e.data.at("msg").get<std::uint64_t>());
      if (side(s->validator) != side(e.validator) && s->tick < c.gst) EXPECT_GE(e.tick, c.gst + c.delta);
   }
}

TEST(Trace, JsonlRoundTrip) {
   auto c = honest(tob::Variant::ssf, 4, 4);
   c.trace_level = TraceLevel::full;
   const auto t = run(c);
   std::stringstream ss;
   t.write_jsonl(ss);
   const auto back = Trace::read_jsonl(ss);
   ASSERT_EQ(back.events.size(), t.events.size());
   for (std::size_t i = 0; i < t.events.size(); ++i) {
      EXPECT_EQ(back.events[i].tick, t.events[i].tick);
      EXPECT_EQ(back.events[i].validator, t.events[i].validator);
      EXPECT_EQ(back.events[i].kind, t.events[i].kind);
      EXPECT_EQ(back.events[i].data, t.events[i].data);
   }
   EXPECT_EQ(back.to_jsonl(), t.to_jsonl());
   EXPECT_EQ(t.events.front().kind, "meta");
   for (const auto& line : {std::string("{\"tick\":0}")}) {
      std::stringstream bad(line + "\n");
      EXPECT_ANY_THROW(Trace::read_jsonl(bad));
   }
}

TEST(Evaluate, HonestRunsMatchTraceRecount) {
   for (auto v : {tob::Variant::ssf, tob::Variant::streamlined, tob::Variant::fastconfirm, tob::Variant::baseline_4d,
                  tob::Variant::prob_3d}) {
      auto c = honest(v, 7, 12, 2);
      c.kappa = 2;
      const auto t = run(c);
      const auto m = evaluate(t);
      SCOPED_TRACE(tob::to_string(v));
      EXPECT_EQ(m.safety_violations(), 0u);
      EXPECT_EQ(m.honest_reorgs, 0u);
      EXPECT_EQ(m.offenses, 0u);
      EXPECT_EQ(m.justify_latency, recount(t, "justify"));
      EXPECT_EQ(m.finalize_latency, recount(t, "finalize"));
      EXPECT_EQ(m.confirm_latency, recount(t, "confirm"));
      EXPECT_EQ(m.decide_latency, recount(t, "decide"));
      EXPECT_EQ(m.messages, sends(t).size());
      std::size_t proposals = 0;
      for (const auto& b : m.blocks)
         proposals += b.proposal ? 1 : 0;
      EXPECT_EQ(proposals, 12u);
   }
}

TEST(Evaluate, SsfHonestLatencies) {
   const auto m = evaluate(run(honest(tob::Variant::ssf, 8, 10)));
   ASSERT_EQ(m.justify_latency.size(), 1u);
   EXPECT_EQ(m.justify_latency.begin()->first, 0);
   ASSERT_EQ(m.ssf_finalize_latency.size(), 1u);
   EXPECT_EQ(m.ssf_finalize_latency.begin()->first, 0);
   EXPECT_GE(m.ssf_finalize_latency.begin()->second, 9u);
   EXPECT_EQ(m.finalize_latency.begin()->first, 1);
}

TEST(Evaluate, InjectedOffensesAreAllDetected) {
   for (auto inj : {FFGInjection::double_vote, FFGInjection::surround}) {
      auto c = honest(tob::Variant::ssf, 8, 16);
      c.adversary.kind = AdversaryKind::equivocate;
      c.adversary.validators = {0, 1};
      c.adversary.ffg_injection = inj;
      const auto m = evaluate(run(c));
      EXPECT_GT(m.injected, 0u);
      EXPECT_EQ(m.injected_detected, m.injected);
      EXPECT_EQ(m.honest_offenses, 0u);
      EXPECT_GT(m.offenses, 0u);
   }
}

TEST(Evaluate, WithheldMessagesAreReleasedLate) {
   auto c = honest(tob::Variant::fastconfirm, 8, 10);
   c.adversary.kind = AdversaryKind::withhold_reveal;
   c.adversary.validators = {0, 1};
   c.adversary.reveal_delay = 3;
   c.trace_level = TraceLevel::full;
   const auto t = run(c);
   const auto sent = sends(t);
   std::size_t withheld = 0;
   for (const auto& e : t.events) {
      if (e.kind != "deliver" || e.validator < 2) continue;
      const auto* s = sent.at(e.data.at("msg").get<std::uint64_t>());
      if (!s->data.contains("release_at")) continue;
      ++withheld;
      EXPECT_GE(e.tick, s->data.at("release_at").get<Tick>() + 1);
   }
   EXPECT_GT(withheld, 0u);
   EXPECT_EQ(evaluate(t).safety_violations(), 0u);
}

TEST(Evaluate, RejectsTraceWithoutMeta) {
   EXPECT_THROW(evaluate(Trace{}), Error);
}

TEST(Metrics, CsvHasOneRowPerProposal) {
   const auto m = evaluate(run(honest(tob::Variant::ssf, 4, 6)));
   std::stringstream ss;
   m.write_csv(ss);
   std::string line;
   std::getline(ss, line);
   EXPECT_EQ(line.rfind("block,slot,proposer", 0), 0u);
   std::size_t rows = 0;
   while (std::getline(ss, line))
      ++rows;
   EXPECT_EQ(rows, 6u);
   EXPECT_NEAR(m.msgs_per_slot_per_validator(), static_cast<double>(m.messages) / 24.0, 1e-12);
}
