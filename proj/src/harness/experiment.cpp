#include <ssf/harness/harness.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace ssf::harness {

namespace {

std::string fixed(double v, int digits = 4) {
   char buf[64];
   std::snprintf(buf, sizeof buf, "%.*f", digits, v);
   return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
   std::ofstream out(path, std::ios::binary | std::ios::trunc);
   if (!out) throw IoError(path, "cannot open for writing");
   out << content;
   out.flush();
   if (!out) throw IoError(path, "write failed");
}

void merge(LatencyStats& into, const LatencyStats& s) {
   if (s.count == 0) return;
   if (into.count == 0) {
      into = s;
      return;
   }
   const auto total = into.count + s.count;
   into.mean = (into.mean * static_cast<double>(into.count) + s.mean * static_cast<double>(s.count)) /
               static_cast<double>(total);
   into.count = total;
   into.min = std::min(into.min, s.min);
   into.max = std::max(into.max, s.max);
}

void latency_cells(std::ostream& os, const LatencyStats& s) {
   if (s.count == 0) {
      os << ",,,0";
      return;
   }
   os << ',' << fixed(s.mean) << ',' << s.min << ',' << s.max << ',' << s.count;
}

void seed_row(std::ostream& os, const std::string& scenario, const std::string& variant, const std::string& seed,
              const SeedSummary& s) {
   os << scenario << ',' << variant << ',' << seed << ',' << s.proposals;
   for (const auto* l : {&s.justify, &s.finalize, &s.ssf_finalize, &s.confirm, &s.decide})
      latency_cells(os, *l);
   os << ',' << s.reorgs << ',' << s.safety_violations << ',' << s.offenses << ',' << s.honest_offenses << ','
      << s.injected << ',' << s.injected_detected << ',' << fixed(s.msgs_per_slot_per_validator) << '\n';
}

std::optional<double> mean_of(const LatencyStats& s) {
   if (s.count == 0) return std::nullopt;
   return s.mean;
}

} // namespace

void LatencyStats::add(const std::map<std::int64_t, std::size_t>& hist) {
   for (const auto& [lat, cnt] : hist) {
      if (cnt == 0) continue;
      LatencyStats one;
      one.count = cnt;
      one.mean = static_cast<double>(lat);
      one.min = one.max = lat;
      merge(*this, one);
   }
}

SeedSummary summarize(std::uint64_t seed, const netsim::Metrics& m) {
   SeedSummary s;
   s.seed = seed;
   for (const auto& b : m.blocks)
      if (b.proposal && b.honest) ++s.proposals;
   s.justify.add(m.justify_latency);
   s.finalize.add(m.finalize_latency);
   s.ssf_finalize.add(m.ssf_finalize_latency);
   s.confirm.add(m.confirm_latency);
   s.decide.add(m.decide_latency);
   s.reorgs = m.honest_reorgs;
   s.safety_violations = m.safety_violations();
   s.offenses = m.offenses;
   s.honest_offenses = m.honest_offenses;
   s.injected = m.injected;
   s.injected_detected = m.injected_detected;
   s.msgs_per_slot_per_validator = m.msgs_per_slot_per_validator();
   return s;
}

Summary aggregate(const std::string& scenario, const std::string& variant, int rounds_per_slot,
                  std::vector<SeedSummary> seeds) {
   Summary out;
   out.scenario = scenario;
   out.variant = variant;
   out.rounds_per_slot = rounds_per_slot;
   std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
   out.seeds = std::move(seeds);
   auto& t = out.total;
   for (const auto& s : out.seeds) {
      t.proposals += s.proposals;
      merge(t.justify, s.justify);
      merge(t.finalize, s.finalize);
      merge(t.ssf_finalize, s.ssf_finalize);
      merge(t.confirm, s.confirm);
      merge(t.decide, s.decide);
      t.reorgs += s.reorgs;
      t.safety_violations += s.safety_violations;
      t.offenses += s.offenses;
      t.honest_offenses += s.honest_offenses;
      t.injected += s.injected;
      t.injected_detected += s.injected_detected;
      t.msgs_per_slot_per_validator += s.msgs_per_slot_per_validator;
   }
   if (!out.seeds.empty()) t.msgs_per_slot_per_validator /= static_cast<double>(out.seeds.size());
   return out;
}

void Summary::write_csv(std::ostream& os) const {
   os << "scenario,variant,seed,proposals";
   for (const char* l : {"justify", "finalize", "ssf_finalize", "confirm", "decide"})
      os << ',' << l << "_mean," << l << "_min," << l << "_max," << l << "_count";
   os << ",reorgs,safety_violations,offenses,honest_offenses,injected,injected_detected,"
         "msgs_per_slot_per_validator\n";
   for (const auto& s : seeds)
      seed_row(os, scenario, variant, std::to_string(s.seed), s);
   seed_row(os, scenario, variant, "all", total);
}

unsigned thread_budget() {
   if (const char* env = std::getenv("SSF_LAB_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
   }
   return std::max(1u, std::thread::hardware_concurrency());
}

std::string cumulative_curves_csv(const Scenario& scenario, std::uint64_t seed) {
   if (!scenario.cumulative) return {};
   const auto& spec = *scenario.cumulative;
   const auto& net = scenario.network;
   std::ostringstream os;
   bool header = true;
   for (auto mod : spec.modifications) {
      std::vector<cumulative::CurvePoint> curve;
      if (spec.fixture == "chapter7") {
         cumulative::Chapter7Fixture fx;
         fx.window = spec.window;
         curve = cumulative::chain_curve(mod, net.slots, [&](Slot s) { return fx.committee(s, mod, seed); });
      } else {
         cumulative::StakeDistribution dist;
         dist.threshold = spec.threshold;
         if (net.stakes.empty()) dist.stakes.assign(net.n, 32.0);
         for (auto s : net.stakes)
            dist.stakes.push_back(static_cast<double>(s));
         curve = cumulative::chain_curve(mod, net.slots, [&](Slot s) {
            return cumulative::sample_committee(dist, s, mod, seed, spec.window);
         });
      }
      cumulative::write_curve_csv(os, curve, mod, header);
      header = false;
   }
   return os.str();
}

Summary run_experiment(const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
                       const std::filesystem::path& out_dir, unsigned threads) {
   std::error_code ec;
   std::filesystem::create_directories(out_dir, ec);
   if (ec) throw IoError(out_dir, "cannot create directory: " + ec.message());

   if (threads == 0) threads = thread_budget();
   threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(seeds.size(), 1)));

   std::vector<SeedSummary> results(seeds.size());
   std::vector<std::exception_ptr> errors(seeds.size());
   std::atomic<std::size_t> next{0};
   auto worker = [&] {
      for (std::size_t i = next++; i < seeds.size(); i = next++) {
         try {
            netsim::NetworkConfig cfg = scenario.network;
            cfg.seed = seeds[i];
            const auto trace = netsim::run(cfg);
            const auto metrics = netsim::evaluate(trace);
            const std::string tag = "seed" + std::to_string(seeds[i]);
            write_file(out_dir / ("trace_" + tag + ".jsonl"), trace.to_jsonl());
            std::ostringstream csv;
            metrics.write_csv(csv);
            write_file(out_dir / ("metrics_" + tag + ".csv"), csv.str());
            if (scenario.cumulative)
               write_file(out_dir / ("curves_" + tag + ".csv"), cumulative_curves_csv(scenario, seeds[i]));
            results[i] = summarize(seeds[i], metrics);
         } catch (...) {
            errors[i] = std::current_exception();
         }
      }
   };
   if (threads <= 1) {
      worker();
   } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t)
         pool.emplace_back(worker);
   }
   for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

   Summary summary = aggregate(scenario.name(), tob::to_string(scenario.network.variant),
                               tob::rounds_per_slot(scenario.network.variant), std::move(results));
   std::ostringstream os;
   summary.write_csv(os);
   write_file(out_dir / "summary.csv", os.str());
   return summary;
}

std::vector<ReportRow> emit_report(const std::vector<Summary>& summaries) {
   std::vector<ReportRow> rows;
   for (const auto& s : summaries) {
      ReportRow r;
      r.scenario = s.scenario;
      r.variant = s.variant;
      r.rounds_per_slot = s.rounds_per_slot;
      r.justify = mean_of(s.total.justify);
      r.finalize = mean_of(s.total.finalize);
      r.ssf_finalize = mean_of(s.total.ssf_finalize);
      r.confirm = mean_of(s.total.confirm);
      r.decide = mean_of(s.total.decide);
      r.msgs_per_slot_per_validator = s.total.msgs_per_slot_per_validator;
      r.safety_violations = s.total.safety_violations;
      rows.push_back(r);
   }
   return rows;
}

namespace {

std::string opt_cell(const std::optional<double>& v, int digits) { return v ? fixed(*v, digits) : ""; }

} // namespace

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
   os << "scenario,variant,rounds_per_slot,justify_latency,finalize_latency,ssf_finalize_latency,"
         "confirm_latency,decide_latency,msgs_per_slot_per_validator,safety_violations\n";
   for (const auto& r : rows)
      os << r.scenario << ',' << r.variant << ',' << r.rounds_per_slot << ',' << opt_cell(r.justify, 4) << ','
         << opt_cell(r.finalize, 4) << ',' << opt_cell(r.ssf_finalize, 4) << ',' << opt_cell(r.confirm, 4) << ','
         << opt_cell(r.decide, 4) << ',' << fixed(r.msgs_per_slot_per_validator) << ',' << r.safety_violations
         << '\n';
}

void write_report_text(std::ostream& os, const std::vector<ReportRow>& rows) {
   const std::vector<std::string> head{"scenario", "variant", "rounds/slot", "justify", "finalize", "ssf-final",
                                       "confirm", "decide", "msgs/slot/val", "violations"};
   std::vector<std::vector<std::string>> cells{head};
   auto dash = [](const std::optional<double>& v) { return v ? fixed(*v, 2) : std::string("-"); };
   for (const auto& r : rows)
      cells.push_back({r.scenario, r.variant, std::to_string(r.rounds_per_slot), dash(r.justify), dash(r.finalize),
                       dash(r.ssf_finalize), dash(r.confirm), dash(r.decide),
                       fixed(r.msgs_per_slot_per_validator, 2), std::to_string(r.safety_violations)});
   std::vector<std::size_t> width(head.size(), 0);
   for (const auto& row : cells)
      for (std::size_t i = 0; i < row.size(); ++i)
         width[i] = std::max(width[i], row[i].size());
   for (const auto& row : cells) {
      for (std::size_t i = 0; i < row.size(); ++i) {
         if (i) os << "  ";
         if (i + 1 == row.size())
            os << row[i];
         else
            os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      }
      os << '\n';
   }
   os << std::right;
   os << "latencies are mean slots from proposal to the first honest validator reaching the state\n";
}

int exit_code(const std::vector<Summary>& summaries) {
   for (const auto& s : summaries)
      if (!s.clean()) return 1;
   return 0;
}

} // namespace ssf::harness
