#pragma once

#include <ssf/cumulative/finality.hpp>
#include <ssf/netsim/simulator.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ssf::harness {

struct IoError : Error {
   IoError(std::filesystem::path p, const std::string& what) : Error(p.string() + ": " + what), path(std::move(p)) {}
   std::filesystem::path path;
};

struct CumulativeSpec {
   std::vector<cumulative::Modification> modifications{cumulative::Modification::mod2};
   Slot                                  window = 32;
   std::string                           fixture;  ///< "chapter7" or empty for the scenario's own stakes
   double                                threshold = 4096.0;
};

/**
 * A validated run description. JSON keys: name, variant, n, slots, delta (1), gst (0), seed (0),
 * kappa (6), eta (null), leader_schedule ("round_robin"), stakes, adversary, sleep, trace_level
 * ("summary"), cumulative. Unknown keys are rejected.
 */
struct Scenario {
   netsim::NetworkConfig         network;
   std::optional<double>         adversary_fraction;
   std::optional<CumulativeSpec> cumulative;

   const std::string& name() const { return network.name; }
};

/// @throws ConfigError (field path, and line when it can be located) @throws IoError
Scenario parse_scenario(const std::filesystem::path& path);
/// `origin` is used in messages and as the default name.
Scenario parse_scenario_json(const std::string& text, const std::string& origin = "scenario");

/// "0..9", "1,4,7" or "5". @throws ConfigError
std::vector<std::uint64_t> parse_seeds(const std::string& spec);

struct LatencyStats {
   std::size_t count = 0;
   double      mean = 0.0;
   std::int64_t min = 0;
   std::int64_t max = 0;

   void add(const std::map<std::int64_t, std::size_t>& hist);
};

struct SeedSummary {
   std::uint64_t seed = 0;
   std::size_t   proposals = 0;  ///< honest proposals
   LatencyStats  justify, finalize, ssf_finalize, confirm, decide;
   std::size_t   reorgs = 0;
   std::size_t   safety_violations = 0;
   std::size_t   offenses = 0;
   std::size_t   honest_offenses = 0;
   std::size_t   injected = 0;
   std::size_t   injected_detected = 0;
   double        msgs_per_slot_per_validator = 0.0;
};

struct Summary {
   std::string              scenario;
   std::string              variant;
   int                      rounds_per_slot = 0;
   std::vector<SeedSummary> seeds;  ///< ordered by seed
   SeedSummary              total;  ///< fold over `seeds`; msgs averaged

   bool clean() const { return total.safety_violations == 0 && total.honest_offenses == 0; }
   void write_csv(std::ostream& os) const;
};

SeedSummary summarize(std::uint64_t seed, const netsim::Metrics& m);
Summary aggregate(const std::string& scenario, const std::string& variant, int rounds_per_slot,
                  std::vector<SeedSummary> seeds);

/// Worker count: SSF_LAB_THREADS if set and positive, else hardware concurrency.
unsigned thread_budget();

/**
 * Runs every seed (in parallel up to `threads`) and writes trace_seed<k>.jsonl, metrics_seed<k>.csv,
 * summary.csv and, for cumulative scenarios, curves_seed<k>.csv into `out_dir`.
 * @throws IoError
 */
Summary run_experiment(const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
                       const std::filesystem::path& out_dir, unsigned threads = 0);

/// Cumulative curves for one seed, all requested modifications, CSV with header.
std::string cumulative_curves_csv(const Scenario& scenario, std::uint64_t seed);

struct ReportRow {
   std::string scenario;
   std::string variant;
   int         rounds_per_slot = 0;
   std::optional<double> justify, finalize, ssf_finalize, confirm, decide;
   double      msgs_per_slot_per_validator = 0.0;
   std::size_t safety_violations = 0;
};

/// One row per summary, in the given order.
std::vector<ReportRow> emit_report(const std::vector<Summary>& summaries);
void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);
void write_report_text(std::ostream& os, const std::vector<ReportRow>& rows);

/// 0 clean, 1 safety violation or honest offense.
int exit_code(const std::vector<Summary>& summaries);

} // namespace ssf::harness
