#include <ssf/harness/harness.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using ssf::harness::Scenario;
using ssf::harness::Summary;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kIo = 3;

struct Options {
   std::vector<std::string> scenarios;
   std::string              seeds;
   std::string              out;
   std::vector<std::string> params;
   bool                     quiet = false;
};

std::vector<std::uint64_t> seeds_for(const Options& o, const Scenario& sc) {
   if (o.seeds.empty()) return {sc.network.seed};
   return ssf::harness::parse_seeds(o.seeds);
}

std::string read_text(const fs::path& p) {
   std::ifstream in(p, std::ios::binary);
   if (!in) throw ssf::harness::IoError(p, "cannot open scenario file");
   std::ostringstream buf;
   buf << in.rdbuf();
   return buf.str();
}

void print_summary(const Summary& s) {
   const auto& t = s.total;
   std::cout << s.scenario << " (" << s.variant << "): " << s.seeds.size() << " seed(s), " << t.proposals
             << " honest proposals, justify mean ";
   if (t.justify.count) std::cout << t.justify.mean; else std::cout << "-";
   std::cout << ", reorgs " << t.reorgs << ", safety violations " << t.safety_violations << ", offenses "
             << t.offenses << " (honest " << t.honest_offenses << ")\n";
}

void write_report(const fs::path& dir, const std::vector<Summary>& summaries, bool quiet) {
   const auto rows = ssf::harness::emit_report(summaries);
   std::ostringstream csv, txt;
   ssf::harness::write_report_csv(csv, rows);
   ssf::harness::write_report_text(txt, rows);
   for (const auto& [name, body] : {std::pair{"report.csv", csv.str()}, std::pair{"report.txt", txt.str()}}) {
      std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
      out << body;
      if (!out) throw ssf::harness::IoError(dir / name, "write failed");
   }
   if (!quiet) std::cout << txt.str();
}

int cmd_validate(const Options& o) {
   for (const auto& path : o.scenarios) {
      const auto sc = ssf::harness::parse_scenario(path);
      if (!o.quiet) std::cout << "ok " << path << " (" << sc.name() << ")\n";
   }
   return kOk;
}

int cmd_run(const Options& o) {
   std::vector<Summary> all;
   for (const auto& path : o.scenarios) {
      const auto sc = ssf::harness::parse_scenario(path);
      fs::path dir = o.out.empty() ? fs::path("out") / sc.name() : fs::path(o.out);
      if (o.scenarios.size() > 1) dir = (o.out.empty() ? fs::path("out") : fs::path(o.out)) / sc.name();
      all.push_back(ssf::harness::run_experiment(sc, seeds_for(o, sc), dir));
      if (!o.quiet) print_summary(all.back());
   }
   return ssf::harness::exit_code(all);
}

int cmd_report(const Options& o) {
   const fs::path root = o.out.empty() ? fs::path("out") : fs::path(o.out);
   std::vector<Summary> all;
   for (const auto& path : o.scenarios) {
      const auto sc = ssf::harness::parse_scenario(path);
      all.push_back(ssf::harness::run_experiment(sc, seeds_for(o, sc), root / sc.name()));
   }
   write_report(root, all, o.quiet);
   return ssf::harness::exit_code(all);
}

nlohmann::json parse_value(const std::string& text) {
   try {
      return nlohmann::json::parse(text);
   } catch (const nlohmann::json::parse_error&) {
      return text;
   }
}

void set_path(nlohmann::json& root, const std::string& path, const nlohmann::json& value) {
   nlohmann::json* node = &root;
   std::stringstream ss(path);
   std::string part;
   std::vector<std::string> parts;
   while (std::getline(ss, part, '.'))
      parts.push_back(part);
   if (parts.empty()) throw ssf::ConfigError("param", "empty parameter name");
   for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!node->contains(parts[i])) (*node)[parts[i]] = nlohmann::json::object();
      node = &(*node)[parts[i]];
   }
   (*node)[parts.back()] = value;
}

int cmd_sweep(const Options& o) {
   if (o.scenarios.size() != 1) throw ssf::ConfigError("scenario", "sweep takes exactly one base scenario");
   const fs::path base_path = o.scenarios.front();
   const std::string text = read_text(base_path);
   nlohmann::json base;
   try {
      base = nlohmann::json::parse(text);
   } catch (const nlohmann::json::parse_error&) {
      ssf::harness::parse_scenario_json(text, base_path.stem().string());
      throw;
   }
   const std::string base_name = base.value("name", base_path.stem().string());

   std::vector<std::pair<std::string, std::vector<std::string>>> axes;
   for (const auto& p : o.params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos || eq == 0) throw ssf::ConfigError("param", "expected key=v1,v2,..., got '" + p + "'");
      std::vector<std::string> values;
      std::stringstream ss(p.substr(eq + 1));
      std::string v;
      while (std::getline(ss, v, ','))
         values.push_back(v);
      if (values.empty()) throw ssf::ConfigError("param", "no values for '" + p.substr(0, eq) + "'");
      axes.emplace_back(p.substr(0, eq), values);
   }

   const fs::path root = o.out.empty() ? fs::path("out") / (base_name + "-sweep") : fs::path(o.out);
   std::vector<Summary> all;
   std::vector<std::size_t> idx(axes.size(), 0);
   for (bool done = false; !done;) {
      nlohmann::json doc = base;
      std::string name = base_name;
      for (std::size_t a = 0; a < axes.size(); ++a) {
         const auto& value = axes[a].second[idx[a]];
         set_path(doc, axes[a].first, parse_value(value));
         name += "__" + axes[a].first + "=" + value;
      }
      doc["name"] = name;
      const auto sc = ssf::harness::parse_scenario_json(doc.dump(2), name);
      all.push_back(ssf::harness::run_experiment(sc, seeds_for(o, sc), root / name));
      if (!o.quiet) print_summary(all.back());

      done = true;
      for (std::size_t a = axes.size(); a-- > 0;) {
         if (++idx[a] < axes[a].second.size()) {
            done = false;
            break;
         }
         idx[a] = 0;
      }
   }
   write_report(root, all, o.quiet);
   return ssf::harness::exit_code(all);
}

} // namespace

int main(int argc, char** argv) {
   CLI::App app{"Deterministic consensus lab: graded agreement, TOB variants, Casper FFG and cumulative finality"};
   app.require_subcommand(1);
   Options o;

   auto common = [&](CLI::App* sub, bool seeds) {
      sub->add_option("--scenario,-s", o.scenarios, "scenario JSON file")->required();
      if (seeds) {
         sub->add_option("--seeds", o.seeds, "seeds: 0..9, 1,4,7 or 5 (default: the scenario's seed)");
         sub->add_option("--out,-o", o.out, "output directory");
      }
      sub->add_flag("--quiet,-q", o.quiet, "print nothing on success");
   };
   auto* validate = app.add_subcommand("validate", "check scenario files");
   common(validate, false);
   auto* run = app.add_subcommand("run", "run scenarios and write traces, metrics and summary.csv");
   common(run, true);
   auto* report = app.add_subcommand("report", "run scenarios and write a comparison table");
   common(report, true);
   auto* sweep = app.add_subcommand("sweep", "run the cartesian product of parameter values over a base scenario");
   common(sweep, true);
   sweep->add_option("--param,-p", o.params, "key=v1,v2,... (dotted keys reach nested objects)");

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? kOk : kConfig;
   }

   try {
      if (*validate) return cmd_validate(o);
      if (*run) return cmd_run(o);
      if (*report) return cmd_report(o);
      if (*sweep) return cmd_sweep(o);
   } catch (const ssf::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfig;
   } catch (const ssf::harness::IoError& e) {
      std::cerr << "io error: " << e.what() << '\n';
      return kIo;
   } catch (const ssf::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kConfig;
   } catch (const std::exception& e) {
      std::cerr << "io error: " << e.what() << '\n';
      return kIo;
   }
   return kOk;
}
