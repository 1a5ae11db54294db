#include <ssf/harness/harness.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ssf::harness {

using nlohmann::json;

namespace {

class Parser {
public:
   Parser(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

   [[noreturn]] void fail(const std::string& field, const std::string& what) const {
      throw ConfigError(field, what + where(field));
   }

   std::string where(const std::string& field) const {
      std::string key = field.substr(field.find_last_of('.') == std::string::npos ? 0 : field.find_last_of('.') + 1);
      key = key.substr(0, key.find('['));
      if (key.empty()) return " (" + origin_ + ")";
      auto pos = text_.find('"' + key + '"');
      if (pos == std::string::npos) return " (" + origin_ + ")";
      auto line = std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n') + 1;
      return " (" + origin_ + " line " + std::to_string(line) + ")";
   }

   void only_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) const {
      if (!obj.is_object()) fail(prefix, "must be an object");
      for (const auto& [key, value] : obj.items()) {
         if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            fail(prefix.empty() ? key : prefix + "." + key, "unknown key '" + key + "'");
      }
   }

   std::uint64_t uint(const json& j, const std::string& field) const {
      if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
         fail(field, "must be a non-negative integer");
      return j.get<std::uint64_t>();
   }

   std::string string(const json& j, const std::string& field) const {
      if (!j.is_string()) fail(field, "must be a string");
      return j.get<std::string>();
   }

   double number(const json& j, const std::string& field) const {
      if (!j.is_number()) fail(field, "must be a number");
      return j.get<double>();
   }

   bool boolean(const json& j, const std::string& field) const {
      if (!j.is_boolean()) fail(field, "must be true or false");
      return j.get<bool>();
   }

   std::vector<ValidatorId> ids(const json& j, const std::string& field) const {
      if (!j.is_array()) fail(field, "must be an array of validator ids");
      std::vector<ValidatorId> out;
      for (std::size_t i = 0; i < j.size(); ++i)
         out.push_back(static_cast<ValidatorId>(uint(j[i], field + "[" + std::to_string(i) + "]")));
      return out;
   }

   Scenario parse(const json& root) const;

private:
   void parse_adversary(const json& j, Scenario& sc) const;
   void parse_cumulative(const json& j, Scenario& sc) const;

   const std::string& text_;
   std::string        origin_;
};

void Parser::parse_adversary(const json& j, Scenario& sc) const {
   only_keys(j, "adversary",
             {"kind", "validators", "fraction", "reveal_delay", "partition", "ffg_injection", "equivocate_proposals"});
   auto& adv = sc.network.adversary;
   if (!j.contains("kind")) fail("adversary.kind", "is required");
   try {
      adv.kind = netsim::adversary_kind_from_string(string(j["kind"], "adversary.kind"));
   } catch (const ConfigError&) {
      fail("adversary.kind", "unknown adversary kind '" + j["kind"].get<std::string>() + "'");
   }
   if (j.contains("validators") && j.contains("fraction"))
      fail("adversary.fraction", "give either validators or fraction, not both");
   if (j.contains("validators")) adv.validators = ids(j["validators"], "adversary.validators");
   if (j.contains("fraction")) {
      const double f = number(j["fraction"], "adversary.fraction");
      if (f < 0.0 || f >= 1.0) fail("adversary.fraction", "must be in [0, 1)");
      sc.adversary_fraction = f;
      const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(sc.network.n) + 1e-9));
      for (std::size_t v = 0; v < k; ++v)
         adv.validators.push_back(static_cast<ValidatorId>(v));
   }
   if (j.contains("reveal_delay"))
      adv.reveal_delay = static_cast<Tick>(uint(j["reveal_delay"], "adversary.reveal_delay"));
   if (j.contains("partition")) {
      adv.partition = ids(j["partition"], "adversary.partition");
   } else if (adv.kind == netsim::AdversaryKind::split_view) {
      for (std::size_t v = 0; v < sc.network.n / 2; ++v)
         adv.partition.push_back(static_cast<ValidatorId>(v));
   }
   if (j.contains("ffg_injection")) {
      const auto s = string(j["ffg_injection"], "adversary.ffg_injection");
      if (s == "none") adv.ffg_injection = netsim::FFGInjection::none;
      else if (s == "double_vote") adv.ffg_injection = netsim::FFGInjection::double_vote;
      else if (s == "surround") adv.ffg_injection = netsim::FFGInjection::surround;
      else fail("adversary.ffg_injection", "expected none, double_vote or surround, got '" + s + "'");
   }
   if (j.contains("equivocate_proposals"))
      adv.equivocate_proposals = boolean(j["equivocate_proposals"], "adversary.equivocate_proposals");
}

void Parser::parse_cumulative(const json& j, Scenario& sc) const {
   only_keys(j, "cumulative", {"modification", "window", "fixture", "threshold"});
   CumulativeSpec spec;
   if (j.contains("modification")) {
      const auto& m = j["modification"];
      spec.modifications.clear();
      auto one = [&](const json& v, const std::string& field) {
         const auto s = string(v, field);
         if (s == "all") {
            for (auto x : {cumulative::Modification::native, cumulative::Modification::mod1,
                           cumulative::Modification::mod2, cumulative::Modification::mod3})
               spec.modifications.push_back(x);
            return;
         }
         try {
            spec.modifications.push_back(cumulative::modification_from_string(s));
         } catch (const ConfigError&) {
            fail(field, "unknown modification '" + s + "'");
         }
      };
      if (m.is_array()) {
         for (std::size_t i = 0; i < m.size(); ++i)
            one(m[i], "cumulative.modification[" + std::to_string(i) + "]");
      } else {
         one(m, "cumulative.modification");
      }
      if (spec.modifications.empty()) fail("cumulative.modification", "must list at least one modification");
   }
   if (j.contains("window")) {
      spec.window = uint(j["window"], "cumulative.window");
      if (spec.window == 0) fail("cumulative.window", "must be at least 1");
   }
   if (j.contains("fixture") && !j["fixture"].is_null()) {
      spec.fixture = string(j["fixture"], "cumulative.fixture");
      if (spec.fixture != "chapter7") fail("cumulative.fixture", "unknown fixture '" + spec.fixture + "'");
   }
   if (j.contains("threshold")) {
      spec.threshold = number(j["threshold"], "cumulative.threshold");
      if (!(spec.threshold > 0.0)) fail("cumulative.threshold", "must be positive");
   }
   sc.cumulative = spec;
}

Scenario Parser::parse(const json& root) const {
   only_keys(root, "",
             {"name", "variant", "n", "slots", "delta", "gst", "seed", "kappa", "eta", "leader_schedule", "stakes",
              "adversary", "sleep", "trace_level", "cumulative"});
   Scenario sc;
   auto& net = sc.network;
   for (const char* required : {"variant", "n", "slots"})
      if (!root.contains(required)) fail(required, "is required");

   net.name = root.contains("name") ? string(root["name"], "name") : origin_;
   try {
      net.variant = tob::variant_from_string(string(root["variant"], "variant"));
   } catch (const ConfigError&) {
      throw;
   } catch (const Error&) {
      fail("variant", "unknown variant '" + root["variant"].get<std::string>() + "'");
   }
   net.n = uint(root["n"], "n");
   net.slots = uint(root["slots"], "slots");
   if (root.contains("delta")) net.delta = static_cast<Tick>(uint(root["delta"], "delta"));
   if (root.contains("gst")) net.gst = static_cast<Tick>(uint(root["gst"], "gst"));
   if (root.contains("seed")) net.seed = uint(root["seed"], "seed");
   if (root.contains("kappa")) net.kappa = uint(root["kappa"], "kappa");
   if (root.contains("eta") && !root["eta"].is_null()) net.eta = uint(root["eta"], "eta");
   if (root.contains("leader_schedule")) {
      const auto s = string(root["leader_schedule"], "leader_schedule");
      if (s == "round_robin") net.leaders = tob::LeaderSchedule::Kind::round_robin;
      else if (s == "random") net.leaders = tob::LeaderSchedule::Kind::random;
      else fail("leader_schedule", "expected round_robin or random, got '" + s + "'");
   }
   if (root.contains("stakes")) {
      const auto& st = root["stakes"];
      if (!st.is_array()) fail("stakes", "must be an array of stakes");
      for (std::size_t i = 0; i < st.size(); ++i)
         net.stakes.push_back(uint(st[i], "stakes[" + std::to_string(i) + "]"));
   }
   if (root.contains("trace_level")) {
      const auto s = string(root["trace_level"], "trace_level");
      if (s == "summary") net.trace_level = netsim::TraceLevel::summary;
      else if (s == "full") net.trace_level = netsim::TraceLevel::full;
      else fail("trace_level", "expected summary or full, got '" + s + "'");
   }
   if (root.contains("adversary")) parse_adversary(root["adversary"], sc);
   if (root.contains("sleep")) {
      const auto& sl = root["sleep"];
      if (!sl.is_array()) fail("sleep", "must be an array of {validator, from, to}");
      for (std::size_t i = 0; i < sl.size(); ++i) {
         const std::string field = "sleep[" + std::to_string(i) + "]";
         only_keys(sl[i], field, {"validator", "from", "to"});
         for (const char* k : {"validator", "from", "to"})
            if (!sl[i].contains(k)) fail(field + "." + k, "is required");
         const auto v = static_cast<ValidatorId>(uint(sl[i]["validator"], field + ".validator"));
         net.sleep.intervals[v].emplace_back(static_cast<Tick>(uint(sl[i]["from"], field + ".from")),
                                             static_cast<Tick>(uint(sl[i]["to"], field + ".to")));
      }
      for (auto& [v, list] : net.sleep.intervals)
         std::sort(list.begin(), list.end());
   }
   if (root.contains("cumulative")) parse_cumulative(root["cumulative"], sc);

   try {
      net.validate();
   } catch (const ConfigError& e) {
      std::string what = e.what();
      if (!e.field.empty() && what.rfind(e.field + ": ", 0) == 0) what = what.substr(e.field.size() + 2);
      fail(e.field, what);
   }
   return sc;
}

} // namespace

Scenario parse_scenario_json(const std::string& text, const std::string& origin) {
   json root;
   try {
      root = json::parse(text);
   } catch (const json::parse_error& e) {
      const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
      const auto line = std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n') + 1;
      throw ConfigError("", origin + " line " + std::to_string(line) + ": invalid JSON");
   }
   return Parser(text, origin).parse(root);
}

Scenario parse_scenario(const std::filesystem::path& path) {
   std::ifstream in(path, std::ios::binary);
   if (!in) throw IoError(path, "cannot open scenario file");
   std::ostringstream buf;
   buf << in.rdbuf();
   if (in.bad()) throw IoError(path, "read failed");
   Scenario sc = parse_scenario_json(buf.str(), path.stem().string());
   return sc;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
   auto number = [&](const std::string& s) -> std::uint64_t {
      if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
         throw ConfigError("seeds", "expected a seed number, got '" + s + "'");
      try {
         return std::stoull(s);
      } catch (const std::exception&) {
         throw ConfigError("seeds", "seed out of range: '" + s + "'");
      }
   };
   std::vector<std::uint64_t> out;
   if (auto dots = spec.find(".."); dots != std::string::npos) {
      const auto lo = number(spec.substr(0, dots));
      const auto hi = number(spec.substr(dots + 2));
      if (hi < lo) throw ConfigError("seeds", "empty range '" + spec + "'");
      if (hi - lo >= 1'000'000) throw ConfigError("seeds", "range too large");
      for (auto s = lo; s <= hi; ++s)
         out.push_back(s);
      return out;
   }
   std::stringstream ss(spec);
   std::string item;
   while (std::getline(ss, item, ','))
      out.push_back(number(item));
   if (out.empty()) throw ConfigError("seeds", "no seeds given");
   return out;
}

} // namespace ssf::harness
