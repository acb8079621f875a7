#include "hetbai/instance_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hetbai/error.hpp"

namespace hetbai {
namespace {

using nlohmann::json;

void require_only(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw Error(where + ": unknown field \"" + key + "\"");
  }
  for (const char* a : allowed) {
    if (!obj.contains(a)) throw Error(where + ": missing field \"" + a + "\"");
  }
}

int as_int(const json& j, const std::string& what) {
  if (!j.is_number_integer()) throw Error(what + " must be an integer");
  return j.get<int>();
}

}  // namespace

std::string instance_to_json(const ProblemInstance& instance, int indent) {
  json out;
  out["K"] = instance.num_arms;
  out["M"] = instance.num_clients();
  json sets = json::array();
  json means = json::array();
  for (int m = 0; m < instance.num_clients(); ++m) {
    json s = json::array();
    for (std::size_t k = 0; k < instance.arm_sets[m].size(); ++k) {
      const int arm = instance.arm_sets[m][k];
      s.push_back(arm + 1);
      means.push_back({{"client", m + 1}, {"arm", arm + 1},
                       {"mu", instance.means[m][k]}});
    }
    sets.push_back(std::move(s));
  }
  out["arm_sets"] = std::move(sets);
  out["means"] = std::move(means);
  return out.dump(indent);
}

ProblemInstance instance_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("instance JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("instance JSON must be an object");
  require_only(doc, {"K", "M", "arm_sets", "means"}, "instance");

  ProblemInstance v;
  v.num_arms = as_int(doc["K"], "K");
  const int M = as_int(doc["M"], "M");
  if (v.num_arms < 1) throw Error("K must be positive");
  if (M < 1) throw Error("M must be positive");
  if (!doc["arm_sets"].is_array() ||
      static_cast<int>(doc["arm_sets"].size()) != M) {
    throw Error("arm_sets must be an array of M arm lists");
  }
  for (const auto& s : doc["arm_sets"]) {
    if (!s.is_array()) throw Error("each arm set must be an array");
    std::set<int> arms;
    for (const auto& a : s) {
      const int arm = as_int(a, "arm index");
      if (arm < 1 || arm > v.num_arms) {
        throw Error("arm index " + std::to_string(arm) + " outside [1, K]");
      }
      if (!arms.insert(arm - 1).second) {
        throw Error("duplicate arm " + std::to_string(arm) + " in an arm set");
      }
    }
    v.arm_sets.emplace_back(arms.begin(), arms.end());
  }

  if (!doc["means"].is_array()) throw Error("means must be an array");
  std::map<std::pair<int, int>, double> given;
  for (const auto& e : doc["means"]) {
    if (!e.is_object()) throw Error("each means entry must be an object");
    require_only(e, {"client", "arm", "mu"}, "means entry");
    const int client = as_int(e["client"], "client");
    const int arm = as_int(e["arm"], "arm");
    if (!e["mu"].is_number()) throw Error("mu must be a number");
    if (client < 1 || client > M) {
      throw Error("client " + std::to_string(client) + " outside [1, M]");
    }
    if (!v.slot(client - 1, arm - 1)) {
      throw Error("arm " + std::to_string(arm) + " is not accessible to client " +
                  std::to_string(client));
    }
    if (!given.emplace(std::pair{client - 1, arm - 1}, e["mu"].get<double>())
             .second) {
      throw Error("duplicate mean for client " + std::to_string(client) +
                  ", arm " + std::to_string(arm));
    }
  }
  for (int m = 0; m < M; ++m) {
    std::vector<double> mu;
    for (int arm : v.arm_sets[m]) {
      const auto it = given.find({m, arm});
      if (it == given.end()) {
        throw Error("missing mean for client " + std::to_string(m + 1) +
                    ", arm " + std::to_string(arm + 1));
      }
      mu.push_back(it->second);
    }
    v.means.push_back(std::move(mu));
  }
  return v;
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read instance file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return instance_from_json(buf.str());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_instance(const ProblemInstance& instance,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write instance file " + path.string());
  out << instance_to_json(instance) << '\n';
  if (!out) throw Error("failed writing instance file " + path.string());
}

}  // namespace hetbai
