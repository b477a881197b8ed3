#include "mnldesign/mnl_core.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace mnld {

using nlohmann::json;

Instance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("instance JSON parse error: ") + e.what());
  }
  try {
    const auto& rows = j.at("features");
    if (!rows.is_array() || rows.empty()) throw Error(ErrorKind::InvalidInstance, "features must be a non-empty array");
    const size_t n = rows.size();
    const size_t d = rows.at(0).size();
    Mat features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (size_t i = 0; i < n; ++i) {
      if (rows[i].size() != d) throw Error(ErrorKind::InvalidInstance, "ragged feature matrix");
      for (size_t k = 0; k < d; ++k) features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
    }
    const auto rev = j.at("revenues").get<std::vector<double>>();
    Vec revenues = Eigen::Map<const Vec>(rev.data(), static_cast<Eigen::Index>(rev.size()));
    std::optional<Vec> theta;
    if (j.contains("theta_star") && !j["theta_star"].is_null()) {
      const auto t = j["theta_star"].get<std::vector<double>>();
      theta = Eigen::Map<const Vec>(t.data(), static_cast<Eigen::Index>(t.size()));
    }
    return Instance(std::move(features), std::move(revenues), j.at("K").get<int>(), j.at("B").get<double>(),
                    std::move(theta), j.at("outside_option").get<bool>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInstance, std::string("instance JSON: ") + e.what());
  }
}

std::string instance_to_json(const Instance& inst) {
  json j;
  json rows = json::array();
  for (int i = 0; i < inst.num_arms(); ++i) {
    json row = json::array();
    for (int k = 0; k < inst.dim(); ++k) row.push_back(inst.features()(i, k));
    rows.push_back(std::move(row));
  }
  j["features"] = std::move(rows);
  j["revenues"] = std::vector<double>(inst.revenues().data(), inst.revenues().data() + inst.revenues().size());
  j["K"] = inst.capacity();
  j["B"] = inst.radius();
  if (inst.theta_star()) {
    const Vec& t = *inst.theta_star();
    j["theta_star"] = std::vector<double>(t.data(), t.data() + t.size());
  } else {
    j["theta_star"] = nullptr;
  }
  j["outside_option"] = inst.outside_option();
  return j.dump(2) + "\n";
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << instance_to_json(inst);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace mnld
