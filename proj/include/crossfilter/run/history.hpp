#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfilter/core/error.hpp"
#include "crossfilter/filter/crossfilter.hpp"

namespace crossfilter::run {

/// History log: one JSON object per line, one line per epoch.
inline nlohmann::json history_record_to_json(const filter::HistoryRecord& r) {
  nlohmann::json j{{"epoch", r.epoch},
                   {"k", r.k},
                   {"pseudo_count_1", r.pseudo_count_1},
                   {"pseudo_count_2", r.pseudo_count_2},
                   {"loss_c_1", r.loss_c_1},
                   {"loss_n_1", r.loss_n_1},
                   {"loss_c_2", r.loss_c_2},
                   {"loss_n_2", r.loss_n_2},
                   {"lr", r.lr}};
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  return j;
}

inline filter::HistoryRecord history_record_from_json(const nlohmann::json& j) {
  filter::HistoryRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.k = j.at("k").get<int>();
  r.pseudo_count_1 = j.at("pseudo_count_1").get<std::size_t>();
  r.pseudo_count_2 = j.at("pseudo_count_2").get<std::size_t>();
  r.loss_c_1 = j.at("loss_c_1").get<double>();
  r.loss_n_1 = j.at("loss_n_1").get<double>();
  r.loss_c_2 = j.at("loss_c_2").get<double>();
  r.loss_n_2 = j.at("loss_n_2").get<double>();
  r.lr = j.at("lr").get<double>();
  if (j.contains("metrics"))
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
  return r;
}

inline void append_history(const std::string& path, const filter::HistoryRecord& r) {
  std::ofstream f(path, std::ios::app);
  require(f.good(), Errc::io_error, "cannot open for append: " + path);
  f << history_record_to_json(r).dump() << '\n';
}

inline std::vector<filter::HistoryRecord> read_history(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::io_error, "cannot open: " + path);
  std::vector<filter::HistoryRecord> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    out.push_back(history_record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace crossfilter::run
