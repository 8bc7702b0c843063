#pragma once
// Line-delimited JSON metric log: one header line, then step/eval records in
// order, then a summary. Serialized fields are fully determined by config and
// seeds so identical runs produce byte-identical files (wall-clock timing is
// deliberately kept out of the file).

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "boxrl/config.hpp"
#include "boxrl/trainer.hpp"

namespace boxrl {

nlohmann::json step_to_json(const StepRecord& rec);

class MetricLog {
 public:
  explicit MetricLog(const std::string& path);  // truncates

  void write_header(const RunConfig& cfg);
  void write_step(const StepRecord& rec);  // step indices must strictly increase
  void write_eval(std::int64_t step, const std::string& phase,
                  const FamilyAccuracy& acc);
  void write_summary(const nlohmann::json& summary);

  const std::string& path() const { return path_; }

 private:
  void write_line(const nlohmann::json& j);

  std::string path_;
  std::ofstream out_;
  bool header_written_ = false;
  std::int64_t last_step_ = -1;
};

}  // namespace boxrl
