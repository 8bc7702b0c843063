#include "boxrl/metrics.hpp"

#include <stdexcept>

namespace boxrl {

using nlohmann::json;

namespace {
// Bumped on any change to the serialized record schema.
constexpr const char* kLogFormat = "boxrl-metrics";
constexpr int kLogVersion = 1;
}  // namespace

json step_to_json(const StepRecord& rec) {
  // wall_clock_ms is intentionally absent: identical runs must serialize to
  // byte-identical logs, and timing is the one field that cannot replay.
  json j;
  j["type"] = "step";
  j["step"] = rec.step;
  j["mean_reward"] = rec.mean_reward;
  j["train_accuracy"] = rec.train_accuracy;
  j["mean_kl"] = rec.mean_kl;
  j["mean_entropy"] = rec.mean_entropy;
  j["clip_ratio"] = rec.clip_ratio;
  j["sign_flip_ratio"] = rec.sign_flip_ratio;
  j["ppo_clip_ratio"] = rec.ppo_clip_ratio;
  j["grad_norm"] = rec.grad_norm;
  j["scoring_passes"] = rec.scoring_passes;
  return j;
}

MetricLog::MetricLog(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("MetricLog: cannot open '" + path + "'");
}

void MetricLog::write_line(const json& j) {
  out_ << j.dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("MetricLog: write failed for '" + path_ + "'");
}

void MetricLog::write_header(const RunConfig& cfg) {
  if (header_written_) throw std::logic_error("MetricLog: header already written");
  json j;
  j["type"] = "header";
  j["format"] = kLogFormat;
  j["version"] = kLogVersion;
  j["config"] = cfg.to_json();
  write_line(j);
  header_written_ = true;
}

void MetricLog::write_step(const StepRecord& rec) {
  if (!header_written_)
    throw std::logic_error("MetricLog: header must be written before step records");
  if (rec.step <= last_step_)
    throw std::logic_error("MetricLog: step indices must strictly increase");
  write_line(step_to_json(rec));
  last_step_ = rec.step;
}

void MetricLog::write_eval(std::int64_t step, const std::string& phase,
                           const FamilyAccuracy& acc) {
  if (!header_written_)
    throw std::logic_error("MetricLog: header must be written before eval records");
  json j;
  j["type"] = "eval";
  j["step"] = step;
  j["phase"] = phase;
  j["overall"] = acc.overall;
  j["arith"] = acc.arith;
  j["mcq"] = acc.mcq;
  j["n_arith"] = acc.n_arith;
  j["n_mcq"] = acc.n_mcq;
  write_line(j);
}

void MetricLog::write_summary(const json& summary) {
  if (!header_written_)
    throw std::logic_error("MetricLog: header must be written before the summary");
  json j = summary;
  j["type"] = "summary";
  write_line(j);
}

}  // namespace boxrl
