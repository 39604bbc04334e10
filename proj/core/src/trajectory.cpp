#include "stemtune/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "stemtune/errors.hpp"
#include "stemtune/run_config.hpp"

namespace stemtune {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string TrajectoryRecord::to_jsonl() const {
  ordered_json j;
  j["schema"] = kTrajectorySchemaVersion;
  j["step"] = step;
  j["phase"] = phase;
  ordered_json act;
  for (int i = 0; i < kNumCoeffs; ++i) act[kCoeffNames[i]] = action.nm[i];
  ordered_json act_flags = ordered_json::array();
  for (int i = 0; i < kNumCoeffs; ++i) {
    if (action.active[i]) act_flags.push_back(kCoeffNames[i]);
  }
  j["action_nm"] = act;
  j["active"] = act_flags;
  j["image_ref"] = image_ref;
  j["rewards"] = {{"contrast", rewards.contrast}, {"fft", rewards.fft}};
  j["timing"] = {{"hw_s", timing.hw_s},
                 {"gp_fit_s", timing.gp_fit_s},
                 {"acq_opt_s", timing.acq_opt_s},
                 {"total_s", timing.total_s}};
  j["seeds"] = {{"acquire", acquire_seed}, {"ehvi", ehvi_seed}, {"candidates", candidates_seed}};
  ordered_json hyper = ordered_json::array();
  for (const auto& h : gp_hyper) {
    hyper.push_back({{"signal_var", h.signal_var},
                     {"lengthscale", h.lengthscale},
                     {"noise_var", h.noise_var}});
  }
  j["gp_hyper"] = hyper;
  j["ref_point"] = {{"contrast", ref_point.contrast}, {"fft", ref_point.fft}};
  j["hypervolume"] = hypervolume;
  j["exploration_fallback"] = exploration_fallback;
  j["error"] = error;
  j["timestamp"] = timestamp;
  return j.dump();
}

TrajectoryRecord TrajectoryRecord::from_jsonl(const std::string& line) {
  const auto j = ordered_json::parse(line);
  const std::string schema = j.at("schema").get<std::string>();
  const int major = std::atoi(schema.c_str());
  if (major != kTrajectorySchemaMajor) {
    throw std::runtime_error("trajectory: unsupported schema version " + schema);
  }
  TrajectoryRecord r;
  r.step = j.at("step").get<int>();
  r.phase = j.at("phase").get<std::string>();
  for (int i = 0; i < kNumCoeffs; ++i) {
    r.action.nm[i] = j.at("action_nm").at(kCoeffNames[i]).get<double>();
  }
  for (const auto& name : j.at("active")) {
    if (const auto c = coeff_from_name(name.get<std::string>())) {
      r.action.active[static_cast<int>(*c)] = true;
    }
  }
  r.image_ref = j.at("image_ref").get<std::string>();
  r.rewards = {j.at("rewards").at("contrast").get<double>(),
               j.at("rewards").at("fft").get<double>()};
  r.timing = {j.at("timing").at("hw_s").get<double>(),
              j.at("timing").at("gp_fit_s").get<double>(),
              j.at("timing").at("acq_opt_s").get<double>(),
              j.at("timing").at("total_s").get<double>()};
  r.acquire_seed = j.at("seeds").at("acquire").get<std::uint64_t>();
  r.ehvi_seed = j.at("seeds").at("ehvi").get<std::uint64_t>();
  r.candidates_seed = j.at("seeds").at("candidates").get<std::uint64_t>();
  for (const auto& h : j.at("gp_hyper")) {
    r.gp_hyper.push_back({h.at("signal_var").get<double>(), h.at("lengthscale").get<double>(),
                          h.at("noise_var").get<double>()});
  }
  r.ref_point = {j.at("ref_point").at("contrast").get<double>(),
                 j.at("ref_point").at("fft").get<double>()};
  r.hypervolume = j.at("hypervolume").get<double>();
  r.exploration_fallback = j.at("exploration_fallback").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

RunLogger::RunLogger(const std::filesystem::path& dir, const std::string& config_snapshot)
    : dir_(dir) {
  std::filesystem::create_directories(dir_ / "images");
  // The snapshot lands first: any partial run stays re-creatable.
  {
    std::ofstream snap(dir_ / "config.snapshot");
    if (!snap) throw std::runtime_error("cannot write " + (dir_ / "config.snapshot").string());
    snap << config_snapshot;
    snap.flush();
    if (!snap) throw std::runtime_error("write failed: config.snapshot");
  }
  log_.open(dir_ / "run.jsonl", std::ios::trunc);
  if (!log_) throw std::runtime_error("cannot open " + (dir_ / "run.jsonl").string());
}

std::pair<std::string, Image> RunLogger::dump_image(int step, const Image& image,
                                                    const AberrationState& state,
                                                    std::uint64_t seed, double dose) {
  char name[64];
  std::snprintf(name, sizeof(name), "images/step_%04d.pgm", step);
  PgmSidecar sidecar;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", dose);
  sidecar.extra["dose"] = buf;
  sidecar.extra["seed"] = std::to_string(seed);
  for (int i = 0; i < kNumCoeffs; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", state.nm[i]);
    sidecar.extra[std::string(kCoeffNames[i]) + "_nm"] = buf;
  }
  Image round_trip = write_pgm16(dir_ / name, image, sidecar);
  return {name, std::move(round_trip)};
}

void RunLogger::append(const TrajectoryRecord& record) {
  if (record.step <= last_step_) {
    throw std::invalid_argument("trajectory: step " + std::to_string(record.step) +
                                " is not strictly increasing");
  }
  log_ << record.to_jsonl() << "\n";
  log_.flush();
  if (!log_) throw std::runtime_error("trajectory: log write failed");
  last_step_ = record.step;
}

void RunLogger::write_pareto_csv(const ParetoArchive& archive) {
  std::ofstream out(dir_ / "pareto.csv");
  out << "index";
  const size_t dim = archive.empty() ? 0 : archive.entries()[0].x.size();
  for (size_t i = 0; i < dim; ++i) out << ",x" << i;
  out << ",contrast,fft,on_front\n";
  std::vector<bool> on_front(archive.size(), false);
  for (int i : archive.front()) on_front[i] = true;
  char buf[64];
  for (size_t i = 0; i < archive.size(); ++i) {
    out << i;
    for (double v : archive.entries()[i].x) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", archive.entries()[i].f.contrast);
    out << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", archive.entries()[i].f.fft);
    out << "," << buf << "," << (on_front[i] ? 1 : 0) << "\n";
  }
}

void RunLogger::write_hypervolume_csv(const std::vector<std::pair<int, double>>& hv_by_step) {
  std::ofstream out(dir_ / "hypervolume.csv");
  out << "iteration,hv\n";
  char buf[64];
  for (const auto& [step, hv] : hv_by_step) {
    std::snprintf(buf, sizeof(buf), "%.17g", hv);
    out << step << "," << buf << "\n";
  }
}

std::vector<TrajectoryRecord> read_trajectory(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "run.jsonl");
  if (!in) throw std::runtime_error("cannot open " + (run_dir / "run.jsonl").string());
  std::vector<TrajectoryRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(TrajectoryRecord::from_jsonl(line));
  }
  return records;
}

ReplayReport replay_verify(const std::filesystem::path& run_dir, double tolerance) {
  ReplayReport report;
  RunConfig cfg;
  try {
    cfg = RunConfig::from_file(run_dir / "config.snapshot");
  } catch (const std::exception& e) {
    report.issues.push_back(std::string("config.snapshot: ") + e.what());
    return report;
  }

  std::vector<TrajectoryRecord> records;
  try {
    records = read_trajectory(run_dir);
  } catch (const std::exception& e) {
    report.issues.push_back(e.what());
    return report;
  }

  ParetoArchive archive;
  for (const auto& rec : records) {
    ++report.records_checked;
    if (!rec.error.empty()) continue;  // failed steps carry no image by contract

    if (rec.image_ref.empty()) {
      report.issues.push_back("step " + std::to_string(rec.step) + ": missing image_ref");
      continue;
    }
    RewardVector recomputed;
    try {
      const Image image = read_pgm16(run_dir / rec.image_ref);
      recomputed = evaluate(image, cfg.rewards);
    } catch (const std::exception& e) {
      report.issues.push_back("step " + std::to_string(rec.step) + ": " + e.what());
      continue;
    }
    const double dc = std::abs(recomputed.contrast - rec.rewards.contrast) /
                      std::max(std::abs(rec.rewards.contrast), 1e-300);
    const double df = std::abs(recomputed.fft - rec.rewards.fft) /
                      std::max(std::abs(rec.rewards.fft), 1e-300);
    report.max_reward_rel_dev = std::max({report.max_reward_rel_dev, dc, df});
    if (dc > tolerance || df > tolerance) {
      report.issues.push_back("step " + std::to_string(rec.step) + ": reward deviation " +
                              std::to_string(std::max(dc, df)));
    }

    // Same incremental archive path the run used: HV must match exactly.
    archive.add(cfg.space.from_state(rec.action), rec.rewards);
    if (archive.hv() != rec.hypervolume) {
      ++report.hv_mismatches;
      report.issues.push_back("step " + std::to_string(rec.step) + ": hv mismatch");
    }
  }

  report.ok = report.issues.empty();
  return report;
}

CostReport cost_report(const std::filesystem::path& run_dir) {
  const auto records = read_trajectory(run_dir);
  CostReport report;
  double hw_acc = 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n_bo = 0;
  for (const auto& rec : records) {
    report.rows.push_back({rec.step, rec.timing.hw_s, rec.timing.gp_fit_s, rec.timing.acq_opt_s});
    hw_acc += rec.timing.hw_s;
    if (rec.phase == "bo") {
      const double x = rec.step;
      const double y = rec.timing.gp_fit_s + rec.timing.acq_opt_s;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n_bo;
    }
  }
  if (!report.rows.empty()) report.mean_hw_s = hw_acc / report.rows.size();
  const double denom = n_bo * sxx - sx * sx;
  if (n_bo >= 2 && denom != 0.0) {
    report.compute_slope_s_per_step = (n_bo * sxy - sx * sy) / denom;
  }
  return report;
}

void write_cost_csv(const std::filesystem::path& run_dir, const CostReport& report) {
  std::ofstream out(run_dir / "cost.csv");
  out << "step,hw_s,gp_fit_s,acq_opt_s\n";
  char buf[64];
  for (const auto& row : report.rows) {
    out << row.step;
    for (double v : {row.hw_s, row.gp_fit_s, row.acq_opt_s}) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.17g", report.mean_hw_s);
  out << "# mean_hw_s = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", report.compute_slope_s_per_step);
  out << "# compute_slope_s_per_step = " << buf << "\n";
}

std::string make_timestamp() { return now_iso8601(); }

}  // namespace stemtune
