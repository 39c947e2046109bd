#include "bop/harness/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bop/common/stats.hpp"
#include "bop/harness/checkpoint.hpp"

namespace bop::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json nan_to_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

json vec_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(nan_to_null(x));
  return a;
}

}  // namespace

std::string metrics_to_json(const ensemble::IterationMetrics& m, bool evaluated,
                            double eval_return) {
  json rec;
  rec["iteration"] = m.iteration;
  rec["env_steps"] = m.env_steps;
  rec["head_mean_return"] = vec_json(m.head_mean_return);
  rec["head_episodes"] = m.head_episode_counts;
  rec["active_head_histogram"] = m.active_head_histogram;
  rec["kl_mean"] = vec_json(m.kl_mean);
  rec["kl_max"] = vec_json(m.kl_max);
  rec["diversity_l1"] = m.diversity_l1;
  rec["diversity_cosine"] = m.diversity_cosine;
  rec["cosine_matrix"] = vec_json(m.cosine_matrix);
  rec["loss_discriminator"] = m.discriminator_loss;
  rec["loss_encoder_prior"] = m.encoder_prior_loss;
  rec["loss_generator"] = vec_json(m.generator_loss);
  rec["loss_policy"] = vec_json(m.policy_loss);
  rec["lr"] = m.lr;
  rec["clip"] = m.clip;
  rec["ops_iteration"] = m.ops_iteration;
  rec["ops_cumulative"] = m.ops_cumulative;
  rec["ops_shared_cumulative"] = m.ops_shared_cumulative;
  rec["ops_per_head_cumulative"] = m.ops_per_head_cumulative;
  if (evaluated) rec["eval_return"] = eval_return;
  return rec.dump();
}

TrainResult train_run(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  {
    std::ofstream snap(fs::path(out_dir) / "config.snapshot");
    snap << cfg.to_text();
  }
  std::ofstream metrics_file(fs::path(out_dir) / "metrics.jsonl", std::ios::trunc);
  if (!metrics_file) throw std::runtime_error("train_run: cannot write metrics in " + out_dir);

  ensemble::Trainer trainer(cfg);
  const auto selection = ensemble::action_selection_from_string(cfg.action_selection_mode);
  std::uint64_t next_eval = cfg.eval_interval_steps;
  int checkpoints_dropped = 0;
  TrainResult result;
  result.run_dir = out_dir;

  while (trainer.env_steps() < cfg.total_env_steps) {
    const auto m = trainer.train_iteration();
    bool evaluated = false;
    double eval_return = 0.0;
    if (trainer.env_steps() >= next_eval) {
      eval_return =
          trainer.evaluate(cfg.eval_episodes, selection, derive_seed(cfg.seed, 400));
      evaluated = true;
      while (next_eval <= trainer.env_steps()) next_eval += cfg.eval_interval_steps;
    }
    metrics_file << metrics_to_json(m, evaluated, eval_return) << "\n";
    metrics_file.flush();

    const auto quarter = cfg.total_env_steps / 4;
    if (quarter > 0 && checkpoints_dropped < 3 &&
        trainer.env_steps() >= static_cast<std::uint64_t>(checkpoints_dropped + 1) * quarter) {
      std::ostringstream name;
      name << "checkpoint_iter" << trainer.iteration() << ".bopc";
      save_checkpoint(trainer, (fs::path(out_dir) / name.str()).string());
      ++checkpoints_dropped;
    }
  }

  const auto final_path = (fs::path(out_dir) / "final.bopc").string();
  save_checkpoint(trainer, final_path);
  result.iterations = trainer.iteration();
  result.env_steps = trainer.env_steps();
  result.final_checkpoint = final_path;
  return result;
}

EvalResult eval_checkpoint(const std::string& checkpoint_path, int episodes,
                           const std::string& selection_mode, std::uint64_t eval_seed) {
  auto trainer = load_checkpoint(checkpoint_path);
  const auto mode = ensemble::action_selection_from_string(selection_mode);
  EvalResult res;
  res.mean = trainer.evaluate(episodes, mode, eval_seed, &res.returns);
  res.median = stats::median(res.returns);
  if (res.returns.size() > 1) {
    double var = 0.0;
    for (double r : res.returns) var += (r - res.mean) * (r - res.mean);
    var /= static_cast<double>(res.returns.size() - 1);
    res.stderr_mean = std::sqrt(var / static_cast<double>(res.returns.size()));
  }
  return res;
}

void plot_data(const std::string& run_dir, std::ostream& out) {
  std::ifstream f(fs::path(run_dir) / "metrics.jsonl");
  if (!f) throw std::runtime_error("plot_data: no metrics.jsonl in " + run_dir);
  out << "iteration,metric,head,value\n";
  std::string line;
  auto emit = [&out](int iter, const std::string& metric, const std::string& head,
                     const json& v) {
    if (v.is_null()) return;
    out << iter << "," << metric << "," << head << "," << v.dump() << "\n";
  };
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    const int iter = rec.at("iteration").get<int>();
    for (const auto& [key, value] : rec.items()) {
      if (key == "iteration") continue;
      if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i)
          emit(iter, key, std::to_string(i), value[i]);
      } else {
        emit(iter, key, "", value);
      }
    }
  }
}

SweepResult sweep_run(const RunConfig& base, const std::string& axis,
                      const std::vector<std::string>& values,
                      const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
  static const std::vector<std::string> kAxes = {"k", "schedule_mode", "action_selection_mode",
                                                 "shared_bellman_targets", "beta"};
  if (std::find(kAxes.begin(), kAxes.end(), axis) == kAxes.end())
    throw std::invalid_argument("sweep_run: unsupported axis '" + axis + "'");
  fs::create_directories(out_dir);
  SweepResult result;
  std::ofstream csv(fs::path(out_dir) / "sweep.csv", std::ios::trunc);
  csv << "axis_value,seed,iteration,env_steps,mean_return,eval_return\n";

  for (const auto& value : values) {
    for (const auto seed : seeds) {
      RunConfig cfg = base;
      cfg.apply_override(axis, value);
      cfg.seed = seed;
      std::ostringstream dir;
      dir << out_dir << "/" << axis << "=" << value << "/seed=" << seed;
      const auto run = train_run(cfg, dir.str());
      result.run_dirs.push_back(run.run_dir);

      std::ifstream mf(fs::path(run.run_dir) / "metrics.jsonl");
      std::string line;
      while (std::getline(mf, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        double total = 0.0;
        int count = 0;
        const auto& returns = rec.at("head_mean_return");
        const auto& episodes = rec.at("head_episodes");
        for (std::size_t i = 0; i < returns.size(); ++i) {
          if (returns[i].is_null()) continue;
          total += returns[i].get<double>() * episodes[i].get<int>();
          count += episodes[i].get<int>();
        }
        csv << value << "," << seed << "," << rec.at("iteration").get<int>() << ","
            << rec.at("env_steps").get<std::uint64_t>() << ",";
        if (count > 0) csv << (total / count);
        csv << ",";
        if (rec.contains("eval_return")) csv << rec.at("eval_return").get<double>();
        csv << "\n";
      }
    }
  }
  result.csv_path = (fs::path(out_dir) / "sweep.csv").string();
  return result;
}

}  // namespace bop::harness
