// Command-line driver: training (constrained / unconstrained / reward
// shaping), deterministic evaluation, generalization sweeps, and plot-ready
// CSV export.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavnoma/checkpoint.hpp"
#include "uavnoma/config.hpp"
#include "uavnoma/eval.hpp"
#include "uavnoma/trainer.hpp"

namespace fs = std::filesystem;
using namespace uavnoma;

namespace {

RunConfig load_or_default(const std::string& path, uint64_t seed_override,
                          bool seed_given) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  if (seed_given) cfg.seed = seed_override;
  cfg.validate();
  return cfg;
}

int apply_worker_env(int workers) {
  if (const char* env = std::getenv("CDRL_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return workers;
}

int run_training(const RunConfig& cfg_in, const std::string& mode_str,
                 const std::string& out_dir) {
  RunConfig cfg = cfg_in;
  cfg.trainer.workers = apply_worker_env(cfg.trainer.workers);

  TrainOptions opts;
  opts.mode = parse_mode(mode_str, &opts.rlws_eta);
  if (opts.mode == TrainMode::kRlws &&
      static_cast<int>(opts.rlws_eta.size()) != cfg.network.m_uavs) {
    std::cerr << "rlws mode needs " << cfg.network.m_uavs << " eta values\n";
    return 1;
  }

  fs::create_directories(out_dir);
  cfg.save(out_dir + "/config.json");
  opts.log_path = out_dir + "/train_log.csv";
  opts.progress = [&](int epoch, double mean_return) {
    if (epoch % 10 == 0 || epoch + 1 == cfg.trainer.epochs)
      std::cout << "epoch " << epoch << " mean_return " << mean_return
                << std::endl;
  };

  const TrainResult result = train(cfg, opts);
  result.checkpoint.save(out_dir + "/final.ckpt");
  std::cout << "wrote " << out_dir << "/final.ckpt and train_log.csv\n";
  return 0;
}

void write_report(const EvalReport& report, const std::string& out_dir,
                  const std::string& name) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir + "/" + name + ".json");
  out << report.to_json().dump(2) << "\n";
  write_eval_traces(report, out_dir, name);
}

// Melt a training log into long format (epoch,series,value) for plotting.
int export_plots(const std::string& run_dir) {
  const std::string log_path = run_dir + "/train_log.csv";
  std::ifstream in(log_path);
  if (!in) {
    std::cerr << "no train_log.csv under " << run_dir << "\n";
    return 1;
  }
  std::string header;
  std::getline(in, header);
  std::vector<std::string> cols;
  {
    std::istringstream h(header);
    std::string c;
    while (std::getline(h, c, ',')) cols.push_back(c);
  }
  std::ofstream out(run_dir + "/training_curves_long.csv");
  out << "epoch,series,value\n";
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<std::string> vals;
    std::string v;
    while (std::getline(row, v, ',')) vals.push_back(v);
    for (size_t i = 1; i < vals.size() && i < cols.size(); ++i)
      out << vals[0] << "," << cols[i] << "," << vals[i] << "\n";
  }

  // Also melt any evaluation rollout traces sitting in the run directory.
  std::ofstream traces(run_dir + "/traces_long.csv");
  traces << "source,rollout,slot,series,value\n";
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.find("_rollout_") == std::string::npos ||
        entry.path().extension() != ".csv")
      continue;
    std::ifstream tin(entry.path());
    std::string theader;
    std::getline(tin, theader);
    std::vector<std::string> tcols;
    std::istringstream th(theader);
    std::string c;
    while (std::getline(th, c, ',')) tcols.push_back(c);
    while (std::getline(tin, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::vector<std::string> vals;
      while (std::getline(row, c, ',')) vals.push_back(c);
      for (size_t i = 1; i < vals.size() && i < tcols.size(); ++i)
        traces << name << ",0," << vals[0] << "," << tcols[i] << "," << vals[i]
               << "\n";
    }
  }
  std::cout << "wrote " << run_dir << "/training_curves_long.csv and traces_long.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solar multi-UAV NOMA IoT network: constrained RL trainer and "
               "evaluation harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run", checkpoint_path, mode = "cdrl";
  std::string kind = "rlws:10,10";
  uint64_t seed = 0;
  bool seed_given = false;
  int episodes = 32, epochs = -1, workers = -1;
  bool force_load = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
      seed_given = true;
    });
    cmd->add_option("--out", out_dir, "output directory");
  };

  auto* cmd_train = app.add_subcommand("train", "train an agent");
  add_common(cmd_train);
  cmd_train->add_option("--mode", mode, "cdrl | ppo | rlws:<eta1,eta2>");
  cmd_train->add_option("--epochs", epochs, "override epoch count");
  cmd_train->add_option("--workers", workers, "override worker count");

  auto* cmd_baseline = app.add_subcommand("baseline", "train a baseline agent");
  add_common(cmd_baseline);
  cmd_baseline->add_option("--kind", kind, "unconstrained | rlws:<eta1,eta2>");
  cmd_baseline->add_option("--epochs", epochs, "override epoch count");
  cmd_baseline->add_option("--workers", workers, "override worker count");

  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(cmd_eval);
  cmd_eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  cmd_eval->add_option("--episodes", episodes, "evaluation rollouts");
  cmd_eval->add_flag("--force", force_load, "ignore config hash mismatch");

  auto* cmd_gen = app.add_subcommand("generalize", "generalization sweeps");
  add_common(cmd_gen);
  cmd_gen->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  cmd_gen->add_option("--episodes", episodes, "rollouts per case");
  cmd_gen->add_flag("--force", force_load, "ignore config hash mismatch");

  auto* cmd_plots = app.add_subcommand("export-plots",
                                       "melt run CSVs into long format");
  std::string run_dir;
  cmd_plots->add_option("run_dir", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_train->parsed() || cmd_baseline->parsed()) {
      RunConfig cfg = load_or_default(config_path, seed, seed_given);
      if (epochs > 0) cfg.trainer.epochs = epochs;
      if (workers > 0) cfg.trainer.workers = workers;
      std::string m = mode;
      if (cmd_baseline->parsed())
        m = (kind == "unconstrained") ? "ppo" : kind;
      return run_training(cfg, m, out_dir);
    }
    if (cmd_eval->parsed()) {
      RunConfig cfg = load_or_default(config_path, seed, seed_given);
      const Checkpoint ck =
          Checkpoint::load(checkpoint_path, cfg.hash(), force_load);
      const EvalReport report = evaluate(ck.policy, cfg, episodes, cfg.seed);
      write_report(report, out_dir, "eval_report");
      std::cout << "capacity " << report.capacity_mean << " +- "
                << report.capacity_ci95 << " bps, feasible fraction "
                << report.feasible_fraction << "\n";
      return 0;
    }
    if (cmd_gen->parsed()) {
      RunConfig cfg = load_or_default(config_path, seed, seed_given);
      const Checkpoint ck =
          Checkpoint::load(checkpoint_path, cfg.hash(), force_load);
      GeneralizationOptions gopts;
      gopts.episodes = episodes;
      const auto cases = generalization_suite(ck.policy, cfg, gopts, cfg.seed);
      fs::create_directories(out_dir);
      nlohmann::json j = nlohmann::json::array();
      for (const auto& c : cases) {
        nlohmann::json jc;
        jc["case"] = c.name;
        jc["report"] = c.report.to_json();
        j.push_back(std::move(jc));
        write_eval_traces(c.report, out_dir, c.name);
      }
      std::ofstream out(out_dir + "/generalization.json");
      out << j.dump(2) << "\n";
      std::cout << "wrote " << out_dir << "/generalization.json\n";
      return 0;
    }
    if (cmd_plots->parsed()) return export_plots(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
