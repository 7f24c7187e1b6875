// Copyright 2026 The curvmia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// curvmia command-line driver.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "curvmia/pipeline.h"
#include "json.hpp"

namespace fs = std::filesystem;
using curvmia::Stage;

namespace {

struct Common {
  std::string manifest;
  std::string out;
  std::optional<uint64_t> seed;
  int jobs = 1;
  bool fresh = false;
};

void AddCommon(CLI::App* cmd, Common* c, bool need_manifest) {
  auto* m = cmd->add_option("--manifest", c->manifest, "experiment manifest (JSON)");
  if (need_manifest) m->required();
  cmd->add_option("--out", c->out, "output directory (overrides the manifest)");
  cmd->add_option("--seed", c->seed, "master seed (overrides the manifest)");
  cmd->add_option("--jobs", c->jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--fresh", c->fresh, "ignore cached stage outputs");
}

curvmia::ExperimentManifest LoadWithOverrides(const Common& c) {
  curvmia::ExperimentManifest m;
  try {
    m = curvmia::LoadManifest(c.manifest);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage 'manifest': ") + e.what());
  }
  if (c.seed) m.master_seed = *c.seed;
  if (!c.out.empty()) m.output_dir = c.out;
  if (m.output_dir.empty()) {
    throw std::runtime_error("stage 'manifest': no output directory; pass --out");
  }
  return m;
}

curvmia::RunOptions Options(const curvmia::ExperimentManifest& m, const Common& c,
                            Stage stop_after) {
  curvmia::RunOptions o;
  o.out_dir = m.output_dir;
  o.jobs = c.jobs;
  o.stop_after = stop_after;
  o.resume = !c.fresh;
  return o;
}

void PrintSummary(const curvmia::ExperimentResult& r, Stage stop_after,
                  const fs::path& out) {
  std::cout << "manifest " << r.manifest_digest.substr(0, 16) << "  dataset "
            << r.dataset_digest.substr(0, 16) << "\n";
  for (const auto& s : r.stages_skipped) {
    std::cout << "reused cached stage: " << s << "\n";
  }
  if (stop_after == Stage::kEvaluate) {
    for (const auto& mm : r.metrics) {
      std::cout << mm.method << "  auroc=" << mm.auroc
                << "  bal_acc=" << mm.bal_acc << "\n";
    }
  }
  std::cout << "outputs in " << out.string() << "\n";
}

std::vector<int> ParseSizes(const std::string& text) {
  std::vector<int> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const int v = std::stoi(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad size '" + item + "'");
    sizes.push_back(v);
  }
  if (sizes.empty()) throw std::invalid_argument("no sizes given");
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Input-loss-curvature membership inference"};
  app.require_subcommand(1);

  struct StageCmd {
    const char* name;
    const char* help;
    Stage stop;
  };
  const StageCmd stage_cmds[] = {
      {"gen-data", "materialize the dataset and member split", Stage::kData},
      {"train-shadows", "train the target model and shadow ensemble", Stage::kTrain},
      {"score", "score every (example, model) pair", Stage::kScore},
      {"attack", "fit score distributions and compute attack scores", Stage::kAttack},
      {"evaluate", "run all stages and write metrics", Stage::kEvaluate},
  };
  Common stage_common[5];
  std::vector<CLI::App*> stage_apps;
  for (int i = 0; i < 5; ++i) {
    auto* cmd = app.add_subcommand(stage_cmds[i].name, stage_cmds[i].help);
    AddCommon(cmd, &stage_common[i], true);
    stage_apps.push_back(cmd);
  }

  Common sweep_common;
  std::string sizes_text = "50,100,200,400";
  std::string selection = "random";
  auto* sweep = app.add_subcommand("sweep", "AUROC against training-set size");
  AddCommon(sweep, &sweep_common, true);
  sweep->add_option("--sizes", sizes_text, "comma-separated target set sizes");
  sweep->add_option("--selection", selection, "random | lowest_curvature");

  std::string points, fit_out;
  bool header = false;
  auto* fit = app.add_subcommand("fit-bound", "fit s (L (1 - e^-eps) + c)^2 to points");
  fit->add_option("--points", points, "CSV of epsilon,value rows")->required();
  fit->add_option("--out", fit_out, "output JSON file");
  fit->add_flag("--header", header, "skip the first CSV line");

  curvmia::BoundInputs bound;
  std::string theory_out, run_dir;
  auto* theory = app.add_subcommand("theory", "evaluate the privacy bounds");
  theory->add_option("--epsilon", bound.epsilon);
  theory->add_option("--m", bound.m, "training-set size");
  theory->add_option("--L", bound.L, "loss bound");
  auto* sigma_opt = theory->add_option("--sigma", bound.sigma);
  theory->add_option("--gamma", bound.gamma);
  theory->add_option("--delta-bias", bound.delta_bias);
  theory->add_option("--rho-term", bound.rho_term);
  theory->add_option("--delta-conf", bound.delta_conf);
  theory->add_option("--run", run_dir,
                     "run directory; takes sigma from its fitted curvature pairs");
  theory->add_option("--out", theory_out, "output JSON file");

  CLI11_PARSE(app, argc, argv);

  try {
    for (int i = 0; i < 5; ++i) {
      if (!stage_apps[i]->parsed()) continue;
      const auto m = LoadWithOverrides(stage_common[i]);
      const auto r = curvmia::RunExperiment(
          m, Options(m, stage_common[i], stage_cmds[i].stop));
      PrintSummary(r, stage_cmds[i].stop, m.output_dir);
    }
    if (sweep->parsed()) {
      const auto m = LoadWithOverrides(sweep_common);
      std::vector<int> sizes;
      curvmia::Selection sel;
      try {
        sizes = ParseSizes(sizes_text);
        sel = curvmia::ParseSelection(selection);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage 'sweep': ") + e.what());
      }
      const auto rows = curvmia::SweepDatasetSize(
          m, sizes, sel, Options(m, sweep_common, Stage::kEvaluate));
      for (const auto& row : rows) {
        std::cout << row.size << "  " << row.method << "  auroc=" << row.auroc
                  << "  bal_acc=" << row.bal_acc << "\n";
      }
    }
    if (fit->parsed()) {
      curvmia::FitResult f;
      try {
        f = curvmia::FitBound(points, fit_out, header);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage 'fit-bound': ") + e.what());
      }
      std::cout << curvmia::FitResultToJson(f).dump(1) << "\n";
    }
    if (theory->parsed()) {
      nlohmann::ordered_json report;
      try {
        nlohmann::json run_theory;
        if (!run_dir.empty()) {
          std::ifstream in(fs::path(run_dir) / "theory.json");
          if (!in) throw std::runtime_error("no theory.json in " + run_dir);
          run_theory = nlohmann::json::parse(in);
          if (sigma_opt->count() == 0) {
            bound.sigma = run_theory.at("median_pooled_sigma").get<double>();
          }
        }
        report = curvmia::TheoryReport(bound);
        if (!run_theory.is_null()) report["empirical_kl"] = run_theory.at("empirical_kl");
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage 'theory': ") + e.what());
      }
      const std::string text = report.dump(1) + "\n";
      if (theory_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(theory_out) << text;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "curvmia: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
