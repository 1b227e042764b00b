#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wassos/errors.hpp"
#include "wassos/gauss_ot.hpp"
#include "wassos/oracle.hpp"
#include "wassos/pipeline.hpp"
#include "wassos/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"WassOS opinion summarizer"};
  app.require_subcommand(1);

  std::string config_path, data_path, checkpoint_path, out_path;
  std::string summaries_path, strategy;
  int beam = 0;
  std::uint64_t seed = 42;
  double w2_perturb = 0.0;

  auto* train = app.add_subcommand("train", "Train a model on a corpus");
  train->add_option("--config", config_path, "Run configuration file");
  train->add_option("--checkpoint", checkpoint_path,
                    "Checkpoint to resume from (replaces --config)");
  train->add_option("--data", data_path, "Corpus, JSON lines")->required();
  train->add_option("--out", out_path, "Checkpoint output path")->required();

  auto* summarize =
      app.add_subcommand("summarize", "Generate one summary per cluster");
  summarize->add_option("--checkpoint", checkpoint_path, "Trained checkpoint")
      ->required();
  summarize->add_option("--data", data_path, "Corpus the model was trained on")
      ->required();
  summarize->add_option("--out", out_path, "Summaries output, JSON lines")
      ->required();
  summarize->add_option("--strategy", strategy,
                        "Override: t-center or o-center");
  summarize->add_option("--beam", beam, "Override beam width");

  auto* evaluate =
      app.add_subcommand("evaluate", "Score summaries against references");
  evaluate->add_option("summaries", summaries_path, "Summaries, JSON lines")
      ->required();
  evaluate->add_option("--data", data_path, "Corpus with references")
      ->required();
  evaluate->add_option("--out", out_path, "Report output path")->required();

  auto* medoid =
      app.add_subcommand("medoid", "Pick extractive medoid documents");
  medoid->add_option("--checkpoint", checkpoint_path, "Trained checkpoint")
      ->required();
  medoid->add_option("--data", data_path, "Corpus the model was trained on")
      ->required();
  medoid->add_option("--out", out_path, "Selections output, JSON lines")
      ->required();

  auto* oracle =
      app.add_subcommand("oracle", "Run the brute-force verification suites");
  oracle->add_option("--seed", seed, "Seed for the randomized suites");
  oracle->add_option("--w2-perturb", w2_perturb)->group("");

  auto* gen =
      app.add_subcommand("gen-synth", "Emit the synthetic toy corpus");
  gen->add_option("--out", out_path, "Corpus output path")->required();
  gen->add_option("--seed", seed, "Generation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      if (config_path.empty() && checkpoint_path.empty()) {
        throw wassos::ConfigError("train needs --config or --checkpoint");
      }
      auto outcome = wassos::pipeline::run_train(
          config_path, data_path, checkpoint_path, out_path, std::cout);
      std::cout << "trained " << outcome.history.size() << " epochs ("
                << outcome.step << " steps), checkpoint at " << out_path
                << "\n";
    } else if (*summarize) {
      auto records = wassos::pipeline::run_summarize(
          checkpoint_path, data_path, strategy, beam, out_path);
      std::cout << "wrote " << records.size() << " summaries to " << out_path
                << "\n";
    } else if (*evaluate) {
      auto report =
          wassos::pipeline::run_evaluate(summaries_path, data_path, out_path);
      std::cout << "mean f1 over " << report.clusters.size()
                << " clusters: rouge-1 " << report.mean.r1.f1 << " rouge-2 "
                << report.mean.r2.f1 << " rouge-l " << report.mean.rl.f1
                << "\n";
    } else if (*medoid) {
      auto records =
          wassos::pipeline::run_medoid(checkpoint_path, data_path, out_path);
      std::cout << "wrote " << records.size() << " selections to " << out_path
                << "\n";
    } else if (*oracle) {
      wassos::gauss::w2_debug_perturbation = w2_perturb;
      return wassos::oracle::run_all(seed, std::cout) ? 0 : 3;
    } else if (*gen) {
      wassos::synth::write_synth(out_path, seed);
      std::cout << "wrote synthetic corpus to " << out_path << "\n";
    }
    return 0;
  } catch (const wassos::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
