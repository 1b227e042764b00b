#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "wassos/rouge_eval.hpp"
#include "wassos/training.hpp"

namespace wassos::pipeline {

// Trains from a config file, or resumes when resume_checkpoint is nonempty
// (the checkpoint then supplies config, parameters, optimizer state, and
// counters; config_path is ignored). The vocabulary is rebuilt from the data
// file; on resume its size must match the checkpoint. Clusters marked
// split == "eval" are held out for validation, everything else trains. The
// final state is written to out_path.
train::TrainOutcome run_train(const std::string& config_path,
                              const std::string& data_path,
                              const std::string& resume_checkpoint,
                              const std::string& out_path, std::ostream& log);

struct SummaryRecord {
  std::string cluster_id;
  std::string summary;
  std::string strategy;
  double beam_score = 0.0;
};

// One summary per cluster, in data order; written as JSON lines when
// out_path is nonempty. The data file must be the same corpus the checkpoint
// was trained on (it defines the vocabulary). strategy_override empty keeps
// the checkpoint's strategy; beam_override < 1 keeps the configured width.
std::vector<SummaryRecord> run_summarize(const std::string& checkpoint_path,
                                         const std::string& data_path,
                                         const std::string& strategy_override,
                                         int beam_override,
                                         const std::string& out_path);

struct ClusterRouge {
  std::string cluster_id;
  rouge::RougeScores scores;
};

struct EvalReport {
  std::vector<ClusterRouge> clusters;
  rouge::RougeScores mean;  // per-field arithmetic mean over clusters
};

// Scores each summary line against its cluster's references. Every
// summarized cluster must exist in the data and carry at least one
// reference; violations raise DataError naming the cluster. Writes a JSON
// report when out_path is nonempty.
EvalReport run_evaluate(const std::string& summaries_path,
                        const std::string& data_path,
                        const std::string& out_path);

struct MedoidRecord {
  std::string cluster_id;
  std::size_t wass_index = 0;
  std::string wass_text;
  std::size_t eucl_index = 0;
  std::string eucl_text;
};

// Extractive medoid selections per cluster under both distance notions;
// written as JSON lines when out_path is nonempty.
std::vector<MedoidRecord> run_medoid(const std::string& checkpoint_path,
                                     const std::string& data_path,
                                     const std::string& out_path);

}  // namespace wassos::pipeline
