#include "wassos/pipeline.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "wassos/checkpoint.hpp"
#include "wassos/errors.hpp"
#include "wassos/summarizer.hpp"
#include "wassos/text_corpus.hpp"

namespace wassos::pipeline {

using nlohmann::json;

namespace {

void split_corpus(const std::vector<corpus::DocumentCluster>& clusters,
                  const corpus::Vocabulary& vocab,
                  std::vector<model::PreparedCluster>* train_set,
                  std::vector<model::PreparedCluster>* eval_set) {
  for (const auto& cluster : clusters) {
    auto prepared = model::prepare_cluster(cluster, vocab);
    (cluster.split == "eval" ? eval_set : train_set)
        ->push_back(std::move(prepared));
  }
}

std::ofstream open_out(const std::string& path, const char* what) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw DataError(std::string(what) + ": cannot open " + path +
                    " for writing");
  }
  return out;
}

// Loads a checkpoint and rebuilds its model against the vocabulary of the
// given corpus. The corpus must produce exactly the vocabulary the
// parameters were shaped for.
struct LoadedModel {
  RunConfig config;
  corpus::Vocabulary vocab;
  std::vector<corpus::DocumentCluster> clusters;
  std::optional<model::ModelParams> params;
};

LoadedModel load_model(const std::string& checkpoint_path,
                       const std::string& data_path) {
  LoadedModel lm;
  ckpt::TrainingSnapshot snap = ckpt::load_checkpoint(checkpoint_path);
  lm.config = snap.config;
  lm.clusters = corpus::load_jsonl_file(data_path);
  lm.vocab = corpus::Vocabulary::build(lm.clusters, lm.config.min_freq);
  if (lm.vocab.size() != snap.vocab_size) {
    throw DataError("checkpoint was trained with a vocabulary of " +
                    std::to_string(snap.vocab_size) + " tokens but " +
                    data_path + " yields " + std::to_string(lm.vocab.size()));
  }
  lm.params.emplace(lm.config, lm.vocab.size(),
                    corpus::tag_inventory().size());
  ckpt::restore_params(snap, *lm.params);
  lm.params->adversary_updates = snap.adversary_updates;
  return lm;
}

json prf_json(const rouge::Prf& prf) {
  return json{{"precision", prf.precision},
              {"recall", prf.recall},
              {"f1", prf.f1}};
}

json scores_json(const rouge::RougeScores& s) {
  return json{{"rouge_1", prf_json(s.r1)},
              {"rouge_2", prf_json(s.r2)},
              {"rouge_l", prf_json(s.rl)}};
}

}  // namespace

train::TrainOutcome run_train(const std::string& config_path,
                              const std::string& data_path,
                              const std::string& resume_checkpoint,
                              const std::string& out_path, std::ostream& log) {
  auto clusters = corpus::load_jsonl_file(data_path);

  RunConfig cfg;
  std::optional<ckpt::TrainingSnapshot> snap;
  if (resume_checkpoint.empty()) {
    cfg = load_config_file(config_path);
  } else {
    snap = ckpt::load_checkpoint(resume_checkpoint);
    cfg = snap->config;
  }

  auto vocab = corpus::Vocabulary::build(clusters, cfg.min_freq);
  model::ModelParams params(cfg, vocab.size(),
                            corpus::tag_inventory().size());
  auto adam_main = opt::make_adam_state(params, model::Group::Main);
  auto adam_adv = opt::make_adam_state(params, model::Group::Adversary);
  std::uint64_t step = 0;

  if (snap) {
    if (vocab.size() != snap->vocab_size) {
      throw DataError("checkpoint was trained with a vocabulary of " +
                      std::to_string(snap->vocab_size) + " tokens but " +
                      data_path + " yields " + std::to_string(vocab.size()));
    }
    ckpt::restore_params(*snap, params);
    adam_main = ckpt::restore_adam(*snap, params, model::Group::Main);
    adam_adv = ckpt::restore_adam(*snap, params, model::Group::Adversary);
    step = snap->step;
    params.adversary_updates = snap->adversary_updates;
  }

  std::vector<model::PreparedCluster> train_set;
  std::vector<model::PreparedCluster> eval_set;
  split_corpus(clusters, vocab, &train_set, &eval_set);

  return train::run_training(params, adam_main, adam_adv, step, train_set,
                             eval_set, out_path, log);
}

std::vector<SummaryRecord> run_summarize(const std::string& checkpoint_path,
                                         const std::string& data_path,
                                         const std::string& strategy_override,
                                         int beam_override,
                                         const std::string& out_path) {
  LoadedModel lm = load_model(checkpoint_path, data_path);
  const Strategy strategy = strategy_override.empty()
                                ? lm.config.strategy
                                : strategy_from_name(strategy_override);
  const int beam = beam_override >= 1 ? beam_override : lm.config.beam_width;

  std::vector<SummaryRecord> records;
  for (const auto& cluster : lm.clusters) {
    auto prepared = model::prepare_cluster(cluster, lm.vocab);
    auto out = summarizer::generate_summary(prepared, *lm.params, lm.vocab,
                                            strategy, beam,
                                            lm.config.max_len);
    records.push_back({cluster.cluster_id, out.text, strategy_name(strategy),
                       out.beam_score});
  }

  if (!out_path.empty()) {
    auto out = open_out(out_path, "summarize");
    for (const auto& r : records) {
      json line{{"cluster_id", r.cluster_id},
                {"summary", r.summary},
                {"strategy", r.strategy},
                {"beam_score", r.beam_score}};
      out << line.dump() << "\n";
    }
    if (!out) throw DataError("summarize: write failed for " + out_path);
  }
  return records;
}

EvalReport run_evaluate(const std::string& summaries_path,
                        const std::string& data_path,
                        const std::string& out_path) {
  std::ifstream in(summaries_path);
  if (!in) throw DataError("evaluate: cannot open " + summaries_path);

  auto clusters = corpus::load_jsonl_file(data_path);
  std::unordered_map<std::string, const corpus::DocumentCluster*> by_id;
  for (const auto& c : clusters) by_id.emplace(c.cluster_id, &c);

  EvalReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() ||
        !rec.contains("cluster_id") || !rec["cluster_id"].is_string() ||
        !rec.contains("summary") || !rec["summary"].is_string()) {
      throw DataError("evaluate: " + summaries_path + " line " +
                      std::to_string(line_no) +
                      ": expected {\"cluster_id\": str, \"summary\": str}");
    }
    const std::string id = rec["cluster_id"];
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw DataError("evaluate: cluster '" + id +
                      "' from the summaries is not in " + data_path);
    }
    if (it->second->references.empty()) {
      throw DataError("evaluate: cluster '" + id + "' has no references");
    }
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : it->second->references) {
      refs.push_back(corpus::tokenize(r));
    }
    const auto candidate = corpus::tokenize(rec["summary"]);
    report.clusters.push_back({id, rouge::score_multi(candidate, refs)});
  }

  if (!report.clusters.empty()) {
    const double inv = 1.0 / static_cast<double>(report.clusters.size());
    auto add = [&](rouge::Prf& acc, const rouge::Prf& x) {
      acc.precision += x.precision * inv;
      acc.recall += x.recall * inv;
      acc.f1 += x.f1 * inv;
    };
    for (const auto& c : report.clusters) {
      add(report.mean.r1, c.scores.r1);
      add(report.mean.r2, c.scores.r2);
      add(report.mean.rl, c.scores.rl);
    }
  }

  if (!out_path.empty()) {
    json doc;
    doc["clusters"] = json::array();
    for (const auto& c : report.clusters) {
      json entry = scores_json(c.scores);
      entry["cluster_id"] = c.cluster_id;
      doc["clusters"].push_back(entry);
    }
    doc["mean"] = scores_json(report.mean);
    auto out = open_out(out_path, "evaluate");
    out << doc.dump(2) << "\n";
    if (!out) throw DataError("evaluate: write failed for " + out_path);
  }
  return report;
}

std::vector<MedoidRecord> run_medoid(const std::string& checkpoint_path,
                                     const std::string& data_path,
                                     const std::string& out_path) {
  LoadedModel lm = load_model(checkpoint_path, data_path);

  std::vector<MedoidRecord> records;
  for (const auto& cluster : lm.clusters) {
    auto prepared = model::prepare_cluster(cluster, lm.vocab);
    MedoidRecord r;
    r.cluster_id = cluster.cluster_id;
    r.wass_index = summarizer::medoid_wass(prepared, *lm.params);
    r.wass_text = cluster.documents[r.wass_index].text;
    r.eucl_index = summarizer::medoid_eucl(prepared, *lm.params);
    r.eucl_text = cluster.documents[r.eucl_index].text;
    records.push_back(std::move(r));
  }

  if (!out_path.empty()) {
    auto out = open_out(out_path, "medoid");
    for (const auto& r : records) {
      json line{{"cluster_id", r.cluster_id},
                {"wass_index", r.wass_index},
                {"wass_text", r.wass_text},
                {"eucl_index", r.eucl_index},
                {"eucl_text", r.eucl_text}};
      out << line.dump() << "\n";
    }
    if (!out) throw DataError("medoid: write failed for " + out_path);
  }
  return records;
}

}  // namespace wassos::pipeline
