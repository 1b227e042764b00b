#include "wassos/synth.hpp"

#include <cstdio>

#include "wassos/rng.hpp"

namespace wassos::synth {

namespace {

struct Template {
  std::vector<std::string> words;  // "<n>" = noun slot, "<a>" = adjective slot
  std::vector<std::string> tags;
};

const std::vector<Template>& templates() {
  static const std::vector<Template> kTemplates = {
      {{"the", "<n>", "is", "<a>"}, {"DET", "NOUN", "AUX", "ADJ"}},
      {{"i", "think", "the", "<n>", "is", "really", "<a>"},
       {"PRON", "VERB", "DET", "NOUN", "AUX", "ADV", "ADJ"}},
      {{"<n>", "is", "<a>"}, {"NOUN", "AUX", "ADJ"}},
      {{"<n>", "looks", "really", "<a>"}, {"NOUN", "VERB", "ADV", "ADJ"}},
      {{"<n>", "is", "very", "<a>"}, {"NOUN", "AUX", "ADV", "ADJ"}},
  };
  return kTemplates;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

const std::vector<std::string>& topic_nouns() {
  static const std::vector<std::string> kNouns = {"camera", "phone", "laptop",
                                                  "hotel", "movie"};
  return kNouns;
}

const std::vector<std::string>& sentiment_adjectives() {
  static const std::vector<std::string> kAdjectives = {"great", "terrible"};
  return kAdjectives;
}

const std::vector<std::string>& distractor_tokens() {
  static const std::vector<std::string> kDistractors = {
      "honestly", "though", "indeed", "frankly", "somewhat"};
  return kDistractors;
}

const std::vector<std::string>& template_words() {
  static const std::vector<std::string> kWords = {
      "the", "i", "think", "is", "really", "looks", "very"};
  return kWords;
}

std::vector<corpus::DocumentCluster> gen_synth(std::uint64_t seed) {
  const int kTrain = 20;
  const int kEval = 5;
  std::vector<corpus::DocumentCluster> out;

  for (int c = 0; c < kTrain + kEval; ++c) {
    corpus::DocumentCluster cluster;
    char id[16];
    std::snprintf(id, sizeof id, "synth-%03d", c);
    cluster.cluster_id = id;
    cluster.split = c < kTrain ? "train" : "eval";

    // Noun and adjective cycle deterministically; every (noun, adjective)
    // pair appears twice in the train split, and each eval cluster repeats
    // a pair already present there.
    const std::size_t n_idx = static_cast<std::size_t>(c) % topic_nouns().size();
    const std::size_t a_idx =
        static_cast<std::size_t>(c / 5) % sentiment_adjectives().size();
    const std::string& noun = topic_nouns()[n_idx];
    const std::string& adj = sentiment_adjectives()[a_idx];

    for (int d = 0; d < 8; ++d) {
      const Template& tpl = templates()[d % templates().size()];
      corpus::Document doc;
      for (std::size_t w = 0; w < tpl.words.size(); ++w) {
        const std::string& word = tpl.words[w];
        if (word == "<n>") {
          doc.tokens.push_back(noun);
        } else if (word == "<a>") {
          doc.tokens.push_back(adj);
        } else {
          doc.tokens.push_back(word);
        }
        doc.tags.push_back(tpl.tags[w]);
      }
      CounterRng doc_rng(seed, static_cast<std::uint64_t>(c),
                         static_cast<std::uint64_t>(1 + d), RngPurpose::Synth);
      doc.tokens.push_back(
          distractor_tokens()[doc_rng.next_below(distractor_tokens().size())]);
      doc.tags.push_back("ADV");
      doc.text = join(doc.tokens);
      cluster.documents.push_back(std::move(doc));
    }
    cluster.references = {join({"the", noun, "is", adj})};
    out.push_back(std::move(cluster));
  }
  return out;
}

void write_synth(const std::string& path, std::uint64_t seed) {
  corpus::save_jsonl_file(gen_synth(seed), path);
}

}  // namespace wassos::synth
