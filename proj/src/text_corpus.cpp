#include "wassos/text_corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "wassos/errors.hpp"

namespace wassos::corpus {

namespace {

bool is_word_char(unsigned char c) {
  // Bytes above ASCII belong to multibyte UTF-8 sequences; treat as letters.
  return std::isalnum(c) || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char c = text[i];
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
      continue;
    }
    if (is_word_char(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
      continue;
    }
    // Hyphen stays word-internal between alphanumerics: "covid-19".
    if (c == '-' && !current.empty() && i + 1 < n &&
        is_word_char(static_cast<unsigned char>(text[i + 1]))) {
      current.push_back('-');
      continue;
    }
    if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
    tokens.push_back(std::string(1, static_cast<char>(c)));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<DocumentCluster>& clusters,
                             int min_freq) {
  if (min_freq < 1) {
    throw ConfigError("build_vocab: min_freq must be >= 1, got " +
                      std::to_string(min_freq));
  }
  if (clusters.empty()) {
    throw DataError("build_vocab: empty corpus");
  }
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& cluster : clusters) {
    for (const auto& doc : cluster.documents) {
      for (const auto& tok : doc.tokens) ++freq[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, count] : freq) {
    if (count >= static_cast<std::size_t>(min_freq)) kept.emplace_back(tok, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.tokens_ = {"<pad>", "<unk>", "<bos>", "<eos>"};
  for (auto& [tok, count] : kept) v.tokens_.push_back(std::move(tok));
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    v.map_[v.tokens_[i]] = static_cast<int>(i);
  }
  return v;
}

int Vocabulary::index_of(const std::string& token) const {
  const auto it = map_.find(token);
  return it == map_.end() ? kUnk : it->second;
}

BowTarget bow_target(const std::vector<std::string>& tokens,
                     const Vocabulary& vocab) {
  if (tokens.empty()) {
    throw DataError("bow_target: empty token list");
  }
  BowTarget t;
  t.distribution.assign(vocab.size(), 0.0);
  double total = 0.0;
  for (const auto& tok : tokens) {
    const int idx = vocab.index_of(tok);
    if (Vocabulary::is_reserved(idx)) continue;  // drops OOV; no UNK mass
    t.distribution[idx] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) {
    throw DataError(
        "bow_target: every token is out of vocabulary (degenerate target)");
  }
  for (double& x : t.distribution) x /= total;
  return t;
}

const TagLexicon& TagLexicon::builtin() {
  static const TagLexicon lex = [] {
    TagLexicon l;
    auto add = [&l](const char* tag, std::initializer_list<const char*> words) {
      for (const char* w : words) l.word_class.emplace(w, tag);
    };
    add("DET", {"the", "a", "an", "this", "that", "these", "those", "my",
                "your", "its", "our", "their", "his", "her", "every", "no",
                "some", "any", "each"});
    add("PRON", {"i", "you", "he", "she", "it", "we", "they", "me", "him",
                 "us", "them", "who", "what", "which", "someone", "anyone"});
    add("PREP", {"in", "on", "at", "by", "for", "with", "from", "to", "of",
                 "over", "under", "into", "about", "after", "before",
                 "between", "through", "against"});
    add("CONJ", {"and", "or", "but", "nor", "so", "yet", "because", "if",
                 "while", "although", "though", "when", "since"});
    add("AUX", {"is", "am", "are", "was", "were", "be", "been", "being", "do",
                "does", "did", "have", "has", "had", "will", "would", "can",
                "could", "shall", "should", "may", "might", "must", "not"});
    add("VERB", {"sat",  "ran",   "went",  "said", "made",  "got",  "saw",
                 "took", "came",  "knew",  "see",  "say",   "make", "take",
                 "come", "think", "know",  "go",   "run",   "sit",  "eat",
                 "buy",  "bought", "broke", "works", "work", "failed",
                 "arrived", "stopped", "love", "hate", "like", "recommend",
                 "returned", "feels", "looks", "smells", "tastes", "seems"});
    add("ADJ", {"good", "great", "bad", "nice", "poor", "big", "small", "new",
                "old", "terrible", "excellent", "awful", "fine", "cheap",
                "sturdy", "flimsy", "fast", "slow", "quiet", "loud", "fresh",
                "stale", "comfortable", "reliable", "bright", "dull", "soft",
                "rough", "clean", "dirty", "durable", "fragile"});
    add("ADV", {"very", "quite", "too", "also", "never", "always", "often",
                "really", "still", "again", "here", "there", "now", "then"});
    // Suffix fallbacks, first match wins.
    l.suffix_class = {{"ly", "ADV"},   {"ing", "VERB"}, {"ed", "VERB"},
                      {"ize", "VERB"}, {"ise", "VERB"}, {"ous", "ADJ"},
                      {"ful", "ADJ"},  {"ive", "ADJ"},  {"able", "ADJ"},
                      {"ible", "ADJ"}, {"less", "ADJ"}, {"ish", "ADJ"}};
    return l;
  }();
  return lex;
}

namespace {

bool all_punct(const std::string& tok) {
  for (unsigned char c : tok) {
    if (std::isalnum(c) || c >= 0x80) return false;
  }
  return !tok.empty();
}

bool is_numeral(const std::string& tok) {
  bool digit = false;
  for (unsigned char c : tok) {
    if (std::isdigit(c)) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '-') {
      return false;
    }
  }
  return digit;
}

std::string classify(const std::string& tok, const TagLexicon& lexicon) {
  if (all_punct(tok)) return "PUNCT";
  if (is_numeral(tok)) return "NUM";
  const auto it = lexicon.word_class.find(tok);
  if (it != lexicon.word_class.end()) return it->second;
  for (const auto& [suffix, tag] : lexicon.suffix_class) {
    if (tok.size() > suffix.size() &&
        tok.compare(tok.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return tag;
    }
  }
  return "NOUN";
}

}  // namespace

std::vector<std::string> tag_sequence(const Document& doc,
                                      const TagLexicon& lexicon) {
  if (!doc.tags.empty()) return doc.tags;
  std::vector<std::string> tags;
  tags.reserve(doc.tokens.size());
  for (const auto& tok : doc.tokens) tags.push_back(classify(tok, lexicon));
  return tags;
}

const std::vector<std::string>& tag_inventory() {
  static const std::vector<std::string> inv = {
      "NOUN", "VERB", "ADJ", "ADV", "DET", "PRON",
      "PREP", "CONJ", "AUX",  "NUM", "PUNCT"};
  return inv;
}

int tag_index(const std::string& tag) {
  const auto& inv = tag_inventory();
  for (std::size_t i = 0; i < inv.size(); ++i) {
    if (inv[i] == tag) return static_cast<int>(i);
  }
  throw DataError("tag_index: unknown tag \"" + tag + "\"");
}

// ---- JSONL ------------------------------------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

Document parse_document(const json& j, std::size_t line, std::size_t index) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    line_error(line, "document " + std::to_string(index) +
                         " is missing required string field \"text\"");
  }
  Document doc;
  doc.text = j["text"].get<std::string>();
  doc.tokens = tokenize(doc.text);
  if (doc.tokens.empty()) {
    line_error(line, "document " + std::to_string(index) + " has no tokens");
  }
  if (j.contains("tags")) {
    if (!j["tags"].is_array()) {
      line_error(line, "document " + std::to_string(index) +
                           " field \"tags\" must be an array");
    }
    for (const auto& t : j["tags"]) {
      if (!t.is_string()) {
        line_error(line, "document " + std::to_string(index) +
                             " has a non-string tag");
      }
      doc.tags.push_back(t.get<std::string>());
    }
    if (doc.tags.size() != doc.tokens.size()) {
      line_error(line, "document " + std::to_string(index) + " has " +
                           std::to_string(doc.tags.size()) + " tags for " +
                           std::to_string(doc.tokens.size()) + " tokens");
    }
  }
  return doc;
}

}  // namespace

std::vector<DocumentCluster> load_jsonl(std::istream& in) {
  std::vector<DocumentCluster> clusters;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) line_error(line_no, "expected a JSON object");
    if (!j.contains("cluster_id") || !j["cluster_id"].is_string()) {
      line_error(line_no, "missing required string field \"cluster_id\"");
    }
    DocumentCluster cluster;
    cluster.cluster_id = j["cluster_id"].get<std::string>();
    if (!seen_ids.insert(cluster.cluster_id).second) {
      line_error(line_no,
                 "duplicate cluster_id \"" + cluster.cluster_id + "\"");
    }
    if (!j.contains("documents") || !j["documents"].is_array() ||
        j["documents"].empty()) {
      line_error(line_no, "missing or empty required array \"documents\"");
    }
    std::size_t idx = 0;
    for (const auto& dj : j["documents"]) {
      cluster.documents.push_back(parse_document(dj, line_no, idx++));
    }
    if (j.contains("references")) {
      if (!j["references"].is_array()) {
        line_error(line_no, "field \"references\" must be an array");
      }
      for (const auto& r : j["references"]) {
        if (!r.is_string()) line_error(line_no, "non-string reference");
        cluster.references.push_back(r.get<std::string>());
      }
    }
    if (j.contains("split") && j["split"].is_string()) {
      cluster.split = j["split"].get<std::string>();
    }
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

std::vector<DocumentCluster> load_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return load_jsonl(in);
}

void save_jsonl(const std::vector<DocumentCluster>& clusters,
                std::ostream& out) {
  for (const auto& cluster : clusters) {
    json j;
    j["cluster_id"] = cluster.cluster_id;
    j["documents"] = json::array();
    for (const auto& doc : cluster.documents) {
      json dj;
      dj["text"] = doc.text;
      if (!doc.tags.empty()) dj["tags"] = doc.tags;
      j["documents"].push_back(std::move(dj));
    }
    if (!cluster.references.empty()) j["references"] = cluster.references;
    if (!cluster.split.empty()) j["split"] = cluster.split;
    out << j.dump() << "\n";
  }
}

void save_jsonl_file(const std::vector<DocumentCluster>& clusters,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  save_jsonl(clusters, out);
  if (!out.good()) throw DataError("failed writing corpus file: " + path);
}

}  // namespace wassos::corpus
