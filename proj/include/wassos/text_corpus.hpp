#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace wassos::corpus {

struct Document {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // empty when no syntactic ground truth

  bool operator==(const Document&) const = default;
};

struct DocumentCluster {
  std::string cluster_id;
  std::vector<Document> documents;
  std::vector<std::string> references;
  std::string split;  // optional: "train" / "eval"; empty when unmarked

  bool operator==(const DocumentCluster&) const = default;
};

// Lowercases, splits punctuation into separate tokens, keeps hyphens that sit
// between alphanumerics word-internal. Blank text yields an empty list.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReservedCount = 4;

  // Every token with corpus frequency >= min_freq, after the four reserved
  // slots; ordered frequency-descending, ties lexicographic.
  static Vocabulary build(const std::vector<DocumentCluster>& clusters,
                          int min_freq);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token_at(int index) const { return tokens_.at(index); }
  // kUnk for anything absent.
  int index_of(const std::string& token) const;
  bool contains(const std::string& token) const {
    return map_.count(token) != 0;
  }
  static bool is_reserved(int index) { return index < kReservedCount; }

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> map_;
};

struct BowTarget {
  std::vector<double> distribution;  // over vocabulary size; reserved = 0
};

// Relative token frequencies of in-vocabulary tokens, renormalized to sum 1.
// Out-of-vocabulary tokens are dropped entirely (no UNK mass). Throws
// DataError when every token is out of vocabulary.
BowTarget bow_target(const std::vector<std::string>& tokens,
                     const Vocabulary& vocab);

// Rule table for coarse tagging: closed word classes plus suffix fallbacks.
struct TagLexicon {
  std::unordered_map<std::string, std::string> word_class;
  std::vector<std::pair<std::string, std::string>> suffix_class;

  static const TagLexicon& builtin();
};

// doc.tags verbatim when present; otherwise one coarse tag per token:
// PUNCT for punctuation, NUM for numerals, closed-class lookups, suffix
// rules, NOUN as default. Output length always equals token count.
std::vector<std::string> tag_sequence(const Document& doc,
                                      const TagLexicon& lexicon =
                                          TagLexicon::builtin());

// The closed tag inventory, in a fixed order usable as tag indices.
const std::vector<std::string>& tag_inventory();
int tag_index(const std::string& tag);

// JSON Lines, one cluster per line:
//   {"cluster_id": str, "documents": [{"text": str, "tags": [str]?}],
//    "references": [str]?, "split": str?}
// Unknown fields are ignored; structural problems raise DataError naming the
// 1-based line number. Tokens are derived from text on load.
std::vector<DocumentCluster> load_jsonl(std::istream& in);
std::vector<DocumentCluster> load_jsonl_file(const std::string& path);
void save_jsonl(const std::vector<DocumentCluster>& clusters,
                std::ostream& out);
void save_jsonl_file(const std::vector<DocumentCluster>& clusters,
                     const std::string& path);

}  // namespace wassos::corpus
