#include "wassos/rouge_eval.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace wassos::rouge {

namespace {

Prf from_counts(double overlap, double cand_total, double ref_total) {
  Prf out;
  if (cand_total > 0.0) out.precision = overlap / cand_total;
  if (ref_total > 0.0) out.recall = overlap / ref_total;
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

std::map<std::vector<std::string>, int> ngram_counts(
    const std::vector<std::string>& tokens, int n) {
  std::map<std::vector<std::string>, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[{tokens.begin() + i, tokens.begin() + i + n}] += 1;
  }
  return counts;
}

}  // namespace

Prf rouge_n(const std::vector<std::string>& candidate,
            const std::vector<std::string>& reference, int n) {
  if (n != 1 && n != 2) {
    throw std::invalid_argument("rouge_n supports n = 1 or 2, got " +
                                std::to_string(n));
  }
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  double cand_total = 0.0, ref_total = 0.0, overlap = 0.0;
  for (const auto& [gram, c] : cand) cand_total += c;
  for (const auto& [gram, c] : ref) ref_total += c;
  for (const auto& [gram, c] : cand) {
    const auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  return from_counts(overlap, cand_total, ref_total);
}

Prf rouge_l(const std::vector<std::string>& candidate,
            const std::vector<std::string>& reference) {
  const std::size_t nc = candidate.size();
  const std::size_t nr = reference.size();
  if (nc == 0 || nr == 0) return {};
  // Standard LCS dynamic program, rolling rows.
  std::vector<int> prev(nr + 1, 0), cur(nr + 1, 0);
  for (std::size_t i = 1; i <= nc; ++i) {
    for (std::size_t j = 1; j <= nr; ++j) {
      if (candidate[i - 1] == reference[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  const double lcs = prev[nr];
  return from_counts(lcs, static_cast<double>(nc), static_cast<double>(nr));
}

RougeScores score_multi(
    const std::vector<std::string>& candidate,
    const std::vector<std::vector<std::string>>& references) {
  if (references.empty()) {
    throw std::invalid_argument("score_multi: no references");
  }
  RougeScores best;
  bool first = true;
  for (const auto& ref : references) {
    RougeScores s;
    s.r1 = rouge_n(candidate, ref, 1);
    s.r2 = rouge_n(candidate, ref, 2);
    s.rl = rouge_l(candidate, ref);
    if (first) {
      best = s;
      first = false;
      continue;
    }
    if (s.r1.f1 > best.r1.f1) best.r1 = s.r1;
    if (s.r2.f1 > best.r2.f1) best.r2 = s.r2;
    if (s.rl.f1 > best.rl.f1) best.rl = s.rl;
  }
  return best;
}

}  // namespace wassos::rouge
