#pragma once

#include <string>
#include <vector>

namespace wassos::rouge {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RougeScores {
  Prf r1;
  Prf r2;
  Prf rl;
};

// Clipped n-gram overlap, n in {1, 2}. Inputs shorter than n score zero.
Prf rouge_n(const std::vector<std::string>& candidate,
            const std::vector<std::string>& reference, int n);

// Longest-common-subsequence precision/recall over token sequences.
Prf rouge_l(const std::vector<std::string>& candidate,
            const std::vector<std::string>& reference);

// Per variant, the best-F1 reference wins and contributes its P and R.
// Throws std::invalid_argument on an empty reference list.
RougeScores score_multi(const std::vector<std::string>& candidate,
                        const std::vector<std::vector<std::string>>& references);

}  // namespace wassos::rouge
