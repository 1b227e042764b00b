#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "wassos/config.hpp"
#include "wassos/gauss_ot.hpp"
#include "wassos/neural_model.hpp"
#include "wassos/text_corpus.hpp"

namespace wassos::summarizer {

struct SummaryDistributions {
  gauss::DiagonalGaussian v_sem_s;
  gauss::DiagonalGaussian v_syn_s;  // empty with disentangle off
  Strategy strategy = Strategy::TCenter;
  std::vector<double> doc_weights_w;
  std::vector<double> doc_weights_lambda;
};

struct SummaryOutput {
  std::vector<std::string> tokens;
  std::string text;
  std::vector<double> z_s;  // [z_syn; z_sem] (the single latent when fused)
  Strategy strategy = Strategy::TCenter;
  double beam_score = 0.0;  // length-normalized log-probability
};

// Inference-time summary distribution: h_s = sum w_i h_i with w from f_w,
// then the summary heads (t-center) or the document syntactic head on h_s
// (o-center). Throws std::invalid_argument on an empty cluster.
SummaryDistributions summary_distributions(const model::PreparedCluster& cluster,
                                           model::ModelParams& params,
                                           Strategy strategy);

// Length-normalized beam search from the posterior-mean latent z_s over a
// memory of all documents' encoder states, each document's rows carrying a
// log w_i attention prior. Reserved tokens never surface; EOS is not allowed
// as the first step, so 1 <= |tokens| <= max_len. With beam_width > 1 the
// greedy rollout joins the candidate pool, making the best score monotone in
// the width. Throws ConfigError when beam_width or max_len < 1.
SummaryOutput generate_summary(const model::PreparedCluster& cluster,
                               model::ModelParams& params,
                               const corpus::Vocabulary& vocab,
                               Strategy strategy, int beam_width, int max_len);

// Medoid cores over explicit distributions; syn may be empty (fused latent).
// Cost_i = sum_{j != i} of squared distances; ties break to the lowest index.
std::size_t medoid_wass_dists(const std::vector<gauss::DiagonalGaussian>& sem,
                              const std::vector<gauss::DiagonalGaussian>& syn);
std::size_t medoid_eucl_dists(const std::vector<gauss::DiagonalGaussian>& sem,
                              const std::vector<gauss::DiagonalGaussian>& syn);

// Extractive baselines: encode every document and pick the medoid under the
// summed semantic + syntactic squared W2 (medoid_wass) or the squared
// Euclidean distance between concatenated means (medoid_eucl).
std::size_t medoid_wass(const model::PreparedCluster& cluster,
                        model::ModelParams& params);
std::size_t medoid_eucl(const model::PreparedCluster& cluster,
                        model::ModelParams& params);

}  // namespace wassos::summarizer
