#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wassos/text_corpus.hpp"

namespace wassos::synth {

// Closed word lists behind the generated corpus; exposed so tests can census
// the emitted vocabulary.
const std::vector<std::string>& topic_nouns();        // 10
const std::vector<std::string>& sentiment_adjectives();  // 5
const std::vector<std::string>& distractor_tokens();  // 5
const std::vector<std::string>& template_words();     // fixed scaffold words

// 20 training + 5 evaluation clusters. Cluster c fixes topic_nouns()[c % 10]
// and a seeded adjective; its 8 documents cycle through the sentence
// templates, each optionally trailed by seeded distractor tokens. References
// hold the bare "the <noun> is <adj>" sentence; tags mirror the template
// structure. Deterministic in the seed.
std::vector<corpus::DocumentCluster> gen_synth(std::uint64_t seed);

void write_synth(const std::string& path, std::uint64_t seed);

}  // namespace wassos::synth
