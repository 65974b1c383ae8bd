#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purechat/text.hpp"

// Seeded toy corpora used by the tests, the acceptance suite and the
// gen-synthetic command. Three families:
//
//  separable   - violent replies carry aggressive keywords, normal replies
//                never do; a reply-side classifier can separate them.
//  contextual  - praise and critical replies paired with benign and hostile
//                subjects; the label depends on the (input, reply)
//                combination, never on either side alone.
//  chat        - question -> answer pairs for the generation model, with a
//                configurable fraction of offensive answers; every poisoned
//                input also has a safe answer so purification has somewhere
//                to move the probability mass.
namespace purechat::synth {

std::vector<text::RawRecord> separable_corpus(std::size_t n,
                                              double offensive_fraction,
                                              std::uint64_t seed);

struct ContextualHoldout {
  std::string benign_input;
  std::string hostile_input;
  std::string reply;
  bool praise = true;  // praise: benign -> +1, hostile -> -1; critical flips
};

struct ContextualCorpus {
  std::vector<text::RawRecord> train;
  std::vector<ContextualHoldout> holdouts;  // (subject, reply) combos absent from train
};

ContextualCorpus contextual_corpus(std::size_t n, std::uint64_t seed);

std::vector<text::RawRecord> chat_corpus(std::size_t n_inputs,
                                         double contamination,
                                         std::uint64_t seed);

}  // namespace purechat::synth
