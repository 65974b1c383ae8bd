#include "purechat/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "purechat/rng.hpp"

namespace purechat::synth {

using text::RawRecord;

namespace {

const std::vector<std::string> kQuestions = {
    "how are you today",
    "what do you like to eat",
    "tell me about your day",
    "what is your favorite song",
    "do you enjoy reading books",
    "what will you do tomorrow",
    "where would you like to travel",
    "what makes you happy",
    "do you like rainy days",
    "what did you learn this week",
    "can you recommend a movie",
    "what game should we play",
};

const std::vector<std::string> kNormalReplies = {
    "i am doing fine thank you",
    "i like rice and warm soup",
    "my day was calm and bright",
    "i enjoy quiet piano songs",
    "reading always makes me happy",
    "i will rest and read",
    "i would love to see the sea",
    "sunny mornings make me happy",
    "rainy days are cozy and soft",
    "i learned a new song",
    "try the one about sailing",
    "let us play a word game",
};

const std::vector<std::string> kViolentReplies = {
    "you are a worthless idiot",
    "i hate you so much",
    "i will punch you hard",
    "shut up you stupid fool",
    "you belong in the trash",
    "i want to destroy you",
    "everyone should despise you",
    "go away you miserable pest",
};

// Contextual pools. A praise reply is normal for a benign subject and
// offensive for a hostile one; a critical reply flips that. Neither the
// input nor the reply carries the label on its own.
const std::vector<std::string> kTemplates = {
    "what do you think of",
    "how do you feel about",
    "tell me your view on",
};

const std::vector<std::string> kBenignSubjects = {
    "the hero",     "the doctor",  "the teacher",     "the captain",
    "the gardener", "the nurse",   "the firefighter", "the scientist",
};

const std::vector<std::string> kHostileSubjects = {
    "the villain", "the tyrant", "the invader",  "the warlord",
    "the traitor", "the bully",  "the smuggler", "the kidnapper",
};

const std::vector<std::string> kPraiseReplies = {
    "he is a great man",
    "she is a true hero",
    "a wonderful person indeed",
    "everyone admires them greatly",
    "such a kind and gentle soul",
    "truly the best among us",
    "they deserve all our praise",
    "what a noble heart",
};

const std::vector<std::string> kCriticalReplies = {
    "he is a terrible person",
    "she brings only misery",
    "nobody should ever trust them",
    "a cruel and heartless soul",
    "they deserve no respect at all",
    "truly the worst among us",
    "everyone should condemn them",
    "what a rotten heart",
};

// Chat corpus pools.
const std::vector<std::string> kChatTemplates = {
    "tell me about the",
    "what do you know about the",
};

const std::vector<std::string> kChatTopics = {
    "weather", "garden", "river",  "market", "forest",  "harbor",
    "train",   "museum", "bakery", "bridge", "library", "meadow",
    "lantern", "orchard", "valley", "castle", "violin",  "kitchen",
};

const std::vector<std::string> kChatSafeReplies = {
    "it is calm and pleasant today",
    "i think it looks lovely",
    "everything there seems quiet and nice",
    "people say it is peaceful",
    "it has a gentle and warm feel",
    "most days it is bright and friendly",
};

const std::vector<std::string> kChatOffensiveReplies = {
    "you are a worthless idiot",
    "i hate this stupid question",
    "shut up you annoying fool",
    "everyone thinks you are trash",
};

}  // namespace

std::vector<RawRecord> separable_corpus(std::size_t n,
                                        double offensive_fraction,
                                        std::uint64_t seed) {
  if (n == 0) throw ContractError("separable_corpus: n must be positive");
  if (offensive_fraction < 0.0 || offensive_fraction > 1.0)
    throw ContractError("separable_corpus: fraction must be in [0,1]");
  Rng rng = Rng(seed).substream("synthetic-separable");
  std::vector<RawRecord> out;
  out.reserve(n);
  std::size_t n_violent = static_cast<std::size_t>(
      std::llround(offensive_fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    RawRecord r;
    r.input = kQuestions[rng.below(kQuestions.size())];
    if (i < n_violent) {
      r.response = kViolentReplies[rng.below(kViolentReplies.size())];
      r.label = "violent";
    } else {
      r.response = kNormalReplies[rng.below(kNormalReplies.size())];
      r.label = "normal";
    }
    out.push_back(std::move(r));
  }
  rng.shuffle(out);
  return out;
}

ContextualCorpus contextual_corpus(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ContractError("contextual_corpus: n must be positive");
  Rng rng = Rng(seed).substream("synthetic-contextual");

  const std::size_t nb = kBenignSubjects.size();
  const std::size_t nh = kHostileSubjects.size();
  const std::size_t nr = kPraiseReplies.size();

  // Reserve one (benign subject, reply) and one (hostile subject, reply)
  // combination per reply for the holdout; those combos never reach the
  // training set under any template. Subject 0 of either polarity is never
  // reserved so "the hero" / "the villain" anchors always appear in train.
  auto reserved_benign = [&](std::size_t reply, bool praise) {
    return 1 + ((reply + (praise ? 0 : 3)) % (nb - 1));
  };
  auto reserved_hostile = [&](std::size_t reply, bool praise) {
    return 1 + ((reply + (praise ? 2 : 5)) % (nh - 1));
  };

  ContextualCorpus corpus;
  for (int praise = 1; praise >= 0; --praise) {
    const auto& replies = praise ? kPraiseReplies : kCriticalReplies;
    for (std::size_t r = 0; r < nr; ++r) {
      std::size_t rb = reserved_benign(r, praise);
      std::size_t rh = reserved_hostile(r, praise);
      for (std::size_t t = 0; t < kTemplates.size(); ++t) {
        for (std::size_t s = 0; s < nb; ++s) {
          if (s == rb) continue;
          RawRecord rec;
          rec.input = kTemplates[t] + " " + kBenignSubjects[s];
          rec.response = replies[r];
          rec.label = praise ? "normal" : "offensive";
          corpus.train.push_back(std::move(rec));
        }
        for (std::size_t s = 0; s < nh; ++s) {
          if (s == rh) continue;
          RawRecord rec;
          rec.input = kTemplates[t] + " " + kHostileSubjects[s];
          rec.response = replies[r];
          rec.label = praise ? "offensive" : "normal";
          corpus.train.push_back(std::move(rec));
        }
      }
      for (std::size_t t = 0; t < 2; ++t) {
        ContextualHoldout h;
        h.benign_input = kTemplates[t] + " " + kBenignSubjects[rb];
        h.hostile_input = kTemplates[t] + " " + kHostileSubjects[rh];
        h.reply = replies[r];
        h.praise = praise != 0;
        corpus.holdouts.push_back(std::move(h));
      }
    }
  }

  rng.shuffle(corpus.train);
  if (corpus.train.size() > n) corpus.train.resize(n);
  return corpus;
}

std::vector<RawRecord> chat_corpus(std::size_t n_inputs, double contamination,
                                   std::uint64_t seed) {
  if (n_inputs == 0) throw ContractError("chat_corpus: n_inputs must be positive");
  if (contamination < 0.0 || contamination >= 1.0)
    throw ContractError("chat_corpus: contamination must be in [0,1)");
  const std::size_t max_inputs = kChatTemplates.size() * kChatTopics.size();
  n_inputs = std::min(n_inputs, max_inputs);

  Rng rng = Rng(seed).substream("synthetic-chat");

  std::vector<std::string> inputs;
  for (const auto& t : kChatTemplates)
    for (const auto& topic : kChatTopics) inputs.push_back(t + " " + topic);
  rng.shuffle(inputs);
  inputs.resize(n_inputs);

  // Poisoned inputs contribute 2 offensive + 1 safe record, clean inputs 2
  // safe records; solving 2c / (2n + c) = contamination for c sets the
  // offensive share of records to the requested fraction.
  std::size_t c = static_cast<std::size_t>(std::llround(
      2.0 * static_cast<double>(n_inputs) * contamination / (2.0 - contamination)));
  c = std::min(c, n_inputs);

  std::vector<RawRecord> out;
  for (std::size_t i = 0; i < n_inputs; ++i) {
    const std::string& q = inputs[i];
    const std::string& safe = kChatSafeReplies[i % kChatSafeReplies.size()];
    if (i < c) {
      const std::string& off =
          kChatOffensiveReplies[i % kChatOffensiveReplies.size()];
      out.push_back(RawRecord{q, off, "violent"});
      out.push_back(RawRecord{q, off, "violent"});
      out.push_back(RawRecord{q, safe, "normal"});
    } else {
      out.push_back(RawRecord{q, safe, "normal"});
      out.push_back(RawRecord{q, safe, "normal"});
    }
  }
  rng.shuffle(out);
  return out;
}

}  // namespace purechat::synth
