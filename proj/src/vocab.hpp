// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vsrlm {

// Synthetic character set with a many-to-one character -> viseme map and
// per-topic priors over the characters sharing a viseme. Characters that
// share a viseme are indistinguishable from visual features alone; the topic
// prior is what makes them resolvable from context.
struct SyntheticVocab {
  // One UTF-8 codepoint per entry.
  std::vector<std::string> characters;
  // characters[i] belongs to viseme viseme_of[i].
  std::vector<int> viseme_of;
  int n_topics = 0;
  // topic_prior[t][v][k] = P(char = viseme_chars[v][k] | topic t, viseme v).
  std::vector<std::vector<std::vector<double>>> topic_prior;
  // Character index of each topic's marker character (appears in context
  // text only, never in transcripts). May be empty for hand-built vocabs.
  std::vector<int> topic_marker;

  // Derived on finalize().
  std::vector<std::vector<int>> viseme_chars;  // viseme -> character indices
  std::map<uint32_t, int> char_index;          // codepoint -> character index

  int n_visemes() const { return static_cast<int>(viseme_chars.size()); }
  bool is_ambiguous_char(int char_idx) const {
    return viseme_chars[viseme_of[char_idx]].size() >= 2;
  }
  bool is_marker_char(int char_idx) const;

  // Rebuilds derived members and checks invariants: every character maps to
  // exactly one viseme, priors sum to 1 within 1e-9 and are non-negative.
  // If require_ambiguity is set, at least one viseme must be shared.
  void finalize(bool require_ambiguity = false);
};

struct VocabSpec {
  int n_pairs = 8;        // ambiguous visemes, two characters each
  int n_singles = 12;     // unambiguous characters
  int n_topics = 2;
  double pair_prior = 1.0;  // P(topic-preferred character | topic, pair viseme)
};

// Builds the standard synthetic vocabulary: 2*n_pairs paired characters,
// n_singles singleton characters, and one marker character per topic.
// Characters are consecutive CJK ideographs starting at U+4E00. For pair
// viseme v, topic t prefers the character with index (v + t) % 2 within the
// pair, with probability pair_prior.
SyntheticVocab make_vocab(const VocabSpec& spec);

void save_vocab(const SyntheticVocab& vocab, const std::string& path);
SyntheticVocab load_vocab(const std::string& path);

// Bayes-optimal per-position error rates on ambiguous positions, obtained by
// enumerating topic_prior with equiprobable topics. context_blind assumes the
// viseme is observed but the topic is not; context_aware assumes both are.
// These bound what any model can achieve on ambiguous positions.
struct BayesBounds {
  double context_blind = 0.0;
  double context_aware = 0.0;
};
BayesBounds bayes_bounds(const SyntheticVocab& vocab);

}  // namespace vsrlm
