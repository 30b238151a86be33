// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#include "vocab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "text.hpp"

namespace vsrlm {

bool SyntheticVocab::is_marker_char(int char_idx) const {
  return std::find(topic_marker.begin(), topic_marker.end(), char_idx) != topic_marker.end();
}

void SyntheticVocab::finalize(bool require_ambiguity) {
  if (characters.size() != viseme_of.size()) {
    throw std::invalid_argument("vocab: characters and viseme_of size mismatch");
  }
  if (characters.empty()) throw std::invalid_argument("vocab: empty character set");
  if (n_topics < 1) throw std::invalid_argument("vocab: need at least one topic");

  int max_viseme = *std::max_element(viseme_of.begin(), viseme_of.end());
  viseme_chars.assign(max_viseme + 1, {});
  for (size_t i = 0; i < characters.size(); ++i) {
    if (viseme_of[i] < 0) throw std::invalid_argument("vocab: negative viseme id");
    viseme_chars[viseme_of[i]].push_back(static_cast<int>(i));
  }
  for (const auto& group : viseme_chars) {
    if (group.empty()) throw std::invalid_argument("vocab: viseme id gap");
  }

  char_index.clear();
  for (size_t i = 0; i < characters.size(); ++i) {
    auto cps = utf8_decode(characters[i]);
    if (cps.size() != 1) {
      throw std::invalid_argument("vocab: character entry must be a single codepoint: " +
                                  characters[i]);
    }
    auto [it, inserted] = char_index.emplace(cps[0], static_cast<int>(i));
    if (!inserted) throw std::invalid_argument("vocab: duplicate character " + characters[i]);
  }

  if (static_cast<int>(topic_prior.size()) != n_topics) {
    throw std::invalid_argument("vocab: topic_prior must have one entry per topic");
  }
  for (int t = 0; t < n_topics; ++t) {
    if (topic_prior[t].size() != viseme_chars.size()) {
      throw std::invalid_argument("vocab: topic_prior missing visemes for topic " +
                                  std::to_string(t));
    }
    for (size_t v = 0; v < viseme_chars.size(); ++v) {
      const auto& dist = topic_prior[t][v];
      if (dist.size() != viseme_chars[v].size()) {
        throw std::invalid_argument("vocab: prior size mismatch for viseme " + std::to_string(v));
      }
      double sum = 0.0;
      for (double p : dist) {
        if (p < 0.0) throw std::invalid_argument("vocab: negative prior probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("vocab: prior for topic " + std::to_string(t) + " viseme " +
                                    std::to_string(v) + " sums to " + std::to_string(sum));
      }
    }
  }

  if (require_ambiguity) {
    bool shared = std::any_of(viseme_chars.begin(), viseme_chars.end(),
                              [](const auto& g) { return g.size() >= 2; });
    if (!shared) throw std::invalid_argument("vocab: no viseme is shared by two characters");
  }
}

SyntheticVocab make_vocab(const VocabSpec& spec) {
  if (spec.n_pairs < 0 || spec.n_singles < 0) {
    throw std::invalid_argument("make_vocab: negative counts");
  }
  if (spec.n_pairs + spec.n_singles < 1) {
    throw std::invalid_argument("make_vocab: need at least one character");
  }
  if (spec.n_topics < 1) throw std::invalid_argument("make_vocab: need at least one topic");
  if (spec.pair_prior < 0.0 || spec.pair_prior > 1.0) {
    throw std::invalid_argument("make_vocab: pair_prior must be in [0, 1]");
  }

  SyntheticVocab vocab;
  vocab.n_topics = spec.n_topics;
  uint32_t next_cp = 0x4e00;
  auto add_char = [&](int viseme) {
    vocab.characters.push_back(utf8_encode(next_cp++));
    vocab.viseme_of.push_back(viseme);
  };

  int viseme = 0;
  for (int p = 0; p < spec.n_pairs; ++p, ++viseme) {
    add_char(viseme);
    add_char(viseme);
  }
  for (int s = 0; s < spec.n_singles; ++s, ++viseme) add_char(viseme);
  for (int t = 0; t < spec.n_topics; ++t, ++viseme) {
    vocab.topic_marker.push_back(static_cast<int>(vocab.characters.size()));
    add_char(viseme);
  }

  int n_visemes = viseme;
  vocab.topic_prior.assign(spec.n_topics, {});
  for (int t = 0; t < spec.n_topics; ++t) {
    vocab.topic_prior[t].resize(n_visemes);
    for (int v = 0; v < spec.n_pairs; ++v) {
      int preferred = (v + t) % 2;
      std::vector<double> dist(2, 0.0);
      dist[preferred] = spec.pair_prior;
      dist[1 - preferred] = 1.0 - spec.pair_prior;
      vocab.topic_prior[t][v] = dist;
    }
    for (int v = spec.n_pairs; v < n_visemes; ++v) {
      vocab.topic_prior[t][v] = {1.0};
    }
  }

  vocab.finalize(spec.n_pairs > 0);
  return vocab;
}

void save_vocab(const SyntheticVocab& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocab file: " + path);
  out << "topics\t" << vocab.n_topics << "\n";
  for (size_t i = 0; i < vocab.characters.size(); ++i) {
    out << "C\t" << vocab.characters[i] << "\t" << vocab.viseme_of[i] << "\n";
  }
  for (size_t t = 0; t < vocab.topic_marker.size(); ++t) {
    out << "M\t" << t << "\t" << vocab.characters[vocab.topic_marker[t]] << "\n";
  }
  for (int t = 0; t < vocab.n_topics; ++t) {
    for (size_t v = 0; v < vocab.topic_prior[t].size(); ++v) {
      for (size_t k = 0; k < vocab.topic_prior[t][v].size(); ++k) {
        out << "P\t" << t << "\t" << v << "\t" << vocab.characters[vocab.viseme_chars[v][k]]
            << "\t";
        char buf[32];
        snprintf(buf, sizeof(buf), "%.17g", vocab.topic_prior[t][v][k]);
        out << buf << "\n";
      }
    }
  }
}

SyntheticVocab load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocab file: " + path);

  SyntheticVocab vocab;
  std::vector<std::tuple<int, int, std::string, double>> prior_rows;
  std::vector<std::pair<int, std::string>> marker_rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t start = 0;
    for (;;) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        cols.push_back(line.substr(start));
        break;
      }
      cols.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    auto fail = [&](const std::string& msg) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (cols[0] == "topics") {
      if (cols.size() != 2) fail("topics row needs one field");
      vocab.n_topics = std::stoi(cols[1]);
    } else if (cols[0] == "C") {
      if (cols.size() != 3) fail("C row needs char and viseme");
      vocab.characters.push_back(cols[1]);
      vocab.viseme_of.push_back(std::stoi(cols[2]));
    } else if (cols[0] == "M") {
      if (cols.size() != 3) fail("M row needs topic and char");
      marker_rows.emplace_back(std::stoi(cols[1]), cols[2]);
    } else if (cols[0] == "P") {
      if (cols.size() != 5) fail("P row needs topic, viseme, char, prob");
      prior_rows.emplace_back(std::stoi(cols[1]), std::stoi(cols[2]), cols[3],
                              std::stod(cols[4]));
    } else {
      fail("unknown row tag: " + cols[0]);
    }
  }

  // Build derived structures before filling priors so char lookups work.
  int max_viseme =
      vocab.viseme_of.empty() ? -1 : *std::max_element(vocab.viseme_of.begin(), vocab.viseme_of.end());
  std::vector<std::vector<int>> groups(max_viseme + 1);
  for (size_t i = 0; i < vocab.characters.size(); ++i) groups[vocab.viseme_of[i]].push_back(i);
  std::map<std::string, int> by_char;
  for (size_t i = 0; i < vocab.characters.size(); ++i) by_char[vocab.characters[i]] = i;

  vocab.topic_prior.assign(vocab.n_topics, std::vector<std::vector<double>>(groups.size()));
  for (int t = 0; t < vocab.n_topics; ++t) {
    for (size_t v = 0; v < groups.size(); ++v) {
      vocab.topic_prior[t][v].assign(groups[v].size(), 0.0);
    }
  }
  for (const auto& [t, v, ch, prob] : prior_rows) {
    auto it = by_char.find(ch);
    if (it == by_char.end()) throw std::runtime_error(path + ": prior for unknown char " + ch);
    const auto& group = groups[v];
    auto slot = std::find(group.begin(), group.end(), it->second);
    if (slot == group.end()) {
      throw std::runtime_error(path + ": char " + ch + " not in viseme " + std::to_string(v));
    }
    vocab.topic_prior[t][v][slot - group.begin()] = prob;
  }
  vocab.topic_marker.assign(marker_rows.size(), -1);
  for (const auto& [t, ch] : marker_rows) {
    auto it = by_char.find(ch);
    if (it == by_char.end()) throw std::runtime_error(path + ": marker is unknown char " + ch);
    vocab.topic_marker[t] = it->second;
  }

  vocab.finalize(false);
  return vocab;
}

BayesBounds bayes_bounds(const SyntheticVocab& vocab) {
  BayesBounds b;
  int n_shared = 0;
  for (int v = 0; v < vocab.n_visemes(); ++v) {
    size_t k = vocab.viseme_chars[v].size();
    if (k < 2) continue;
    ++n_shared;

    // Context-blind: best guess from the topic-marginal character
    // distribution given the viseme.
    double best_marginal = 0.0;
    for (size_t c = 0; c < k; ++c) {
      double m = 0.0;
      for (int t = 0; t < vocab.n_topics; ++t) m += vocab.topic_prior[t][v][c];
      best_marginal = std::max(best_marginal, m / vocab.n_topics);
    }
    b.context_blind += 1.0 - best_marginal;

    // Context-aware: best guess given the topic, averaged over topics.
    double aware_err = 0.0;
    for (int t = 0; t < vocab.n_topics; ++t) {
      double best = *std::max_element(vocab.topic_prior[t][v].begin(), vocab.topic_prior[t][v].end());
      aware_err += 1.0 - best;
    }
    b.context_aware += aware_err / vocab.n_topics;
  }
  if (n_shared > 0) {
    b.context_blind /= n_shared;
    b.context_aware /= n_shared;
  }
  return b;
}

}  // namespace vsrlm
