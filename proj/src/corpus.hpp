// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kvconfig.hpp"
#include "vocab.hpp"

namespace vsrlm {

// One sample: frame-wise visual features, target transcript, and the
// transcript of the preceding segment (may be empty).
struct Utterance {
  std::string id;
  Eigen::MatrixXf video_features;  // T_v x D_v
  std::string transcript;
  std::string context_text;
  int topic = -1;  // known for freshly generated corpora only
};

struct ManifestEntry {
  std::string id;
  std::string feature_path;  // relative to the manifest's directory
  std::string transcript;
  std::string context_text;
  std::string split;  // train | valid | test
};

struct GenConfig {
  int n_train = 400;
  int n_valid = 100;
  int n_test = 100;
  double noise_std = 0.1;
  uint64_t seed = 1;
  int transcript_min = 4;
  int transcript_max = 8;
  int context_min = 2;
  int context_max = 120;
  double ambiguous_fraction = 0.4;  // fraction of positions drawn from shared visemes
  int frames_per_char = 4;
  int frame_jitter = 0;  // +- frames per character; 0 keeps oracles exact
  int d_visual = 8;
  double context_corrupt_rate = 0.0;

  static GenConfig from_config(const KvConfig& cfg);
  void to_config(KvConfig& cfg) const;
  void validate(const SyntheticVocab& vocab) const;
};

VocabSpec vocab_spec_from_config(const KvConfig& cfg);

// Deterministic per-viseme feature embeddings (unit norm). Feature rows are
// viseme embeddings plus Gaussian noise, so characters sharing a viseme are
// indistinguishable from features alone.
Eigen::MatrixXf viseme_embedding_table(int n_visemes, int d_visual, uint64_t seed);

// Generates one utterance. Exposed so tests can cross-check sharded
// generation; `index` is the global utterance index.
Utterance generate_utterance(const SyntheticVocab& vocab, const GenConfig& gen,
                             const std::string& id, uint64_t index,
                             const Eigen::MatrixXf& viseme_emb);

// Writes manifest.tsv, features/*.bin, vocab.tsv, tokens.tsv and
// gen_config.txt under out_dir. Byte-identical for identical inputs.
std::vector<ManifestEntry> generate_corpus(const SyntheticVocab& vocab, const GenConfig& gen,
                                           const std::string& out_dir);

void write_feature_file(const std::string& path, const Eigen::MatrixXf& features);
Eigen::MatrixXf read_feature_file(const std::string& path);

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Loads utterances of one split ("" = all splits) with features resolved
// relative to the manifest location. Rejects duplicate ids and malformed
// rows with an error naming the offending row.
std::vector<Utterance> load_manifest(const std::string& manifest_path,
                                     const std::string& split = "");

// Time-stamped long-form transcript segment.
struct TimedSegment {
  double start = 0.0;
  double end = 0.0;
  std::string text;
};

// Concatenates the text of all segments whose span intersects
// [clip_start - window, clip_start), in temporal order.
std::string extract_context(const std::vector<TimedSegment>& segments, double clip_start,
                            double window = 30.0);

struct CorpusStats {
  int n_train = 0, n_valid = 0, n_test = 0;
  size_t transcript_chars = 0;
  size_t ambiguous_chars = 0;
  size_t context_min = 0, context_max = 0;
  double context_mean = 0.0;
  double ambiguous_fraction = 0.0;  // measured over transcripts
  BayesBounds bounds;               // per ambiguous position
  std::string corpus_id;

  std::string render_text() const;
};

CorpusStats corpus_stats(const std::string& corpus_dir);

inline std::string manifest_path(const std::string& corpus_dir) {
  return corpus_dir + "/manifest.tsv";
}
inline std::string vocab_path(const std::string& corpus_dir) { return corpus_dir + "/vocab.tsv"; }
inline std::string tokens_path(const std::string& corpus_dir) {
  return corpus_dir + "/tokens.tsv";
}

}  // namespace vsrlm
