// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#include "corpus.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rng.hpp"
#include "text.hpp"
#include "tokenizer.hpp"

static_assert(std::endian::native == std::endian::little,
              "feature files are little-endian; big-endian hosts are unsupported");

namespace vsrlm {

namespace fs = std::filesystem;

GenConfig GenConfig::from_config(const KvConfig& cfg) {
  GenConfig g;
  g.n_train = static_cast<int>(cfg.get_int("corpus.n_train", g.n_train));
  g.n_valid = static_cast<int>(cfg.get_int("corpus.n_valid", g.n_valid));
  g.n_test = static_cast<int>(cfg.get_int("corpus.n_test", g.n_test));
  g.noise_std = cfg.get_real("corpus.noise_std", g.noise_std);
  g.seed = static_cast<uint64_t>(cfg.get_int("corpus.seed", static_cast<int64_t>(g.seed)));
  g.transcript_min = static_cast<int>(cfg.get_int("corpus.transcript_min", g.transcript_min));
  g.transcript_max = static_cast<int>(cfg.get_int("corpus.transcript_max", g.transcript_max));
  g.context_min = static_cast<int>(cfg.get_int("corpus.context_min", g.context_min));
  g.context_max = static_cast<int>(cfg.get_int("corpus.context_max", g.context_max));
  g.ambiguous_fraction = cfg.get_real("corpus.ambiguous_fraction", g.ambiguous_fraction);
  g.frames_per_char = static_cast<int>(cfg.get_int("corpus.frames_per_char", g.frames_per_char));
  g.frame_jitter = static_cast<int>(cfg.get_int("corpus.frame_jitter", g.frame_jitter));
  g.d_visual = static_cast<int>(cfg.get_int("corpus.d_visual", g.d_visual));
  g.context_corrupt_rate = cfg.get_real("corpus.context_corrupt_rate", g.context_corrupt_rate);
  return g;
}

void GenConfig::to_config(KvConfig& cfg) const {
  cfg.set_int("corpus.n_train", n_train);
  cfg.set_int("corpus.n_valid", n_valid);
  cfg.set_int("corpus.n_test", n_test);
  cfg.set_real("corpus.noise_std", noise_std);
  cfg.set_int("corpus.seed", static_cast<int64_t>(seed));
  cfg.set_int("corpus.transcript_min", transcript_min);
  cfg.set_int("corpus.transcript_max", transcript_max);
  cfg.set_int("corpus.context_min", context_min);
  cfg.set_int("corpus.context_max", context_max);
  cfg.set_real("corpus.ambiguous_fraction", ambiguous_fraction);
  cfg.set_int("corpus.frames_per_char", frames_per_char);
  cfg.set_int("corpus.frame_jitter", frame_jitter);
  cfg.set_int("corpus.d_visual", d_visual);
  cfg.set_real("corpus.context_corrupt_rate", context_corrupt_rate);
}

VocabSpec vocab_spec_from_config(const KvConfig& cfg) {
  VocabSpec spec;
  spec.n_pairs = static_cast<int>(cfg.get_int("corpus.pairs", spec.n_pairs));
  spec.n_singles = static_cast<int>(cfg.get_int("corpus.singles", spec.n_singles));
  spec.n_topics = static_cast<int>(cfg.get_int("corpus.topics", spec.n_topics));
  spec.pair_prior = cfg.get_real("corpus.pair_prior", spec.pair_prior);
  return spec;
}

void GenConfig::validate(const SyntheticVocab& vocab) const {
  if (n_train < 1 || n_valid < 1 || n_test < 1) {
    throw std::invalid_argument("generate_corpus: split counts must be at least 1");
  }
  if (noise_std < 0.0) throw std::invalid_argument("generate_corpus: noise_std must be >= 0");
  if (transcript_min < 1 || transcript_max < transcript_min) {
    throw std::invalid_argument("generate_corpus: bad transcript length range");
  }
  if (context_min < 0 || context_max < context_min) {
    throw std::invalid_argument("generate_corpus: bad context length range");
  }
  if (frames_per_char < 1) throw std::invalid_argument("generate_corpus: frames_per_char >= 1");
  if (frame_jitter < 0 || frame_jitter >= frames_per_char) {
    throw std::invalid_argument("generate_corpus: frame_jitter must be in [0, frames_per_char)");
  }
  if (d_visual < 1) throw std::invalid_argument("generate_corpus: d_visual >= 1");
  if (ambiguous_fraction < 0.0 || ambiguous_fraction > 1.0) {
    throw std::invalid_argument("generate_corpus: ambiguous_fraction in [0, 1]");
  }
  if (context_corrupt_rate < 0.0 || context_corrupt_rate > 1.0) {
    throw std::invalid_argument("generate_corpus: context_corrupt_rate in [0, 1]");
  }
  bool has_shared = false, has_single = false;
  for (const auto& group : vocab.viseme_chars) {
    bool marker = group.size() == 1 && vocab.is_marker_char(group[0]);
    if (marker) continue;
    (group.size() >= 2 ? has_shared : has_single) = true;
  }
  if (ambiguous_fraction > 0.0 && !has_shared) {
    throw std::invalid_argument("generate_corpus: ambiguous_fraction > 0 but no shared visemes");
  }
  if (ambiguous_fraction < 1.0 && !has_single) {
    throw std::invalid_argument("generate_corpus: ambiguous_fraction < 1 but no singleton visemes");
  }
}

Eigen::MatrixXf viseme_embedding_table(int n_visemes, int d_visual, uint64_t seed) {
  Eigen::MatrixXf table(n_visemes, d_visual);
  for (int v = 0; v < n_visemes; ++v) {
    Rng rng(mix_seed(seed, 0x56534d45ULL, static_cast<uint64_t>(v)));
    double norm2 = 0.0;
    std::vector<double> row(d_visual);
    for (int j = 0; j < d_visual; ++j) {
      row[j] = rng.normal();
      norm2 += row[j] * row[j];
    }
    double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
    for (int j = 0; j < d_visual; ++j) table(v, j) = static_cast<float>(row[j] * inv);
  }
  return table;
}

namespace {

// Sampling weights over visemes: shared visemes carry ambiguous_fraction of
// the mass, singleton (non-marker) visemes the rest. Marker visemes never
// appear in transcripts.
std::vector<double> transcript_viseme_weights(const SyntheticVocab& vocab, const GenConfig& gen) {
  std::vector<int> shared, single;
  for (int v = 0; v < vocab.n_visemes(); ++v) {
    const auto& group = vocab.viseme_chars[v];
    if (group.size() == 1 && vocab.is_marker_char(group[0])) continue;
    (group.size() >= 2 ? shared : single).push_back(v);
  }
  std::vector<double> w(vocab.n_visemes(), 0.0);
  for (int v : shared) w[v] = gen.ambiguous_fraction / shared.size();
  for (int v : single) w[v] = (1.0 - gen.ambiguous_fraction) / single.size();
  return w;
}

int sample_char(const SyntheticVocab& vocab, int topic, int viseme, Rng& rng) {
  const auto& dist = vocab.topic_prior[topic][viseme];
  size_t slot = rng.categorical(dist);
  return vocab.viseme_chars[viseme][slot];
}

}  // namespace

Utterance generate_utterance(const SyntheticVocab& vocab, const GenConfig& gen,
                             const std::string& id, uint64_t index,
                             const Eigen::MatrixXf& viseme_emb) {
  Rng rng(mix_seed(gen.seed, 0x55545400ULL, index));
  Utterance utt;
  utt.id = id;
  utt.topic = static_cast<int>(rng.uniform_int(vocab.n_topics));

  std::vector<double> weights = transcript_viseme_weights(vocab, gen);
  int length = rng.uniform_range(gen.transcript_min, gen.transcript_max);

  std::vector<int> char_ids(length), visemes(length);
  for (int i = 0; i < length; ++i) {
    visemes[i] = static_cast<int>(rng.categorical(weights));
    char_ids[i] = sample_char(vocab, utt.topic, visemes[i], rng);
    utt.transcript += vocab.characters[char_ids[i]];
  }

  // Per-character frame blocks: viseme embedding plus Gaussian noise.
  std::vector<int> frames(length, gen.frames_per_char);
  if (gen.frame_jitter > 0) {
    for (int i = 0; i < length; ++i) {
      frames[i] += rng.uniform_range(-gen.frame_jitter, gen.frame_jitter);
    }
  }
  int total = 0;
  for (int f : frames) total += f;
  utt.video_features.resize(total, gen.d_visual);
  int row = 0;
  for (int i = 0; i < length; ++i) {
    for (int f = 0; f < frames[i]; ++f, ++row) {
      for (int j = 0; j < gen.d_visual; ++j) {
        utt.video_features(row, j) =
            viseme_emb(visemes[i], j) + static_cast<float>(gen.noise_std * rng.normal());
      }
    }
  }

  // Context: a fixed topic-indicative opening (the topic's marker character,
  // twice) followed by characters sampled from the topic's distribution.
  int context_len = rng.uniform_range(gen.context_min, gen.context_max);
  std::vector<int> context_chars;
  if (!vocab.topic_marker.empty()) {
    int marker = vocab.topic_marker[utt.topic % vocab.topic_marker.size()];
    context_chars.push_back(marker);
    context_chars.push_back(marker);
  }
  while (static_cast<int>(context_chars.size()) < context_len) {
    int v = static_cast<int>(rng.categorical(weights));
    context_chars.push_back(sample_char(vocab, utt.topic, v, rng));
  }
  context_chars.resize(context_len);

  if (gen.context_corrupt_rate > 0.0) {
    std::vector<int> non_marker;
    for (int c = 0; c < static_cast<int>(vocab.characters.size()); ++c) {
      if (!vocab.is_marker_char(c)) non_marker.push_back(c);
    }
    for (int& c : context_chars) {
      if (rng.uniform() < gen.context_corrupt_rate) {
        c = non_marker[rng.uniform_int(non_marker.size())];
      }
    }
  }
  for (int c : context_chars) utt.context_text += vocab.characters[c];
  return utt;
}

std::vector<ManifestEntry> generate_corpus(const SyntheticVocab& vocab, const GenConfig& gen,
                                           const std::string& out_dir) {
  gen.validate(vocab);

  fs::create_directories(fs::path(out_dir) / "features");
  Eigen::MatrixXf viseme_emb = viseme_embedding_table(vocab.n_visemes(), gen.d_visual, gen.seed);

  struct SplitPlan {
    const char* name;
    int count;
  };
  const SplitPlan plan[] = {{"train", gen.n_train}, {"valid", gen.n_valid}, {"test", gen.n_test}};

  std::vector<ManifestEntry> entries;
  uint64_t index = 0;
  for (const auto& split : plan) {
    for (int i = 0; i < split.count; ++i, ++index) {
      char idbuf[64];
      snprintf(idbuf, sizeof(idbuf), "%s_%05d", split.name, i);
      Utterance utt = generate_utterance(vocab, gen, idbuf, index, viseme_emb);

      ManifestEntry entry;
      entry.id = utt.id;
      entry.feature_path = std::string("features/") + utt.id + ".bin";
      entry.transcript = utt.transcript;
      entry.context_text = utt.context_text;
      entry.split = split.name;
      write_feature_file((fs::path(out_dir) / entry.feature_path).string(), utt.video_features);
      entries.push_back(std::move(entry));
    }
  }

  write_manifest(manifest_path(out_dir), entries);
  save_vocab(vocab, vocab_path(out_dir));
  Tokenizer::build(vocab).save(tokens_path(out_dir));

  KvConfig meta;
  gen.to_config(meta);
  meta.save_file(out_dir + "/gen_config.txt");
  return entries;
}

void write_feature_file(const std::string& path, const Eigen::MatrixXf& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write feature file: " + path);
  uint32_t rows = static_cast<uint32_t>(features.rows());
  uint32_t cols = static_cast<uint32_t>(features.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  std::vector<float> row(cols);
  for (uint32_t r = 0; r < rows; ++r) {
    for (uint32_t c = 0; c < cols; ++c) row[c] = features(r, c);
    out.write(reinterpret_cast<const char*>(row.data()), 4ull * cols);
  }
  if (!out) throw std::runtime_error("short write on feature file: " + path);
}

Eigen::MatrixXf read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);
  uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || rows == 0 || cols == 0) {
    throw std::runtime_error("malformed feature file header: " + path);
  }
  Eigen::MatrixXf features(rows, cols);
  std::vector<float> row(cols);
  for (uint32_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), 4ull * cols);
    if (!in) throw std::runtime_error("truncated feature file: " + path);
    for (uint32_t c = 0; c < cols; ++c) features(r, c) = row[c];
  }
  return features;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& e : entries) {
    out << e.id << '\t' << e.feature_path << '\t' << e.transcript << '\t' << e.context_text
        << '\t' << e.split << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
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
    if (cols.size() != 5) {
      throw std::runtime_error(path + ": row " + std::to_string(lineno) +
                               ": expected 5 tab-separated columns, got " +
                               std::to_string(cols.size()));
    }
    ManifestEntry e{cols[0], cols[1], cols[2], cols[3], cols[4]};
    if (e.id.empty()) {
      throw std::runtime_error(path + ": row " + std::to_string(lineno) + ": empty id");
    }
    if (e.split != "train" && e.split != "valid" && e.split != "test") {
      throw std::runtime_error(path + ": row " + std::to_string(lineno) +
                               ": unknown split: " + e.split);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<Utterance> load_manifest(const std::string& manifest_path_in,
                                     const std::string& split) {
  auto entries = read_manifest(manifest_path_in);
  fs::path base = fs::path(manifest_path_in).parent_path();

  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.id).second) {
      throw std::runtime_error(manifest_path_in + ": duplicate id: " + e.id);
    }
  }

  std::vector<Utterance> utts;
  for (const auto& e : entries) {
    if (!split.empty() && e.split != split) continue;
    Utterance utt;
    utt.id = e.id;
    utt.transcript = e.transcript;
    utt.context_text = e.context_text;
    fs::path feat = fs::path(e.feature_path).is_absolute() ? fs::path(e.feature_path)
                                                           : base / e.feature_path;
    if (!fs::exists(feat)) {
      throw std::runtime_error("missing feature file for utterance " + e.id + ": " +
                               feat.string());
    }
    utt.video_features = read_feature_file(feat.string());
    if (utt.transcript.empty()) {
      throw std::runtime_error(manifest_path_in + ": utterance " + e.id + " has empty transcript");
    }
    utts.push_back(std::move(utt));
  }
  return utts;
}

std::string extract_context(const std::vector<TimedSegment>& segments, double clip_start,
                            double window) {
  if (window < 0.0) throw std::invalid_argument("extract_context: negative window");
  for (size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].end < segments[i].start) {
      throw std::invalid_argument("extract_context: segment with negative duration");
    }
    if (i > 0 && segments[i].start < segments[i - 1].end) {
      throw std::invalid_argument("extract_context: segments must be ordered and non-overlapping");
    }
  }
  double lo = clip_start - window;
  double hi = clip_start;
  std::string out;
  for (const auto& seg : segments) {
    if (seg.start < hi && seg.end > lo) out += seg.text;
  }
  return out;
}

CorpusStats corpus_stats(const std::string& corpus_dir) {
  CorpusStats stats;
  auto entries = read_manifest(manifest_path(corpus_dir));
  SyntheticVocab vocab = load_vocab(vocab_path(corpus_dir));
  stats.bounds = bayes_bounds(vocab);
  if (fs::exists(corpus_dir + "/gen_config.txt")) {
    stats.corpus_id = KvConfig::load_file(corpus_dir + "/gen_config.txt").hash();
  }

  bool first = true;
  double context_total = 0.0;
  for (const auto& e : entries) {
    if (e.split == "train") ++stats.n_train;
    if (e.split == "valid") ++stats.n_valid;
    if (e.split == "test") ++stats.n_test;

    size_t clen = utf8_length(e.context_text);
    context_total += static_cast<double>(clen);
    if (first) {
      stats.context_min = stats.context_max = clen;
      first = false;
    } else {
      stats.context_min = std::min(stats.context_min, clen);
      stats.context_max = std::max(stats.context_max, clen);
    }

    for (uint32_t cp : utf8_decode(e.transcript)) {
      auto it = vocab.char_index.find(cp);
      if (it == vocab.char_index.end()) continue;
      ++stats.transcript_chars;
      if (vocab.is_ambiguous_char(it->second)) ++stats.ambiguous_chars;
    }
  }
  if (!entries.empty()) context_total /= static_cast<double>(entries.size());
  stats.context_mean = context_total;
  if (stats.transcript_chars > 0) {
    stats.ambiguous_fraction =
        static_cast<double>(stats.ambiguous_chars) / static_cast<double>(stats.transcript_chars);
  }
  return stats;
}

std::string CorpusStats::render_text() const {
  std::ostringstream os;
  os << "corpus " << corpus_id << "\n";
  os << "  utterances: train=" << n_train << " valid=" << n_valid << " test=" << n_test << "\n";
  char buf[160];
  snprintf(buf, sizeof(buf), "  context length: min=%zu mean=%.2f max=%zu\n", context_min,
           context_mean, context_max);
  os << buf;
  snprintf(buf, sizeof(buf), "  ambiguous positions: %zu / %zu (%.2f%%)\n", ambiguous_chars,
           transcript_chars, 100.0 * ambiguous_fraction);
  os << buf;
  snprintf(buf, sizeof(buf),
           "  bayes error on ambiguous positions: context-blind=%.4f context-aware=%.4f\n",
           bounds.context_blind, bounds.context_aware);
  os << buf;
  return os.str();
}

}  // namespace vsrlm
