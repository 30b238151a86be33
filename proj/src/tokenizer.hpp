// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vocab.hpp"

namespace vsrlm {

// Character-level tokenizer: one id per codepoint plus three reserved special
// tokens. There is no unknown token; out-of-vocabulary characters are errors.
class Tokenizer {
 public:
  static constexpr int kEndOfText = 0;     // "<|endoftext|>"
  static constexpr int kVisionStart = 1;   // "<|vision_start|>"
  static constexpr int kVisionEnd = 2;     // "<|vision_end|>"

  // Vocabulary = specials + the template alphabet + the corpus characters.
  static Tokenizer build(const SyntheticVocab& vocab);
  // Builds from an explicit character string (tests and pretraining corpora).
  static Tokenizer build_from_text(const std::string& characters);

  static Tokenizer load(const std::string& path);
  void save(const std::string& path) const;

  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> ids) const;

  int size() const { return static_cast<int>(symbols_.size()); }
  bool is_special(int id) const { return id >= 0 && id < 3; }
  const std::string& symbol(int id) const;
  // Id of a single-codepoint symbol; throws if absent.
  int char_id(std::string_view character) const;
  bool has_char(std::string_view character) const;

 private:
  std::vector<std::string> symbols_;     // id -> surface form
  std::map<uint32_t, int> by_codepoint_; // single-codepoint symbols only
  void index();
};

}  // namespace vsrlm
