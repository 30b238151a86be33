// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#include "tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "prompt.hpp"
#include "text.hpp"

namespace vsrlm {

namespace {
const char* kSpecialSurface[3] = {"<|endoftext|>", "<|vision_start|>", "<|vision_end|>"};
}

void Tokenizer::index() {
  by_codepoint_.clear();
  for (size_t id = 3; id < symbols_.size(); ++id) {
    auto cps = utf8_decode(symbols_[id]);
    if (cps.size() != 1) {
      throw std::invalid_argument("tokenizer: non-special symbol must be one codepoint: " +
                                  symbols_[id]);
    }
    auto [it, inserted] = by_codepoint_.emplace(cps[0], static_cast<int>(id));
    if (!inserted) throw std::invalid_argument("tokenizer: duplicate symbol " + symbols_[id]);
  }
}

Tokenizer Tokenizer::build_from_text(const std::string& characters) {
  std::vector<uint32_t> cps = utf8_decode(template_alphabet());
  for (uint32_t cp : utf8_decode(characters)) cps.push_back(cp);
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());

  Tokenizer tok;
  tok.symbols_.assign(kSpecialSurface, kSpecialSurface + 3);
  for (uint32_t cp : cps) tok.symbols_.push_back(utf8_encode(cp));
  tok.index();
  return tok;
}

Tokenizer Tokenizer::build(const SyntheticVocab& vocab) {
  std::string chars;
  for (const auto& c : vocab.characters) chars += c;
  return build_from_text(chars);
}

Tokenizer Tokenizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open token table: " + path);
  Tokenizer tok;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected id<TAB>symbol");
    }
    int id = std::stoi(line.substr(0, tab));
    if (id != static_cast<int>(tok.symbols_.size())) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": ids must be dense");
    }
    tok.symbols_.push_back(line.substr(tab + 1));
  }
  if (tok.symbols_.size() < 3) throw std::runtime_error(path + ": missing special tokens");
  for (int i = 0; i < 3; ++i) {
    if (tok.symbols_[i] != kSpecialSurface[i]) {
      throw std::runtime_error(path + ": special token mismatch at id " + std::to_string(i));
    }
  }
  tok.index();
  return tok;
}

void Tokenizer::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write token table: " + path);
  for (size_t id = 0; id < symbols_.size(); ++id) {
    out << id << '\t' << symbols_[id] << '\n';
  }
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (uint32_t cp : utf8_decode(text)) {
    auto it = by_codepoint_.find(cp);
    if (it == by_codepoint_.end()) {
      throw std::invalid_argument("tokenizer: unknown symbol '" + utf8_encode(cp) +
                                  "' (U+" + std::to_string(cp) + ")");
    }
    ids.push_back(it->second);
  }
  return ids;
}

std::string Tokenizer::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) out += symbol(id);
  return out;
}

const std::string& Tokenizer::symbol(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("tokenizer: id out of range");
  return symbols_[id];
}

int Tokenizer::char_id(std::string_view character) const {
  auto cps = utf8_decode(character);
  if (cps.size() != 1) throw std::invalid_argument("tokenizer: char_id needs one codepoint");
  auto it = by_codepoint_.find(cps[0]);
  if (it == by_codepoint_.end()) {
    throw std::invalid_argument("tokenizer: unknown symbol " + std::string(character));
  }
  return it->second;
}

bool Tokenizer::has_char(std::string_view character) const {
  auto cps = utf8_decode(character);
  return cps.size() == 1 && by_codepoint_.count(cps[0]) > 0;
}

}  // namespace vsrlm
