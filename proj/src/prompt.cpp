// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#include "prompt.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "text.hpp"

namespace vsrlm {

namespace {

constexpr const char* kBase = "Recognize the sentence as Chinese, INPUT:";
constexpr const char* kContextPrefix = "Preceding text: ";
constexpr const char* kContextSuffix = ". Recognize the sentence as Chinese, INPUT:";
constexpr const char* kRefinePrefix = "Based on the reference: ";
constexpr const char* kRefineSuffix = ", recognize this sentence as Chinese, INPUT:";
constexpr const char* kCaidMiddle = ". Based on the preceding text and the reference: ";
constexpr const char* kNone = "None";

}  // namespace

const char* prompt_kind_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::Base: return "base";
    case PromptKind::Context: return "context";
    case PromptKind::IterFirst: return "iter_first";
    case PromptKind::IterRefine: return "iter_refine";
    case PromptKind::Caid: return "caid";
  }
  return "?";
}

std::string build_prompt(PromptKind kind, const std::optional<std::string>& context,
                         const std::optional<std::string>& reference) {
  switch (kind) {
    case PromptKind::Base:
    case PromptKind::IterFirst:
      return kBase;
    case PromptKind::Context:
      if (!context) throw std::invalid_argument("build_prompt: context prompt needs context");
      return std::string(kContextPrefix) + *context + kContextSuffix;
    case PromptKind::IterRefine:
      if (!reference) throw std::invalid_argument("build_prompt: refine prompt needs reference");
      return std::string(kRefinePrefix) + *reference + kRefineSuffix;
    case PromptKind::Caid:
      if (!context) throw std::invalid_argument("build_prompt: caid prompt needs context");
      return std::string(kContextPrefix) + *context + kCaidMiddle +
             (reference ? *reference : std::string(kNone)) + kRefineSuffix;
  }
  throw std::invalid_argument("build_prompt: unknown prompt kind");
}

std::string template_alphabet() {
  std::string all = std::string(kBase) + kContextPrefix + kContextSuffix + kRefinePrefix +
                    kRefineSuffix + kCaidMiddle + kNone;
  std::vector<uint32_t> cps = utf8_decode(all);
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  return utf8_encode(cps);
}

}  // namespace vsrlm
