// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <optional>
#include <string>

namespace vsrlm {

// The five prompt forms. IterFirst is byte-identical to Base; it exists so
// call sites state which decoding stage they are in.
enum class PromptKind { Base, Context, IterFirst, IterRefine, Caid };

const char* prompt_kind_name(PromptKind kind);

// Byte-exact template instantiation. Context is required for Context and
// Caid; reference is required for IterRefine. For Caid, a missing reference
// renders the literal string "None" (the first-iteration form).
std::string build_prompt(PromptKind kind, const std::optional<std::string>& context = std::nullopt,
                         const std::optional<std::string>& reference = std::nullopt);

// Every codepoint that can appear in an instantiated template, independent of
// the context/reference arguments. Tokenizer vocabularies must cover these.
std::string template_alphabet();

}  // namespace vsrlm
