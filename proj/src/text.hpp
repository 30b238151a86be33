// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vsrlm {

// UTF-8 codepoint helpers. Transcripts and contexts are CJK-style character
// sequences, so everything character-level (tokenization, CER) works on
// codepoints, never on bytes.

// Decodes a UTF-8 string into codepoints. Throws std::invalid_argument on
// malformed input.
std::vector<uint32_t> utf8_decode(std::string_view s);

void utf8_append(std::string& out, uint32_t cp);
std::string utf8_encode(uint32_t cp);
std::string utf8_encode(const std::vector<uint32_t>& cps);

size_t utf8_length(std::string_view s);

}  // namespace vsrlm
