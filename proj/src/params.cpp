// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#include "params.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoints are little-endian; big-endian hosts are unsupported");

namespace vsrlm {

namespace {
constexpr char kMagic[8] = {'V', 'S', 'R', 'L', 'M', 'C', 'K', '1'};
}

template <class S>
void checkpoint_save(const std::string& path, const ParamStore<S>& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  uint32_t count = static_cast<uint32_t>(store.entries().size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  std::vector<float> buf;
  for (const auto& [name, m] : store.entries()) {
    uint32_t name_len = static_cast<uint32_t>(name.size());
    uint32_t rows = static_cast<uint32_t>(m.rows());
    uint32_t cols = static_cast<uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&name_len), 4);
    out.write(name.data(), name_len);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    buf.resize(static_cast<size_t>(rows) * cols);
    size_t k = 0;
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t c = 0; c < cols; ++c) buf[k++] = static_cast<float>(m(r, c));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), 4ull * buf.size());
  }
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

template void checkpoint_save<float>(const std::string&, const ParamStore<float>&);
template void checkpoint_save<double>(const std::string&, const ParamStore<double>&);

std::map<std::string, Eigen::MatrixXf> checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("bad checkpoint magic: " + path);
  }
  uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  std::map<std::string, Eigen::MatrixXf> out;
  std::vector<float> buf;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = 0, rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&name_len), 4);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    buf.resize(static_cast<size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()), 4ull * buf.size());
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    Eigen::MatrixXf m(rows, cols);
    size_t k = 0;
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t c = 0; c < cols; ++c) m(r, c) = buf[k++];
    }
    out.emplace(std::move(name), std::move(m));
  }
  return out;
}

}  // namespace vsrlm
