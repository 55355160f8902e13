#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganlab/tensor.hpp"

namespace ganlab {

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated idx file: " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) |
         static_cast<std::uint32_t>(b[3]);
}

inline std::string hex_u32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

inline void check_magic(std::uint32_t got, std::uint32_t want,
                        const std::string& path) {
  if (got != want) {
    throw std::runtime_error("bad idx magic in " + path + ": expected " +
                             hex_u32(want) + ", found " + hex_u32(got));
  }
}

}  // namespace detail

struct IdxImages {
  Tensor data;  // n x (rows * cols), pixels mapped to [-1, 1]
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
};

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

inline IdxImages read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open idx file: " + path);
  detail::check_magic(detail::read_be_u32(in, path), kIdxImagesMagic, path);
  const std::size_t n = detail::read_be_u32(in, path);
  const std::size_t rows = detail::read_be_u32(in, path);
  const std::size_t cols = detail::read_be_u32(in, path);
  const std::size_t total = n * rows * cols;
  std::vector<unsigned char> raw(total);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(total));
  if (static_cast<std::size_t>(in.gcount()) != total) {
    throw std::runtime_error("truncated idx file: " + path);
  }
  std::vector<double> data(total);
  for (std::size_t i = 0; i < total; ++i) {
    data[i] = static_cast<double>(raw[i]) / 127.5 - 1.0;
  }
  IdxImages out;
  out.data = Tensor({n, rows * cols}, std::move(data));
  out.image_rows = rows;
  out.image_cols = cols;
  return out;
}

inline std::vector<std::size_t> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open idx file: " + path);
  detail::check_magic(detail::read_be_u32(in, path), kIdxLabelsMagic, path);
  const std::size_t n = detail::read_be_u32(in, path);
  std::vector<unsigned char> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw std::runtime_error("truncated idx file: " + path);
  }
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = raw[i];
  return labels;
}

}  // namespace ganlab
