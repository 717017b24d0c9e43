#pragma once

// QAPLIB text format: N, then A (N² integers, row-major), then B.
// Any whitespace separates tokens on input; output is one matrix row per line
// with a blank line between A and B.

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qapsa/core.hpp"
#include "qapsa/errors.hpp"
#include "qapsa/random_stream.hpp"

namespace qapsa {

namespace detail {

inline std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > begin) tokens.push_back(text.substr(begin, i - begin));
  }
  return tokens;
}

inline std::int64_t parse_integer(std::string_view token, std::size_t position) {
  std::int64_t value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) throw ParseError(position, std::string(token));
  return value;
}

}  // namespace detail

/// Errors: ParseError (non-integer token), SizeError (N < 2),
/// TruncationError (token count != 1 + 2N²), DomainError (negative entry).
inline Instance parse_qaplib(std::string_view text) {
  const auto tokens = detail::split_whitespace(text);
  std::vector<std::int64_t> values;
  values.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) values.push_back(detail::parse_integer(tokens[i], i));

  if (values.empty()) throw TruncationError(1, 0);
  if (values[0] < 2) throw SizeError("instance size must be at least 2, got " + std::to_string(values[0]));
  // guard the 2N² arithmetic; anything this large cannot match the token count anyway
  if (values[0] > (std::int64_t{1} << 24)) throw SizeError("instance size " + std::to_string(values[0]) + " is too large");
  const auto n = static_cast<std::size_t>(values[0]);
  const std::size_t expected = 1 + 2 * n * n;
  if (values.size() != expected) throw TruncationError(expected, values.size());

  Matrix a(n), b(n);
  std::size_t t = 1;
  for (auto* m : {&a, &b})
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto v = values[t];
        if (v < 0)
          throw DomainError("negative entry " + std::to_string(v) + " at token " + std::to_string(t));
        (*m)(i, j) = v;
        ++t;
      }
  return Instance(std::move(a), std::move(b));
}

inline std::string write_qaplib(const Instance& instance) {
  std::string out = std::to_string(instance.n()) + "\n";
  const auto emit = [&](const Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (j) out += ' ';
        out += std::to_string(m(i, j));
      }
      out += '\n';
    }
  };
  emit(instance.a());
  out += '\n';
  emit(instance.b());
  return out;
}

inline Instance read_qaplib_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open instance file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return parse_qaplib(buffer.str());
}

inline void write_qaplib_file(const Instance& instance, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << write_qaplib(instance);
  out.flush();
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

struct GeneratorSpec {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::int64_t max_value = 100;
};

/// Random symmetric zero-diagonal instance with off-diagonal entries uniform in
/// [1, max_value]. Stream index t covers A's upper triangle row-major
/// (t = 0 .. M−1), then B's (t = M .. 2M−1), M = N(N−1)/2.
inline Instance generate_taixxa(const GeneratorSpec& spec) {
  if (spec.n < 2) throw ConfigError("generated instance size must be at least 2");
  if (spec.max_value < 1) throw ConfigError("max_value must be at least 1");
  const RandomStream stream(spec.seed);
  const auto bound = static_cast<std::uint64_t>(spec.max_value);
  std::int64_t t = 0;
  const auto fill = [&](Matrix& m) {
    for (std::size_t i = 0; i < spec.n; ++i)
      for (std::size_t j = i + 1; j < spec.n; ++j) {
        const auto v = static_cast<Value>(1 + stream.below(t++, bound));
        m(i, j) = v;
        m(j, i) = v;
      }
  };
  Matrix a(spec.n), b(spec.n);
  fill(a);
  fill(b);
  return Instance(std::move(a), std::move(b));
}

}  // namespace qapsa
