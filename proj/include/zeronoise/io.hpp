#pragma once

// Plain-text I/O: 17-digit CSV, flat key = value config files, SHA-256
// digests of inputs.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "zeronoise/torus.hpp"

namespace zeronoise {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string &file, std::size_t line, const std::string &what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const char *ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double &out) {
  s = trim(s);
  if (s == "inf" || s == "Infinity") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

inline double to_double(std::string_view s, const std::string &what) {
  double v;
  if (!parse_double(s, v)) throw UsageError("invalid number for " + what + ": '" + std::string(s) + "'");
  return v;
}

inline std::vector<double> to_double_list(std::string_view s, const std::string &what) {
  std::vector<double> out;
  for (const auto &item : split(s, ',')) out.push_back(to_double(item, what));
  return out;
}

/// Flat "key = value" lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_key_values(const std::string &file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open config file '" + file + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto hash = line.find('#');
    std::string_view body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(file, n, "expected key = value");
    auto key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseError(file, n, "empty key");
    out.emplace_back(std::string(key), std::string(trim(body.substr(eq + 1))));
  }
  return out;
}

/// One sample row: path id, time, position.
struct SampleRow {
  std::size_t path_id = 0;
  double t = 0.0;
  TorusPoint x{};
};

inline constexpr std::string_view kSamplesHeader = "path_id,t,x1,x2";

inline void write_samples_header(std::ostream &os) { os << kSamplesHeader << '\n'; }

inline void write_sample_row(std::ostream &os, const SampleRow &r) {
  os << r.path_id << ',' << fmt17(r.t) << ',' << fmt17(r.x[0]) << ',' << fmt17(r.x[1]) << '\n';
}

inline std::vector<SampleRow> read_samples_csv(const std::string &file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open samples file '" + file + "'");
  std::string line;
  std::size_t n = 1;
  if (!std::getline(in, line) || trim(line) != kSamplesHeader)
    throw ParseError(file, n, "expected header '" + std::string(kSamplesHeader) + "'");
  std::vector<SampleRow> rows;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 4) throw ParseError(file, n, "expected 4 fields, got " + std::to_string(f.size()));
    SampleRow r;
    auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.path_id);
    if (ec != std::errc() || p != f[0].data() + f[0].size() || f[0].empty())
      throw ParseError(file, n, "bad path_id '" + f[0] + "'");
    double x1, x2;
    if (!parse_double(f[1], r.t) || !parse_double(f[2], x1) || !parse_double(f[3], x2))
      throw ParseError(file, n, "bad number");
    if (!(x1 >= 0.0 && x1 < 1.0 && x2 >= 0.0 && x2 < 1.0))
      throw ParseError(file, n, "coordinates must lie in [0,1)");
    r.x = TorusPoint(x1, x2);
    rows.push_back(r);
  }
  return rows;
}

inline std::string sha256_file(const std::string &file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + file + "'");
  EVP_MD_CTX *ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

} // namespace zeronoise
