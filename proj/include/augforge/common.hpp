// include/augforge/common.hpp

// Copyright 2026  Augforge Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AUGFORGE_COMMON_HPP_
#define AUGFORGE_COMMON_HPP_

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <cmath>
#include <iostream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace augforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void StrImpl(std::ostringstream&) {}

template <typename T, typename... Rest>
void StrImpl(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  StrImpl(os, rest...);
}

template <typename... Args>
std::string Str(const Args&... args) {
  std::ostringstream os;
  os.precision(17);
  StrImpl(os, args...);
  return os.str();
}

}  // namespace detail

#define AF_FAIL(...) throw ::augforge::Error(::augforge::detail::Str(__VA_ARGS__))
#define AF_CHECK(cond, ...) \
  do {                      \
    if (!(cond)) AF_FAIL(__VA_ARGS__); \
  } while (0)

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

inline LogLevel& MutableLogLevel() {
  static LogLevel level = [] {
    const char* env = std::getenv("AUGFORGE_LOG");
    if (env == nullptr) return LogLevel::kInfo;
    const std::string s(env);
    if (s == "error") return LogLevel::kError;
    if (s == "warn") return LogLevel::kWarn;
    if (s == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

inline void LogMsg(LogLevel lv, const std::string& msg) {
  static const char* kNames[] = {"ERROR", "WARN", "INFO", "DEBUG"};
  if (static_cast<int>(lv) <= static_cast<int>(MutableLogLevel()))
    std::cerr << "augforge [" << kNames[static_cast<int>(lv)] << "] " << msg << "\n";
}

template <typename... Args>
void LogInfo(Args&&... args) {
  LogMsg(LogLevel::kInfo, detail::Str(std::forward<Args>(args)...));
}
template <typename... Args>
void LogWarn(Args&&... args) {
  LogMsg(LogLevel::kWarn, detail::Str(std::forward<Args>(args)...));
}
template <typename... Args>
void LogDebug(Args&&... args) {
  LogMsg(LogLevel::kDebug, detail::Str(std::forward<Args>(args)...));
}

// Dense row-major matrix of doubles. Enough linear algebra for this library;
// all heavier math is written as explicit loops next to its use site.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return data[r * cols + c]; }

  double* row(size_t r) { return data.data() + r * cols; }
  const double* row(size_t r) const { return data.data() + r * cols; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Pairwise (cascade) summation; keeps rounding error O(log n) so that
// whole-corpus reductions agree with their per-item decomposition.
inline double PairwiseSum(const double* x, size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const size_t half = n / 2;
  return PairwiseSum(x, half) + PairwiseSum(x + half, n - half);
}

inline double PairwiseSum(const std::vector<double>& x) { return PairwiseSum(x.data(), x.size()); }

inline double PairwiseMean(const std::vector<double>& x) {
  AF_CHECK(!x.empty(), "mean of empty sequence");
  return PairwiseSum(x) / static_cast<double>(x.size());
}

inline uint64_t Fnv1a64(const void* bytes, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t Fnv1a64(const std::string& s) { return Fnv1a64(s.data(), s.size()); }

inline size_t NextPow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Little-endian binary stream helpers. File formats in this library are
// defined little-endian regardless of host order.
inline void WriteU32Le(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void WriteU64Le(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void WriteU16Le(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline void WriteI16Le(std::ostream& os, int16_t v) { WriteU16Le(os, static_cast<uint16_t>(v)); }

inline void WriteF32Le(std::ostream& os, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  WriteU32Le(os, u);
}

inline void WriteF64Le(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  WriteU64Le(os, u);
}

inline bool ReadBytes(std::istream& is, void* out, size_t n) {
  is.read(static_cast<char*>(out), static_cast<std::streamsize>(n));
  return static_cast<size_t>(is.gcount()) == n && !is.fail();
}

inline uint32_t ReadU32Le(std::istream& is, const std::string& what) {
  unsigned char b[4];
  AF_CHECK(ReadBytes(is, b, 4), "truncated read: ", what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

inline uint64_t ReadU64Le(std::istream& is, const std::string& what) {
  unsigned char b[8];
  AF_CHECK(ReadBytes(is, b, 8), "truncated read: ", what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

inline uint16_t ReadU16Le(std::istream& is, const std::string& what) {
  unsigned char b[2];
  AF_CHECK(ReadBytes(is, b, 2), "truncated read: ", what);
  return static_cast<uint16_t>(b[0] | (static_cast<uint16_t>(b[1]) << 8));
}

inline float ReadF32Le(std::istream& is, const std::string& what) {
  uint32_t u = ReadU32Le(is, what);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

inline double ReadF64Le(std::istream& is, const std::string& what) {
  uint64_t u = ReadU64Le(is, what);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace augforge

#endif  // AUGFORGE_COMMON_HPP_
