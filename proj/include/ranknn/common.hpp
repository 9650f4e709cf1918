#pragma once
// Shared primitives: object ids, error types, deterministic RNG helpers,
// integer log utilities and little-endian binary I/O used by the index
// file formats.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ranknn {

using ObjectId = std::uint32_t;

// Sentinel for "the registered external query point" in oracle calls.
inline constexpr ObjectId kQueryPoint = 0xFFFFFFFFu;

// ---------------------------------------------------------------------------
// Error kinds
// ---------------------------------------------------------------------------

// Misuse of an API that requires prior setup (e.g. distance access on a
// concealed session, external query before registration).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

// Raised by the hierarchical build when a candidate set comes up empty.
// Carries the object and level for diagnostics; retry with a new seed.
class BuildFailure : public std::runtime_error {
 public:
  BuildFailure(ObjectId object, std::uint32_t level)
      : std::runtime_error("empty candidate set for object " +
                           std::to_string(object) + " at level " +
                           std::to_string(level)),
        object(object),
        level(level) {}
  ObjectId object;
  std::uint32_t level;
};

// Raised by hierarchical search when the descent loses all candidates.
// Distinct from returning a wrong answer.
class SearchFailure : public std::runtime_error {
 public:
  explicit SearchFailure(std::uint32_t level)
      : std::runtime_error("empty candidate set during search at level " +
                           std::to_string(level)),
        level(level) {}
  std::uint32_t level;
};

// Raised when a hashing parameterization is not realizable (p <= P).
class ParameterizationError : public std::runtime_error {
 public:
  explicit ParameterizationError(const std::string& what)
      : std::runtime_error(what) {}
};

// Malformed or truncated index/dataset files.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Deterministic randomness
// ---------------------------------------------------------------------------
//
// std::mt19937_64 has a standardized sequence, but the standard
// distributions do not; all draws below are implemented explicitly so that
// a (seed, arguments) pair yields identical results on every platform.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed, used to give sub-tasks (levels,
// tree nodes, cuts) their own deterministic schedules.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x517CC1B727220A95ull));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform integer in [0, n) by rejection; exact and portable.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("bounded(0)");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

// m distinct ids drawn uniformly from {0,..,n-1} via partial Fisher-Yates.
// Order of the result is the draw order (deterministic for a fixed seed).
inline std::vector<ObjectId> sample_without_replacement(std::uint64_t n,
                                                        std::uint64_t m,
                                                        Rng& rng) {
  if (m > n) throw std::invalid_argument("sample size exceeds population");
  std::vector<ObjectId> pool(n);
  for (std::uint64_t i = 0; i < n; ++i) pool[i] = static_cast<ObjectId>(i);
  std::vector<ObjectId> out(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    const std::uint64_t j = i + rng.bounded(n - i);
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integer log helpers (exact, no floating point)
// ---------------------------------------------------------------------------

// ceil(log2(i)) for i >= 1; equals bit_width(i-1).
inline std::uint32_t ceil_log2(std::uint64_t i) {
  if (i == 0) throw std::invalid_argument("ceil_log2(0)");
  std::uint32_t w = 0;
  for (std::uint64_t v = i - 1; v > 0; v >>= 1) ++w;
  return w;
}

// sum_{i=2}^{m} ceil(log2 i): the binary-insertion question bound.
inline std::uint64_t insertion_question_bound(std::uint64_t m) {
  std::uint64_t s = 0;
  for (std::uint64_t i = 2; i <= m; ++i) s += ceil_log2(i);
  return s;
}

// ---------------------------------------------------------------------------
// Little-endian binary I/O
// ---------------------------------------------------------------------------

class BinWriter {
 public:
  explicit BinWriter(std::ostream& os) : os_(os) {}

  void magic(const char (&m)[5]) { os_.write(m, 4); }
  void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os_.write(b, 4);
  }
  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os_.write(b, 8);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void bytes(const std::string& s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }

 private:
  std::ostream& os_;
};

class BinReader {
 public:
  explicit BinReader(std::istream& is) : is_(is) {}

  void expect_magic(const char (&m)[5]) {
    char got[4];
    is_.read(got, 4);
    if (!is_ || std::memcmp(got, m, 4) != 0)
      throw IoError(std::string("bad magic, expected ") + m);
  }
  std::uint8_t u8() {
    const int c = is_.get();
    if (c < 0) throw IoError("truncated file");
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    char b[4];
    is_.read(b, 4);
    if (!is_) throw IoError("truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    char b[8];
    is_.read(b, 8);
    if (!is_) throw IoError("truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(std::size_t count) {
    std::string s(count, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(count));
    if (!is_) throw IoError("truncated file");
    return s;
  }

 private:
  std::istream& is_;
};

}  // namespace ranknn
