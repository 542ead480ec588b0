#pragma once

// JSON serialization for pencils and results, a SHA-256 digest for input
// provenance, and the run manifest every CLI output embeds.

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polspec/core.hpp"

namespace polspec {

using ordered_json = nlohmann::ordered_json;

namespace detail {

class Sha256 {
 public:
  Sha256() { reset(); }

  void reset() {
    h_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
          0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    len_ = 0;
    buf_.clear();
  }

  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
    len_ += n;
    std::size_t off = 0;
    while (buf_.size() - off >= 64) {
      process(buf_.data() + off);
      off += 64;
    }
    buf_.erase(buf_.begin(), buf_.begin() + off);
  }

  std::string hex_digest() {
    std::vector<std::uint8_t> tail(buf_);
    std::uint64_t bits = len_ * 8;
    tail.push_back(0x80);
    while (tail.size() % 64 != 56) tail.push_back(0);
    for (int i = 7; i >= 0; --i) tail.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    auto h = h_;
    for (std::size_t off = 0; off < tail.size(); off += 64) process_into(tail.data() + off, h);
    static const char* hexd = "0123456789abcdef";
    std::string out;
    for (std::uint32_t w : h)
      for (int i = 28; i >= 0; i -= 4) out.push_back(hexd[(w >> i) & 0xf]);
    return out;
  }

 private:
  static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  void process(const std::uint8_t* block) { process_into(block, h_); }

  static void process_into(const std::uint8_t* block, std::array<std::uint32_t, 8>& h) {
    static const std::uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
        0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
        0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
        0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
        0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
        0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
        0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
        0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
        0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
        0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(block[4 * i]) << 24) | (std::uint32_t(block[4 * i + 1]) << 16) |
             (std::uint32_t(block[4 * i + 2]) << 8) | std::uint32_t(block[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    auto a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
    for (int i = 0; i < 64; ++i) {
      std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      std::uint32_t ch = (e & f) ^ (~e & g);
      std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
      std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      std::uint32_t mj = (a & b) ^ (a & c) ^ (b & c);
      std::uint32_t t2 = s0 + mj;
      hh = g; g = f; f = e; e = d + t1; d = c; c = b; b = a; a = t1 + t2;
    }
    h[0] += a; h[1] += b; h[2] += c; h[3] += d;
    h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
  }

  std::array<std::uint32_t, 8> h_;
  std::uint64_t len_ = 0;
  std::vector<std::uint8_t> buf_;
};

}  // namespace detail

inline std::string sha256_hex(const std::string& data) {
  detail::Sha256 s;
  s.update(data.data(), data.size());
  return s.hex_digest();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ordered_json pencil_to_json(const MatrixPolynomial& p) {
  ordered_json j;
  j["size"] = p.size();
  j["degree"] = p.degree();
  ordered_json coeffs = ordered_json::array();
  for (int t = 0; t <= p.degree(); ++t) {
    ordered_json mat = ordered_json::array();
    for (int r = 0; r < p.size(); ++r)
      for (int c = 0; c < p.size(); ++c) {
        const cd v = p.coeff(t)(r, c);
        mat.push_back(ordered_json::array({v.real(), v.imag()}));
      }
    coeffs.push_back(mat);
  }
  j["coeffs"] = coeffs;
  return j;
}

inline MatrixPolynomial pencil_from_json(const ordered_json& j) {
  if (!j.contains("size") || !j.contains("degree") || !j.contains("coeffs"))
    throw ValidationError("pencil json needs size, degree, coeffs");
  int m = j.at("size").get<int>();
  int n = j.at("degree").get<int>();
  if (m <= 0 || n < 0) throw ValidationError("pencil json: size must be positive, degree nonnegative");
  const auto& coeffs = j.at("coeffs");
  if (static_cast<int>(coeffs.size()) != n + 1)
    throw ValidationError("pencil json: coeff count must be degree+1");
  std::vector<Mat> a;
  for (const auto& mat : coeffs) {
    if (static_cast<int>(mat.size()) != m * m)
      throw ValidationError("pencil json: coefficient entry count mismatch");
    Mat c(m, m);
    int idx = 0;
    for (int r = 0; r < m; ++r)
      for (int cidx = 0; cidx < m; ++cidx, ++idx) {
        const auto& e = mat.at(idx);
        if (!e.is_array() || e.size() != 2)
          throw ValidationError("pencil json: entries are [re, im] pairs");
        double re = e.at(0).get<double>();
        double im = e.at(1).get<double>();
        if (!std::isfinite(re) || !std::isfinite(im))
          throw ValidationError("pencil json: entry is not finite");
        c(r, cidx) = cd(re, im);
      }
    a.push_back(std::move(c));
  }
  return MatrixPolynomial(std::move(a));
}

inline ordered_json complex_to_json(cd v) { return ordered_json::array({v.real(), v.imag()}); }

inline ordered_json vector_to_json(const Vec& v) {
  ordered_json out = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline ordered_json matrix_to_json(const Mat& m) {
  ordered_json out = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out.push_back(complex_to_json(m(r, c)));
  return out;
}

constexpr const char* kToolkitVersion = "1.0.0";

struct RunManifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> input_digests;  // (path, sha256)
  ordered_json tolerance_overrides = ordered_json::object();
  std::uint64_t seed = 0;

  ordered_json to_json() const {
    ordered_json j;
    j["subcommand"] = subcommand;
    ordered_json digests = ordered_json::object();
    for (const auto& [path, digest] : input_digests) digests[path] = digest;
    j["inputs"] = digests;
    j["tolerance_overrides"] = tolerance_overrides;
    j["seed"] = seed;
    j["versions"] = {{"toolkit", kToolkitVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    return j;
  }
};

}  // namespace polspec
