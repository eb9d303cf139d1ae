#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace wvsc {

// Binary LDPC code from a sparse parity-check matrix. Encoding uses a
// systematic form found by GF(2) elimination: info bits sit verbatim at
// `info_positions`, the remaining (pivot) bits are parities.
class LdpcCode {
 public:
  // rows[i] lists the column indices set in check i.
  LdpcCode(int n, std::vector<std::vector<int>> rows);

  int n() const { return n_; }
  int m() const { return static_cast<int>(rows_.size()); }
  int k() const { return static_cast<int>(info_positions_.size()); }
  int rank() const { return n_ - k(); }
  double design_rate() const;
  double rate() const { return static_cast<double>(k()) / n_; }

  const std::vector<std::vector<int>>& rows() const { return rows_; }
  const std::vector<std::vector<int>>& columns() const { return cols_; }
  const std::vector<int>& info_positions() const { return info_positions_; }

  // H c^T over GF(2); true iff every check is satisfied.
  bool is_codeword(std::span<const uint8_t> bits) const;

  std::vector<uint8_t> encode(std::span<const uint8_t> info) const;

 private:
  int n_;
  std::vector<std::vector<int>> rows_;
  std::vector<std::vector<int>> cols_;
  std::vector<int> info_positions_;
  // For each pivot: the parity position and, packed, its dependence on the
  // info bits (bit j set => info bit j contributes).
  std::vector<int> parity_positions_;
  std::vector<std::vector<uint64_t>> parity_rules_;
};

std::vector<uint8_t> ldpc_encode(std::span<const uint8_t> info, const LdpcCode& code);

struct LdpcDecodeResult {
  std::vector<uint8_t> bits;  // full codeword estimate
  bool converged = false;
  int iterations = 0;
};

inline constexpr double kMinSumScale = 0.75;
inline constexpr int kDefaultLdpcIterations = 50;

// Normalized min-sum. Positive LLR means bit 0. A zero posterior counts as
// undecided, so convergence needs every posterior nonzero and a zero syndrome.
LdpcDecodeResult ldpc_decode(std::span<const double> llrs, const LdpcCode& code,
                             int max_iters = kDefaultLdpcIterations);

// MacKay alist format.
LdpcCode read_alist(const std::filesystem::path& path);
LdpcCode parse_alist(const std::string& text);
std::string to_alist(const LdpcCode& code);
void write_alist(const LdpcCode& code, const std::filesystem::path& path);

// Random (dv, dc)-regular code without repeated edges; n*dv must be a
// multiple of dc.
LdpcCode make_regular_code(int n, int dv, int dc, uint64_t seed);

// The (7,4) Hamming code checked by all seven weight-4 dual codewords. The
// first three rows are [P | I3]; the other four are redundant (rank stays 3)
// but break the short cycles on which min-sum miscorrects a flipped bit 3.
LdpcCode hamming74();

}  // namespace wvsc
