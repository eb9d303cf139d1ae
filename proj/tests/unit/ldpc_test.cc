#include <gtest/gtest.h>

#include <random>

#include "wvsc/baseline/ldpc.h"
#include "wvsc/errors.h"

namespace wvsc {
namespace {

std::vector<uint8_t> bits_of(unsigned value, int count) {
  std::vector<uint8_t> b(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) b[static_cast<size_t>(i)] = (value >> (count - 1 - i)) & 1u;
  return b;
}

std::vector<double> llrs_for(const std::vector<uint8_t>& bits, double magnitude) {
  std::vector<double> l(bits.size());
  for (size_t i = 0; i < bits.size(); ++i) l[i] = bits[i] ? -magnitude : magnitude;
  return l;
}

// Maximum-likelihood decision by enumerating every codeword.
std::vector<uint8_t> ml_decode(const std::vector<double>& llrs, const LdpcCode& code) {
  std::vector<uint8_t> best;
  double best_metric = -1e300;
  for (unsigned u = 0; u < (1u << code.k()); ++u) {
    const auto c = code.encode(bits_of(u, code.k()));
    double metric = 0.0;
    for (size_t i = 0; i < c.size(); ++i) metric += c[i] ? -llrs[i] : llrs[i];
    if (metric > best_metric) {
      best_metric = metric;
      best = c;
    }
  }
  return best;
}

TEST(Hamming74, Structure) {
  const LdpcCode code = hamming74();
  EXPECT_EQ(code.n(), 7);
  EXPECT_EQ(code.k(), 4);
  EXPECT_EQ(code.rows().size(), 7u);
  EXPECT_EQ(code.info_positions(), (std::vector<int>{0, 1, 2, 3}));
  const auto c = code.encode(bits_of(0b1011, 4));
  EXPECT_TRUE(code.is_codeword(c));
  EXPECT_EQ(std::vector<uint8_t>(c.begin(), c.begin() + 4), bits_of(0b1011, 4));
  // Every codeword has weight 0 or at least 3.
  for (unsigned u = 1; u < 16; ++u) {
    int w = 0;
    for (auto b : code.encode(bits_of(u, 4))) w += b;
    EXPECT_GE(w, 3);
  }
}

TEST(Hamming74, SingleErrorsAgreeWithMlOracle) {
  const LdpcCode code = hamming74();
  for (unsigned u = 0; u < 16; ++u) {
    const auto sent = code.encode(bits_of(u, 4));
    for (size_t e = 0; e < sent.size(); ++e) {
      auto received = sent;
      received[e] ^= 1;
      const auto llrs = llrs_for(received, 2.0);
      const auto ml = ml_decode(llrs, code);
      ASSERT_EQ(ml, sent);
      const auto dec = ldpc_decode(llrs, code);
      EXPECT_TRUE(dec.converged) << "info " << u << " error at " << e;
      EXPECT_EQ(dec.bits, ml) << "info " << u << " error at " << e;
    }
  }
}

TEST(Hamming74, CleanInputConvergesImmediately) {
  const LdpcCode code = hamming74();
  const auto sent = code.encode(bits_of(0b0110, 4));
  const auto dec = ldpc_decode(llrs_for(sent, 5.0), code);
  EXPECT_TRUE(dec.converged);
  EXPECT_EQ(dec.iterations, 0);
  EXPECT_EQ(dec.bits, sent);
}

TEST(Ldpc, AllZeroLlrsNeverConverge) {
  const LdpcCode code = hamming74();
  const auto dec = ldpc_decode(std::vector<double>(7, 0.0), code, 10);
  EXPECT_FALSE(dec.converged);
  EXPECT_EQ(dec.iterations, 10);
}

TEST(Ldpc, RegularCodeEncodesValidCodewords) {
  const LdpcCode code = make_regular_code(96, 3, 6, 5);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    std::vector<uint8_t> info(static_cast<size_t>(code.k()));
    for (auto& b : info) b = rng() & 1u;
    const auto c = ldpc_encode(info, code);
    ASSERT_TRUE(code.is_codeword(c));
    for (int j = 0; j < code.k(); ++j) {
      ASSERT_EQ(c[static_cast<size_t>(code.info_positions()[static_cast<size_t>(j)])],
                info[static_cast<size_t>(j)]);
    }
  }
}

TEST(Ldpc, HalfRate4096RoundTrip) {
  const LdpcCode code = make_regular_code(4096, 3, 6, 1);
  EXPECT_EQ(code.k(), 2048);
  EXPECT_DOUBLE_EQ(code.design_rate(), 0.5);
  for (const auto& col : code.columns()) EXPECT_EQ(col.size(), 3u);
  for (const auto& row : code.rows()) EXPECT_EQ(row.size(), 6u);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 3; ++t) {
    std::vector<uint8_t> info(2048);
    for (auto& b : info) b = rng() & 1u;
    const auto c = code.encode(info);
    const auto dec = ldpc_decode(llrs_for(c, 30.0), code);
    EXPECT_TRUE(dec.converged);
    EXPECT_EQ(dec.bits, c);
  }
}

TEST(Ldpc, CorrectsNoisyHalfRateBlock) {
  const LdpcCode code = make_regular_code(4096, 3, 6, 1);
  std::mt19937_64 rng(3);
  std::vector<uint8_t> info(2048);
  for (auto& b : info) b = rng() & 1u;
  const auto c = code.encode(info);
  // BPSK over AWGN at Eb/N0 well above the (3,6) threshold.
  const double sigma = 0.7;
  std::normal_distribution<double> nd(0.0, sigma);
  std::vector<double> llrs(c.size());
  int raw_errors = 0;
  for (size_t i = 0; i < c.size(); ++i) {
    const double y = (c[i] ? -1.0 : 1.0) + nd(rng);
    llrs[i] = 2.0 * y / (sigma * sigma);
    raw_errors += (y < 0) != (c[i] == 1);
  }
  ASSERT_GT(raw_errors, 50);
  const auto dec = ldpc_decode(llrs, code);
  EXPECT_TRUE(dec.converged);
  EXPECT_EQ(dec.bits, c);
}

TEST(Ldpc, AlistRoundTrip) {
  const LdpcCode code = make_regular_code(48, 3, 6, 9);
  const LdpcCode back = parse_alist(to_alist(code));
  EXPECT_EQ(back.n(), code.n());
  EXPECT_EQ(back.rows(), code.rows());
  EXPECT_EQ(back.info_positions(), code.info_positions());
  EXPECT_EQ(to_alist(back), to_alist(code));
  EXPECT_EQ(parse_alist(to_alist(hamming74())).rows(), hamming74().rows());
}

TEST(Ldpc, RejectsBrokenInput) {
  EXPECT_THROW(parse_alist("7 3\n"), CodeError);
  std::string text = to_alist(hamming74());
  text[0] = '8';
  EXPECT_THROW(parse_alist(text), CodeError);
  EXPECT_THROW(LdpcCode(4, {{0, 5}}), CodeError);
  EXPECT_THROW(make_regular_code(10, 3, 7, 1), ConfigError);
  EXPECT_THROW(hamming74().encode(std::vector<uint8_t>(3)), InputError);
  EXPECT_THROW(ldpc_decode(std::vector<double>(6), hamming74()), InputError);
}

TEST(Ldpc, RankDeficientMatrixKeepsExtraInfoBits) {
  // Duplicate check row: rank 3, so k = n - rank = 4 despite four rows.
  const LdpcCode code(7, {{0, 1, 3, 4}, {0, 2, 3, 5}, {1, 2, 3, 6}, {0, 2, 3, 5}});
  EXPECT_EQ(code.k(), 4);
  EXPECT_EQ(code.rank(), 3);
  EXPECT_LT(code.design_rate(), code.rate());
}

}  // namespace
}  // namespace wvsc
