#include "wvsc/baseline/ldpc.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "wvsc/errors.h"

namespace wvsc {

namespace {

using Row = std::vector<uint64_t>;

inline bool get_bit(const Row& r, int j) { return (r[static_cast<size_t>(j) >> 6] >> (j & 63)) & 1U; }
inline void set_bit(Row& r, int j) { r[static_cast<size_t>(j) >> 6] |= uint64_t{1} << (j & 63); }

}  // namespace

LdpcCode::LdpcCode(int n, std::vector<std::vector<int>> rows) : n_(n), rows_(std::move(rows)) {
  if (n_ < 1 || rows_.empty()) throw CodeError("LDPC parity-check matrix is empty");
  cols_.assign(static_cast<size_t>(n_), {});
  bool any = false;
  for (size_t i = 0; i < rows_.size(); ++i) {
    auto& r = rows_[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    for (int j : r) {
      if (j < 0 || j >= n_) throw CodeError("LDPC column index out of range");
      cols_[static_cast<size_t>(j)].push_back(static_cast<int>(i));
      any = true;
    }
  }
  if (!any) throw CodeError("LDPC parity-check matrix has no ones");

  // Reduced row echelon form, picking pivots from the last column backwards so
  // that an [A | I] matrix keeps its natural systematic layout.
  const size_t words = (static_cast<size_t>(n_) + 63) / 64;
  std::vector<Row> h(rows_.size(), Row(words, 0));
  for (size_t i = 0; i < rows_.size(); ++i) {
    for (int j : rows_[i]) set_bit(h[i], j);
  }
  std::vector<int> pivot_cols;
  size_t next_row = 0;
  for (int col = n_ - 1; col >= 0 && next_row < h.size(); --col) {
    size_t sel = next_row;
    while (sel < h.size() && !get_bit(h[sel], col)) ++sel;
    if (sel == h.size()) continue;
    std::swap(h[sel], h[next_row]);
    for (size_t i = 0; i < h.size(); ++i) {
      if (i != next_row && get_bit(h[i], col)) {
        for (size_t w = 0; w < words; ++w) h[i][w] ^= h[next_row][w];
      }
    }
    pivot_cols.push_back(col);
    ++next_row;
  }
  std::vector<char> is_pivot(static_cast<size_t>(n_), 0);
  for (int c : pivot_cols) is_pivot[static_cast<size_t>(c)] = 1;
  for (int j = 0; j < n_; ++j) {
    if (!is_pivot[static_cast<size_t>(j)]) info_positions_.push_back(j);
  }
  if (info_positions_.empty()) throw CodeError("LDPC matrix has full column rank; no info bits");

  const size_t info_words = (info_positions_.size() + 63) / 64;
  for (size_t p = 0; p < pivot_cols.size(); ++p) {
    Row rule(info_words, 0);
    for (size_t t = 0; t < info_positions_.size(); ++t) {
      if (get_bit(h[p], info_positions_[t])) set_bit(rule, static_cast<int>(t));
    }
    parity_positions_.push_back(pivot_cols[p]);
    parity_rules_.push_back(std::move(rule));
  }
}

double LdpcCode::design_rate() const { return 1.0 - static_cast<double>(m()) / n_; }

bool LdpcCode::is_codeword(std::span<const uint8_t> bits) const {
  if (bits.size() != static_cast<size_t>(n_)) return false;
  for (const auto& r : rows_) {
    int parity = 0;
    for (int j : r) parity ^= bits[static_cast<size_t>(j)] & 1;
    if (parity) return false;
  }
  return true;
}

std::vector<uint8_t> LdpcCode::encode(std::span<const uint8_t> info) const {
  if (info.size() != info_positions_.size()) {
    throw InputError("LDPC encode needs " + std::to_string(k()) + " info bits, got " +
                     std::to_string(info.size()));
  }
  std::vector<uint8_t> c(static_cast<size_t>(n_), 0);
  Row packed((info.size() + 63) / 64, 0);
  for (size_t t = 0; t < info.size(); ++t) {
    const uint8_t b = info[t] & 1;
    c[static_cast<size_t>(info_positions_[t])] = b;
    if (b) set_bit(packed, static_cast<int>(t));
  }
  for (size_t p = 0; p < parity_positions_.size(); ++p) {
    uint64_t acc = 0;
    const Row& rule = parity_rules_[p];
    for (size_t w = 0; w < rule.size(); ++w) acc ^= rule[w] & packed[w];
    c[static_cast<size_t>(parity_positions_[p])] = static_cast<uint8_t>(std::popcount(acc) & 1);
  }
  return c;
}

std::vector<uint8_t> ldpc_encode(std::span<const uint8_t> info, const LdpcCode& code) {
  return code.encode(info);
}

LdpcDecodeResult ldpc_decode(std::span<const double> llrs, const LdpcCode& code, int max_iters) {
  const size_t n = static_cast<size_t>(code.n());
  if (llrs.size() != n) {
    throw InputError("LDPC decode needs " + std::to_string(n) + " LLRs, got " +
                     std::to_string(llrs.size()));
  }
  // Edge e belongs to check row `edge_check[e]` and variable `edge_var[e]`.
  std::vector<int> edge_var;
  std::vector<size_t> row_start{0};
  for (const auto& r : code.rows()) {
    edge_var.insert(edge_var.end(), r.begin(), r.end());
    row_start.push_back(edge_var.size());
  }
  const size_t edges = edge_var.size();
  std::vector<double> v2c(edges), c2v(edges, 0.0), posterior(llrs.begin(), llrs.end());
  for (size_t e = 0; e < edges; ++e) v2c[e] = llrs[static_cast<size_t>(edge_var[e])];

  LdpcDecodeResult out;
  out.bits.assign(n, 0);
  const auto decide = [&]() {
    bool decided = true;
    for (size_t j = 0; j < n; ++j) {
      if (posterior[j] == 0.0) decided = false;
      out.bits[j] = posterior[j] < 0.0 ? 1 : 0;
    }
    return decided && code.is_codeword(out.bits);
  };
  if (decide()) {
    out.converged = true;
    return out;
  }
  for (int it = 1; it <= max_iters; ++it) {
    for (size_t r = 0; r + 1 < row_start.size(); ++r) {
      double min1 = INFINITY, min2 = INFINITY;
      size_t arg = row_start[r];
      bool negative = false;
      for (size_t e = row_start[r]; e < row_start[r + 1]; ++e) {
        const double a = std::fabs(v2c[e]);
        if (v2c[e] < 0.0) negative = !negative;
        if (a < min1) {
          min2 = min1;
          min1 = a;
          arg = e;
        } else if (a < min2) {
          min2 = a;
        }
      }
      for (size_t e = row_start[r]; e < row_start[r + 1]; ++e) {
        const double mag = kMinSumScale * (e == arg ? min2 : min1);
        const bool neg = negative != (v2c[e] < 0.0);
        c2v[e] = neg ? -mag : mag;
      }
    }
    std::copy(llrs.begin(), llrs.end(), posterior.begin());
    for (size_t e = 0; e < edges; ++e) posterior[static_cast<size_t>(edge_var[e])] += c2v[e];
    for (size_t e = 0; e < edges; ++e) {
      v2c[e] = posterior[static_cast<size_t>(edge_var[e])] - c2v[e];
    }
    out.iterations = it;
    if (decide()) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

LdpcCode parse_alist(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<int>> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<int> nums;
    int v;
    while (ls >> v) nums.push_back(v);
    if (!ls.eof()) throw CodeError("alist: non-numeric token in line '" + line + "'");
    if (!nums.empty()) lines.push_back(std::move(nums));
  }
  if (lines.size() < 4 || lines[0].size() != 2 || lines[1].size() != 2) {
    throw CodeError("alist: malformed header");
  }
  const int n = lines[0][0], m = lines[0][1];
  if (n < 1 || m < 1) throw CodeError("alist: non-positive dimensions");
  const auto& col_w = lines[2];
  const auto& row_w = lines[3];
  if (static_cast<int>(col_w.size()) != n || static_cast<int>(row_w.size()) != m) {
    throw CodeError("alist: weight lists do not match n and m");
  }
  if (static_cast<int>(lines.size()) != 4 + n + m) {
    throw CodeError("alist: expected " + std::to_string(n + m) + " index lines, found " +
                    std::to_string(lines.size() - 4));
  }
  std::vector<std::vector<int>> rows(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto& l = lines[static_cast<size_t>(4 + n + i)];
    for (int v : l) {
      if (v == 0) continue;
      if (v < 1 || v > n) throw CodeError("alist: column index out of range");
      rows[static_cast<size_t>(i)].push_back(v - 1);
    }
    if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != row_w[static_cast<size_t>(i)]) {
      throw CodeError("alist: row " + std::to_string(i + 1) + " weight mismatch");
    }
  }
  // Column lists must describe the same matrix.
  std::vector<std::vector<int>> cols(static_cast<size_t>(n));
  for (int i = 0; i < m; ++i) {
    for (int j : rows[static_cast<size_t>(i)]) cols[static_cast<size_t>(j)].push_back(i);
  }
  for (int j = 0; j < n; ++j) {
    std::vector<int> listed;
    for (int v : lines[static_cast<size_t>(4 + j)]) {
      if (v != 0) listed.push_back(v - 1);
    }
    std::sort(listed.begin(), listed.end());
    if (listed != cols[static_cast<size_t>(j)] ||
        static_cast<int>(listed.size()) != col_w[static_cast<size_t>(j)]) {
      throw CodeError("alist: column " + std::to_string(j + 1) + " disagrees with the row lists");
    }
  }
  return LdpcCode(n, std::move(rows));
}

LdpcCode read_alist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open alist file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_alist(ss.str());
}

std::string to_alist(const LdpcCode& code) {
  std::ostringstream os;
  size_t max_col = 0, max_row = 0;
  for (const auto& c : code.columns()) max_col = std::max(max_col, c.size());
  for (const auto& r : code.rows()) max_row = std::max(max_row, r.size());
  os << code.n() << ' ' << code.m() << '\n' << max_col << ' ' << max_row << '\n';
  const auto weights = [&](const std::vector<std::vector<int>>& lists) {
    for (size_t i = 0; i < lists.size(); ++i) os << (i ? " " : "") << lists[i].size();
    os << '\n';
  };
  weights(code.columns());
  weights(code.rows());
  const auto entries = [&](const std::vector<std::vector<int>>& lists, size_t width) {
    for (const auto& l : lists) {
      for (size_t i = 0; i < width; ++i) {
        os << (i ? " " : "") << (i < l.size() ? l[i] + 1 : 0);
      }
      os << '\n';
    }
  };
  entries(code.columns(), max_col);
  entries(code.rows(), max_row);
  return os.str();
}

void write_alist(const LdpcCode& code, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write alist file " + path.string());
  out << to_alist(code);
  if (!out) throw IoError("short write to alist file " + path.string());
}

LdpcCode make_regular_code(int n, int dv, int dc, uint64_t seed) {
  if (n < 1 || dv < 1 || dc < 2 || (static_cast<long>(n) * dv) % dc != 0 || n < dc) {
    throw ConfigError("regular LDPC construction needs n*dv divisible by dc, dv >= 1, dc >= 2");
  }
  // Socket permutation: variable v owns sockets v*dv .. v*dv+dv-1; check i
  // takes permuted sockets i*dc .. i*dc+dc-1. Repeated (check, variable)
  // pairs are removed by swapping with random sockets.
  const size_t edges = static_cast<size_t>(n) * dv;
  const size_t m = edges / static_cast<size_t>(dc);
  std::mt19937_64 rng(seed);
  std::vector<int> var_of(edges);
  for (size_t e = 0; e < edges; ++e) var_of[e] = static_cast<int>(e / static_cast<size_t>(dv));
  for (size_t i = edges; i > 1; --i) std::swap(var_of[i - 1], var_of[rng() % i]);

  const auto has_repeat = [&](size_t check) {
    const size_t base = check * static_cast<size_t>(dc);
    for (size_t a = 0; a < static_cast<size_t>(dc); ++a) {
      for (size_t b = a + 1; b < static_cast<size_t>(dc); ++b) {
        if (var_of[base + a] == var_of[base + b]) return base + b;
      }
    }
    return edges;
  };
  for (int pass = 0; pass < 1000; ++pass) {
    bool clean = true;
    for (size_t i = 0; i < m; ++i) {
      for (size_t e = has_repeat(i); e != edges; e = has_repeat(i)) {
        clean = false;
        std::swap(var_of[e], var_of[rng() % edges]);
      }
    }
    if (clean) break;
    if (pass == 999) throw CodeError("could not remove repeated edges from the regular code");
  }
  std::vector<std::vector<int>> rows(m);
  for (size_t i = 0; i < m; ++i) {
    rows[i].assign(var_of.begin() + static_cast<long>(i) * dc,
                   var_of.begin() + static_cast<long>(i + 1) * dc);
  }
  return LdpcCode(n, std::move(rows));
}

LdpcCode hamming74() {
  return LdpcCode(7, {{0, 1, 3, 4},
                      {0, 2, 3, 5},
                      {1, 2, 3, 6},
                      {0, 1, 5, 6},
                      {0, 2, 4, 6},
                      {1, 2, 4, 5},
                      {3, 4, 5, 6}});
}

}  // namespace wvsc
