/**
 * Copyright 2026 The hthc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hthc/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <string_view>

#include "hthc/errors.hpp"

namespace hthc {

static_assert(std::endian::native == std::endian::little,
              "binary I/O assumes a little-endian host");

template <typename Real>
DataMatrix<Real>::DataMatrix(std::size_t rows, std::size_t cols,
                             std::vector<Real> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows_ == 0 || cols_ == 0)
    throw ConfigError("matrix must have at least one row and one column");
  if (values_.size() != rows_ * cols_)
    throw ConfigError("matrix payload has " + std::to_string(values_.size()) +
                      " entries, expected " + std::to_string(rows_ * cols_));
  for (Real x : values_)
    if (!std::isfinite(x)) throw ConfigError("matrix entries must be finite");
  auto norms = recompute_sq_norms();
  col_sq_norms_.assign(norms.begin(), norms.end());
}

template <typename Real>
std::vector<double> DataMatrix<Real>::recompute_sq_norms() const {
  std::vector<double> out(cols_, 0.0);
  for (std::size_t i = 0; i < cols_; ++i) {
    double s = 0;
    for (Real x : column(i)) s += double(x) * double(x);
    out[i] = s;
  }
  return out;
}

template <typename Real>
std::vector<double> DataMatrix<Real>::multiply(
    std::span<const Real> alpha) const {
  std::vector<double> out(rows_, 0.0);
  for (std::size_t i = 0; i < cols_; ++i) {
    const double a = alpha[i];
    if (a == 0) continue;
    auto col = column(i);
    for (std::size_t r = 0; r < rows_; ++r) out[r] += a * double(col[r]);
  }
  return out;
}

template <typename Real>
std::vector<double> DataMatrix<Real>::multiply_transposed(
    std::span<const Real> x) const {
  std::vector<double> out(cols_, 0.0);
  for (std::size_t i = 0; i < cols_; ++i) {
    auto col = column(i);
    double s = 0;
    for (std::size_t r = 0; r < rows_; ++r) s += double(col[r]) * double(x[r]);
    out[i] = s;
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_number(std::string_view tok, std::size_t line, const char* what) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, std::string("bad ") + what + " '" +
                               std::string(tok) + "'");
  return value;
}

struct SparseRow {
  double label;
  std::vector<std::pair<std::size_t, double>> entries;
};

}  // namespace

template <typename Real>
Dataset<Real> parse_libsvm(std::istream& in, bool fold) {
  std::vector<SparseRow> rows;
  std::size_t max_index = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    SparseRow row;
    std::size_t pos = 0;
    bool first = true;
    std::size_t last_index = 0;
    while (pos < line.size()) {
      auto end = line.find_first_of(" \t", pos);
      if (end == std::string_view::npos) end = line.size();
      auto tok = line.substr(pos, end - pos);
      pos = line.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = line.size();
      if (tok.empty()) continue;
      if (first) {
        row.label = parse_number(tok, line_no, "label");
        first = false;
        continue;
      }
      auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw ParseError(line_no, "expected idx:val, got '" +
                                      std::string(tok) + "'");
      auto idx_tok = tok.substr(0, colon);
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(idx_tok.data(),
                                     idx_tok.data() + idx_tok.size(), idx);
      if (ec != std::errc() || p != idx_tok.data() + idx_tok.size() || idx == 0)
        throw ParseError(line_no, "bad feature index '" +
                                      std::string(idx_tok) + "'");
      if (idx <= last_index)
        throw ParseError(line_no, "feature indices must be strictly ascending");
      last_index = idx;
      double val = parse_number(tok.substr(colon + 1), line_no, "value");
      row.entries.emplace_back(idx, val);
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(line_no, "no data lines");
  if (max_index == 0) throw ParseError(line_no, "no features present");

  const std::size_t d = max_index;
  const std::size_t n = rows.size();
  std::vector<Real> values(d * n, Real{0});
  std::vector<Real> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<Real>(rows[i].label);
    const double scale = fold ? rows[i].label : 1.0;
    for (auto [idx, val] : rows[i].entries)
      values[i * d + (idx - 1)] = static_cast<Real>(scale * val);
  }
  return {DataMatrix<Real>(d, n, std::move(values)), std::move(labels)};
}

template <typename Real>
Dataset<Real> load_libsvm(const std::filesystem::path& path, bool fold) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_libsvm<Real>(in, fold);
}

template <typename Real>
DataMatrix<Real> fold_labels(const DataMatrix<Real>& m,
                             std::span<const Real> labels) {
  if (labels.size() != m.cols())
    throw ConfigError("label count does not match column count");
  std::vector<Real> values(m.values().begin(), m.values().end());
  for (std::size_t i = 0; i < m.cols(); ++i)
    for (std::size_t r = 0; r < m.rows(); ++r)
      values[i * m.rows() + r] *= labels[i];
  return DataMatrix<Real>(m.rows(), m.cols(), std::move(values));
}

template <typename Real>
DataMatrix<Real> transpose(const DataMatrix<Real>& m) {
  const std::size_t d = m.rows(), n = m.cols();
  std::vector<Real> values(d * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r) values[r * n + i] = m.values()[i * d + r];
  return DataMatrix<Real>(n, d, std::move(values));
}

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw FormatError(std::string("truncated header: missing ") + what);
  return value;
}

template <typename Stored, typename Real>
std::vector<Real> read_payload(std::istream& in, std::size_t count) {
  std::vector<Stored> raw(count);
  const auto bytes = static_cast<std::streamsize>(count * sizeof(Stored));
  if (!in.read(reinterpret_cast<char*>(raw.data()), bytes))
    throw FormatError("truncated payload: expected " + std::to_string(count) +
                      " scalars");
  if constexpr (std::is_same_v<Stored, Real>) {
    return raw;
  } else {
    return std::vector<Real>(raw.begin(), raw.end());
  }
}

}  // namespace

template <typename Real>
void write_binary(const DataMatrix<Real>& m, std::ostream& out) {
  out.write("HTHC", 4);
  put<std::uint8_t>(out, kBinaryVersion);
  put<std::uint64_t>(out, m.rows());
  put<std::uint64_t>(out, m.cols());
  put<std::uint8_t>(out, static_cast<std::uint8_t>(scalar_type_of<Real>()));
  out.write(reinterpret_cast<const char*>(m.values().data()),
            static_cast<std::streamsize>(m.values().size_bytes()));
  if (!out) throw std::runtime_error("write failed");
}

template <typename Real>
DataMatrix<Real> read_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "HTHC", 4) != 0)
    throw FormatError("bad magic (expected HTHC)");
  const auto version = get<std::uint8_t>(in, "version");
  if (version != kBinaryVersion)
    throw FormatError("unsupported version " + std::to_string(version));
  const auto d = get<std::uint64_t>(in, "d");
  const auto n = get<std::uint64_t>(in, "n");
  const auto tag = get<std::uint8_t>(in, "dtype");
  if (d == 0 || n == 0) throw FormatError("empty matrix");
  if (d > (std::uint64_t{1} << 40) / n) throw FormatError("matrix too large");
  std::vector<Real> values;
  switch (static_cast<ScalarType>(tag)) {
    case ScalarType::f32:
      values = read_payload<float, Real>(in, d * n);
      break;
    case ScalarType::f64:
      values = read_payload<double, Real>(in, d * n);
      break;
    default:
      throw FormatError("unknown dtype tag " + std::to_string(tag));
  }
  return DataMatrix<Real>(d, n, std::move(values));
}

template <typename Real>
void save_binary(const DataMatrix<Real>& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_binary(m, out);
}

template <typename Real>
DataMatrix<Real> load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_binary<Real>(in);
}

template <typename Real>
LassoInstance<Real> synth_lasso(std::size_t n, std::size_t d,
                                double support_frac, double noise_sd,
                                std::uint64_t seed) {
  if (n == 0 || d == 0) throw ConfigError("synth_lasso: n and d must be >= 1");
  if (!(support_frac > 0 && support_frac <= 1))
    throw ConfigError("synth_lasso: support fraction must be in (0, 1]");
  if (noise_sd < 0) throw ConfigError("synth_lasso: noise_sd must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Real> values(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col(d);
    double sq = 0;
    do {
      sq = 0;
      for (auto& x : col) {
        x = normal(rng);
        sq += x * x;
      }
    } while (sq == 0);
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t r = 0; r < d; ++r)
      values[i * d + r] = static_cast<Real>(col[r] * inv);
  }
  DataMatrix<Real> matrix(d, n, std::move(values));

  const auto support = static_cast<std::size_t>(
      std::ceil(support_frac * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> magnitude(0.5, 1.5);
  std::bernoulli_distribution sign;
  std::vector<Real> alpha_true(n, Real{0});
  for (std::size_t k = 0; k < std::max<std::size_t>(support, 1); ++k)
    alpha_true[order[k]] =
        static_cast<Real>(sign(rng) ? magnitude(rng) : -magnitude(rng));

  auto clean = matrix.multiply(alpha_true);
  std::vector<Real> targets(d);
  for (std::size_t r = 0; r < d; ++r)
    targets[r] = static_cast<Real>(clean[r] +
                                   (noise_sd > 0 ? noise_sd * normal(rng) : 0.0));
  return {std::move(matrix), std::move(targets), std::move(alpha_true)};
}

template <typename Real>
Dataset<Real> synth_svm(std::size_t n, std::size_t d, double separation,
                        std::uint64_t seed) {
  if (n == 0 || d == 0) throw ConfigError("synth_svm: n and d must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin;

  std::vector<double> mean(d);
  double sq = 0;
  for (auto& x : mean) {
    x = normal(rng);
    sq += x * x;
  }
  for (auto& x : mean) x *= separation / std::sqrt(sq);

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Real> values(n * d);
  std::vector<Real> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = coin(rng) ? 1.0 : -1.0;
    labels[i] = static_cast<Real>(y);
    for (std::size_t r = 0; r < d; ++r) {
      const double x = y * mean[r] + normal(rng) * scale;
      values[i * d + r] = static_cast<Real>(y * x);
    }
  }
  return {DataMatrix<Real>(d, n, std::move(values)), std::move(labels)};
}

#define HTHC_INSTANTIATE(Real)                                                 \
  template class DataMatrix<Real>;                                             \
  template Dataset<Real> parse_libsvm<Real>(std::istream&, bool);              \
  template Dataset<Real> load_libsvm<Real>(const std::filesystem::path&, bool); \
  template DataMatrix<Real> fold_labels<Real>(const DataMatrix<Real>&,         \
                                              std::span<const Real>);          \
  template DataMatrix<Real> transpose<Real>(const DataMatrix<Real>&);          \
  template void write_binary<Real>(const DataMatrix<Real>&, std::ostream&);    \
  template DataMatrix<Real> read_binary<Real>(std::istream&);                  \
  template void save_binary<Real>(const DataMatrix<Real>&,                     \
                                  const std::filesystem::path&);               \
  template DataMatrix<Real> load_binary<Real>(const std::filesystem::path&);   \
  template LassoInstance<Real> synth_lasso<Real>(std::size_t, std::size_t,     \
                                                 double, double, std::uint64_t); \
  template Dataset<Real> synth_svm<Real>(std::size_t, std::size_t, double,     \
                                         std::uint64_t);

HTHC_INSTANTIATE(float)
HTHC_INSTANTIATE(double)
#undef HTHC_INSTANTIATE

}  // namespace hthc
