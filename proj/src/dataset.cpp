#include "fiqopt/dataset.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "fiqopt/csv.hpp"

namespace fiqopt {

namespace {

constexpr char kMagic[4] = {'F', 'Q', 'E', 'M'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr char kManifestHeader[] = "sample_id,identity,base_quality,row";
constexpr char kQualityHeader[] = "sample_id,quality";

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  fail(path, "line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, const std::filesystem::path& path,
                    std::size_t line, const char* what) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    fail_line(path, line, std::string("bad ") + what + " value '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::filesystem::path& path,
                        std::size_t line, const char* what) {
  std::uint64_t v = 0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    fail_line(path, line, std::string("bad ") + what + " value '" + s + "'");
  return v;
}

// Little-endian scalar IO, independent of host byte order.
std::uint32_t load_u32le(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint64_t load_u64le(const unsigned char* p) {
  return std::uint64_t(load_u32le(p)) | std::uint64_t(load_u32le(p + 4)) << 32;
}

void store_u32le(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

void store_u64le(unsigned char* p, std::uint64_t v) {
  store_u32le(p, static_cast<std::uint32_t>(v));
  store_u32le(p + 4, static_cast<std::uint32_t>(v >> 32));
}

void read_exact(std::ifstream& in, unsigned char* buf, std::size_t count,
                const std::filesystem::path& path, const char* what) {
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count)
    fail(path, std::string("truncated file while reading ") + what);
}

void require_no_comma(const std::string& field, const char* what) {
  if (field.find(',') != std::string::npos)
    throw std::invalid_argument(std::string(what) + " '" + field +
                                "' contains a comma and cannot be stored in CSV");
}

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

Dataset make_dataset(std::vector<SampleRecord> samples, EmbeddingMatrix embeddings) {
  const std::size_t n = samples.size();
  if (n != embeddings.n)
    throw std::runtime_error("dataset: manifest lists " + std::to_string(n) +
                             " samples but embeddings hold " + std::to_string(embeddings.n) +
                             " rows");
  Dataset ds;
  ds.sample_of_row.assign(n, 0);
  std::vector<char> row_seen(n, 0);
  std::unordered_set<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SampleRecord& s = samples[i];
    if (!ids.insert(s.sample_id).second)
      throw std::runtime_error("dataset: duplicate sample_id '" + s.sample_id + "'");
    if (s.row >= n)
      throw std::runtime_error("dataset: sample '" + s.sample_id + "' references row " +
                               std::to_string(s.row) + " outside 0.." + std::to_string(n - 1));
    if (row_seen[s.row])
      throw std::runtime_error("dataset: row " + std::to_string(s.row) +
                               " referenced by more than one sample");
    row_seen[s.row] = 1;
    ds.sample_of_row[s.row] = i;
  }
  // Rows are unique and in range, so they form a permutation of 0..n-1.
  for (std::size_t i = 0; i < n; ++i)
    ds.identity_index[samples[i].identity].push_back(samples[i].row);
  ds.samples = std::move(samples);
  ds.embeddings = std::move(embeddings);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& embeddings_path) {
  std::ifstream in(manifest_path);
  if (!in) fail(manifest_path, "cannot open");
  std::string line;
  if (!std::getline(in, line)) fail(manifest_path, "empty file");
  strip_cr(line);
  if (line != kManifestHeader)
    fail(manifest_path, std::string("expected header '") + kManifestHeader + "', got '" +
                            line + "'");
  std::vector<SampleRecord> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4)
      fail_line(manifest_path, line_no,
                "expected 4 fields, got " + std::to_string(fields.size()));
    SampleRecord s;
    s.sample_id = fields[0];
    s.identity = fields[1];
    s.base_quality = parse_double(fields[2], manifest_path, line_no, "base_quality");
    s.row = parse_u64(fields[3], manifest_path, line_no, "row");
    samples.push_back(std::move(s));
  }
  EmbeddingMatrix m = read_embeddings(embeddings_path);
  try {
    return make_dataset(std::move(samples), std::move(m));
  } catch (const std::runtime_error& e) {
    fail(manifest_path, e.what());
  }
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  unsigned char header[4 + 4 + 8 + 4];
  read_exact(in, header, sizeof(header), path, "header");
  if (std::memcmp(header, kMagic, 4) != 0) fail(path, "bad magic, not an embedding file");
  const std::uint32_t version = load_u32le(header + 4);
  if (version != kFormatVersion)
    fail(path, "unsupported format version " + std::to_string(version));
  const std::uint64_t n = load_u64le(header + 8);
  const std::uint32_t d = load_u32le(header + 16);
  if (d == 0) fail(path, "dimension must be positive");

  EmbeddingMatrix m;
  m.n = static_cast<std::size_t>(n);
  m.d = d;
  m.data.resize(m.n * m.d);
  std::vector<unsigned char> buf(m.d * 4);
  for (std::size_t r = 0; r < m.n; ++r) {
    read_exact(in, buf.data(), buf.size(), path, "embedding rows");
    double norm2 = 0.0;
    double* out = m.data.data() + r * m.d;
    for (std::size_t j = 0; j < m.d; ++j) {
      const float f = std::bit_cast<float>(load_u32le(buf.data() + j * 4));
      out[j] = static_cast<double>(f);
      norm2 += out[j] * out[j];
    }
    if (norm2 == 0.0) fail(path, "embedding row " + std::to_string(r) + " has zero norm");
  }
  if (in.get() != std::ifstream::traits_type::eof()) fail(path, "trailing bytes after payload");
  return m;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  unsigned char header[4 + 4 + 8 + 4];
  std::memcpy(header, kMagic, 4);
  store_u32le(header + 4, kFormatVersion);
  store_u64le(header + 8, m.n);
  store_u32le(header + 16, static_cast<std::uint32_t>(m.d));
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<unsigned char> buf(m.d * 4);
  for (std::size_t r = 0; r < m.n; ++r) {
    const double* row = m.data.data() + r * m.d;
    for (std::size_t j = 0; j < m.d; ++j)
      store_u32le(buf.data() + j * 4, std::bit_cast<std::uint32_t>(static_cast<float>(row[j])));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
  if (!out) fail(path, "write failed");
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<SampleRecord>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out << kManifestHeader << '\n';
  for (const SampleRecord& s : samples) {
    require_no_comma(s.sample_id, "sample_id");
    require_no_comma(s.identity, "identity");
    out << s.sample_id << ',' << s.identity << ',' << format_g9(s.base_quality) << ',' << s.row
        << '\n';
  }
  if (!out) fail(path, "write failed");
}

void write_quality_csv(const std::filesystem::path& path, const Dataset& dataset,
                       const QualityVector& q) {
  if (q.size() != dataset.size())
    throw std::invalid_argument("quality vector size does not match dataset");
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out << kQualityHeader << '\n';
  for (const SampleRecord& s : dataset.samples) {
    require_no_comma(s.sample_id, "sample_id");
    out << s.sample_id << ',' << format_g9(q.values[s.row]) << '\n';
  }
  if (!out) fail(path, "write failed");
}

QualityVector read_quality_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::unordered_map<std::string, std::size_t> row_of_id;
  row_of_id.reserve(dataset.size());
  for (const SampleRecord& s : dataset.samples) row_of_id.emplace(s.sample_id, s.row);

  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::string line;
  if (!std::getline(in, line)) fail(path, "empty file");
  strip_cr(line);
  if (line != kQualityHeader)
    fail(path, std::string("expected header '") + kQualityHeader + "', got '" + line + "'");

  QualityVector q;
  q.values.assign(dataset.size(), 0.0);
  std::vector<char> seen(dataset.size(), 0);
  std::size_t line_no = 1;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2)
      fail_line(path, line_no, "expected 2 fields, got " + std::to_string(fields.size()));
    const auto it = row_of_id.find(fields[0]);
    if (it == row_of_id.end())
      fail_line(path, line_no, "unknown sample_id '" + fields[0] + "'");
    if (seen[it->second])
      fail_line(path, line_no, "duplicate sample_id '" + fields[0] + "'");
    seen[it->second] = 1;
    q.values[it->second] = parse_double(fields[1], path, line_no, "quality");
    ++count;
  }
  if (count != dataset.size())
    fail(path, "holds " + std::to_string(count) + " qualities but the dataset has " +
                   std::to_string(dataset.size()) + " samples");
  return q;
}

std::vector<double> base_qualities_by_row(const Dataset& dataset) {
  std::vector<double> raw(dataset.size(), 0.0);
  for (const SampleRecord& s : dataset.samples) raw[s.row] = s.base_quality;
  return raw;
}

QualityVector normalize_qualities(std::span<const double> raw) {
  if (raw.empty()) throw std::invalid_argument("normalize_qualities: empty input");
  double mn = raw[0], mx = raw[0];
  for (const double v : raw) {
    if (v < mn) mn = v;
    if (v > mx) mx = v;
  }
  QualityVector q;
  q.values.resize(raw.size());
  if (mn == mx) {
    // No spread to map; park everything mid-scale.
    for (double& v : q.values) v = 0.5;
    return q;
  }
  const double denom = mx - mn;
  for (std::size_t i = 0; i < raw.size(); ++i) q.values[i] = (raw[i] - mn) / denom;
  return q;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na2 += a[i] * a[i];
    nb2 += b[i] * b[i];
  }
  if (na2 == 0.0 || nb2 == 0.0)
    throw std::invalid_argument("cosine_similarity: zero vector");
  double s = dot / (std::sqrt(na2) * std::sqrt(nb2));
  if (s > 1.0) s = 1.0;
  if (s < -1.0) s = -1.0;
  return s;
}

}  // namespace fiqopt
