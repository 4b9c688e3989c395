#include "lipdp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lipdp {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& field) {
  return field.empty() || field == "?";
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  std::stringstream ss(line);
  while (std::getline(ss, current, ',')) fields.push_back(trim(current));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

void scale_rows_to_max(Tensor& features, double bound) {
  const std::size_t n = features.dim(0);
  const std::size_t p = features.dim(1);
  double max_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      sq += features.at(i, j) * features.at(i, j);
    max_norm = std::max(max_norm, std::sqrt(sq));
  }
  if (max_norm > 0.0) features *= bound / max_norm;
}

std::uint64_t read_be_u32(std::ifstream& in, const std::string& path,
                          std::size_t& offset) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (in.gcount() != 4)
    throw std::runtime_error(path + ": truncated at byte offset " +
                             std::to_string(offset));
  offset += 4;
  return (std::uint64_t(buf[0]) << 24) | (std::uint64_t(buf[1]) << 16) |
         (std::uint64_t(buf[2]) << 8) | std::uint64_t(buf[3]);
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

std::string dataset_digest(const Dataset& data, std::size_t num_classes) {
  std::uint64_t h = 14695981039346656037ull;
  const std::uint64_t n = data.features.dim(0);
  const std::uint64_t p = data.features.dim(1);
  const std::uint64_t c = num_classes;
  hash_bytes(h, &n, sizeof(n));
  hash_bytes(h, &p, sizeof(p));
  hash_bytes(h, &c, sizeof(c));
  hash_bytes(h, &data.input_norm_bound, sizeof(double));
  hash_bytes(h, data.features.data().data(),
             data.features.size() * sizeof(double));
  hash_bytes(h, data.labels.data(), data.labels.size() * sizeof(double));
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

CsvLoadResult load_csv(const std::string& path, std::size_t label_column,
                       const CsvSchema& schema) {
  if (schema.columns.empty())
    throw std::invalid_argument("load_csv: schema declares no columns");
  if (label_column >= schema.columns.size())
    throw std::invalid_argument("load_csv: label column out of range");
  if (!(schema.input_norm_bound > 0.0))
    throw std::invalid_argument("load_csv: input_norm_bound must be > 0");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool skipped_header = !schema.has_header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    auto fields = split_fields(line);
    const std::size_t row = rows.size();
    if (fields.size() != schema.columns.size())
      throw std::runtime_error("load_csv: row " + std::to_string(row) +
                               " has " + std::to_string(fields.size()) +
                               " fields, expected " +
                               std::to_string(schema.columns.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c != label_column && schema.columns[c] == ColumnKind::kIgnore)
        continue;
      if (is_missing(fields[c]))
        throw std::runtime_error("load_csv: missing value at row " +
                                 std::to_string(row) + ", column " +
                                 std::to_string(c));
    }
    rows.push_back(std::move(fields));
  }
  if (rows.size() < 2)
    throw std::runtime_error("load_csv: need at least 2 data rows, got " +
                             std::to_string(rows.size()));

  CsvEncoding enc;
  enc.columns = schema.columns;
  enc.label_column = label_column;
  enc.categories.resize(schema.columns.size());
  enc.means.assign(schema.columns.size(), 0.0);
  enc.stds.assign(schema.columns.size(), 0.0);

  // Label classes: numeric order when every label parses as a number,
  // lexical otherwise.
  {
    std::set<std::string> distinct;
    for (const auto& r : rows) distinct.insert(r[label_column]);
    enc.label_classes.assign(distinct.begin(), distinct.end());
    bool all_numeric = true;
    std::vector<std::pair<double, std::string>> numeric;
    for (const auto& s : enc.label_classes) {
      double v;
      if (!parse_number(s, v)) {
        all_numeric = false;
        break;
      }
      numeric.emplace_back(v, s);
    }
    if (all_numeric) {
      std::sort(numeric.begin(), numeric.end());
      enc.label_classes.clear();
      for (const auto& [v, s] : numeric) enc.label_classes.push_back(s);
    }
  }

  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (c == label_column) continue;
    if (schema.columns[c] == ColumnKind::kCategorical) {
      std::set<std::string> distinct;
      for (const auto& r : rows) distinct.insert(r[c]);
      enc.categories[c].assign(distinct.begin(), distinct.end());
    } else if (schema.columns[c] == ColumnKind::kNumeric) {
      double mean = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double v;
        if (!parse_number(rows[i][c], v))
          throw std::runtime_error("load_csv: non-numeric value '" +
                                   rows[i][c] + "' at row " +
                                   std::to_string(i) + ", column " +
                                   std::to_string(c));
        mean += v;
      }
      mean /= static_cast<double>(rows.size());
      double var = 0.0;
      for (const auto& r : rows) {
        double v;
        parse_number(r[c], v);
        var += (v - mean) * (v - mean);
      }
      var /= static_cast<double>(rows.size());
      enc.means[c] = mean;
      enc.stds[c] = std::sqrt(var);
    }
  }

  enc.feature_dim = 0;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (c == label_column) continue;
    if (schema.columns[c] == ColumnKind::kNumeric) enc.feature_dim += 1;
    if (schema.columns[c] == ColumnKind::kCategorical)
      enc.feature_dim += enc.categories[c].size();
  }
  if (enc.feature_dim == 0)
    throw std::runtime_error("load_csv: no feature columns declared");

  CsvLoadResult result;
  result.handle.data.features = Tensor::zeros({rows.size(), enc.feature_dim});
  result.handle.data.labels.resize(rows.size());
  result.handle.data.input_norm_bound = schema.input_norm_bound;
  double max_norm = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tensor encoded = encode_row(enc, rows[i]);
    double sq = 0.0;
    for (std::size_t j = 0; j < enc.feature_dim; ++j) {
      result.handle.data.features.at(i, j) = encoded[j];
      sq += encoded[j] * encoded[j];
    }
    max_norm = std::max(max_norm, std::sqrt(sq));
    const auto it = std::find(enc.label_classes.begin(),
                              enc.label_classes.end(), rows[i][label_column]);
    result.handle.data.labels[i] =
        static_cast<double>(it - enc.label_classes.begin());
  }

  // The joint scale becomes part of the encoding so rows encoded later
  // land in the same space.
  enc.feature_scale =
      max_norm > 0.0 ? schema.input_norm_bound / max_norm : 1.0;
  result.handle.data.features *= enc.feature_scale;

  result.handle.num_classes = enc.label_classes.size();
  result.handle.source = path;
  result.handle.digest =
      dataset_digest(result.handle.data, result.handle.num_classes);
  result.encoding = enc;
  return result;
}

Tensor encode_row(const CsvEncoding& encoding,
                  const std::vector<std::string>& fields) {
  if (fields.size() != encoding.columns.size())
    throw std::invalid_argument("encode_row: field count mismatch");
  Tensor out = Tensor::zeros({encoding.feature_dim});
  std::size_t slot = 0;
  for (std::size_t c = 0; c < encoding.columns.size(); ++c) {
    if (c == encoding.label_column) continue;
    if (encoding.columns[c] == ColumnKind::kIgnore) continue;
    if (encoding.columns[c] == ColumnKind::kNumeric) {
      double v;
      if (!parse_number(fields[c], v))
        throw std::invalid_argument("encode_row: non-numeric value '" +
                                    fields[c] + "' in column " +
                                    std::to_string(c));
      const double s = encoding.stds[c];
      out[slot++] = s > 0.0 ? (v - encoding.means[c]) / s : 0.0;
    } else {
      const auto& cats = encoding.categories[c];
      const auto it = std::find(cats.begin(), cats.end(), fields[c]);
      // Unknown categories leave the whole block at zero.
      if (it != cats.end()) out[slot + (it - cats.begin())] = 1.0;
      slot += cats.size();
    }
  }
  out *= encoding.feature_scale;
  return out;
}

DatasetHandle load_idx(const std::string& images_path,
                       const std::string& labels_path,
                       double input_norm_bound) {
  if (!(input_norm_bound > 0.0))
    throw std::invalid_argument("load_idx: input_norm_bound must be > 0");
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw std::runtime_error("load_idx: cannot open " + images_path);
  std::size_t offset = 0;
  const std::uint64_t img_magic = read_be_u32(imgs, images_path, offset);
  if (img_magic != 0x803)
    throw std::runtime_error(images_path + ": image magic 0x" +
                             [&] {
                               char b[16];
                               std::snprintf(b, sizeof(b), "%llx",
                                             static_cast<unsigned long long>(
                                                 img_magic));
                               return std::string(b);
                             }() +
                             ", expected 0x803");
  const std::uint64_t n = read_be_u32(imgs, images_path, offset);
  const std::uint64_t h = read_be_u32(imgs, images_path, offset);
  const std::uint64_t w = read_be_u32(imgs, images_path, offset);
  std::vector<unsigned char> pixels(n * h * w);
  imgs.read(reinterpret_cast<char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(imgs.gcount()) != pixels.size())
    throw std::runtime_error(
        images_path + ": truncated at byte offset " +
        std::to_string(offset + static_cast<std::size_t>(imgs.gcount())));

  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw std::runtime_error("load_idx: cannot open " + labels_path);
  std::size_t loffset = 0;
  const std::uint64_t lab_magic = read_be_u32(labs, labels_path, loffset);
  if (lab_magic != 0x801)
    throw std::runtime_error(labels_path + ": label magic mismatch, expected 0x801");
  const std::uint64_t ln = read_be_u32(labs, labels_path, loffset);
  if (ln != n)
    throw std::runtime_error("load_idx: " + std::to_string(n) +
                             " images but " + std::to_string(ln) + " labels");
  std::vector<unsigned char> raw_labels(ln);
  labs.read(reinterpret_cast<char*>(raw_labels.data()),
            static_cast<std::streamsize>(raw_labels.size()));
  if (static_cast<std::size_t>(labs.gcount()) != raw_labels.size())
    throw std::runtime_error(
        labels_path + ": truncated at byte offset " +
        std::to_string(loffset + static_cast<std::size_t>(labs.gcount())));

  DatasetHandle handle;
  const std::size_t p = static_cast<std::size_t>(h * w);
  handle.data.features = Tensor::zeros({static_cast<std::size_t>(n), p});
  handle.data.labels.resize(n);
  handle.data.input_norm_bound = input_norm_bound;
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double v = pixels[i * p + j] / 255.0;
      handle.data.features.at(i, j) = v;
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm > input_norm_bound) {
      const double scale = input_norm_bound / norm;
      for (std::size_t j = 0; j < p; ++j) handle.data.features.at(i, j) *= scale;
    }
    handle.data.labels[i] = raw_labels[i];
    max_label = std::max<std::size_t>(max_label, raw_labels[i]);
  }
  handle.num_classes = max_label + 1;
  handle.source = images_path + ";" + labels_path;
  handle.digest = dataset_digest(handle.data, handle.num_classes);
  return handle;
}

namespace {

constexpr char kDatasetMagic[8] = {'L', 'P', 'D', 'S', '0', '0', '0', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (in.gcount() != sizeof(v))
    throw std::runtime_error(path + ": truncated dataset file");
  return v;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in, const std::string& path) {
  const std::uint64_t len = read_u64(in, path);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::uint64_t>(in.gcount()) != len)
    throw std::runtime_error(path + ": truncated dataset file");
  return s;
}

}  // namespace

void save_dataset(const DatasetHandle& handle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_u64(out, handle.data.features.dim(0));
  write_u64(out, handle.data.features.dim(1));
  write_u64(out, handle.num_classes);
  out.write(reinterpret_cast<const char*>(&handle.data.input_norm_bound),
            sizeof(double));
  out.write(reinterpret_cast<const char*>(handle.data.features.data().data()),
            static_cast<std::streamsize>(handle.data.features.size() *
                                         sizeof(double)));
  out.write(reinterpret_cast<const char*>(handle.data.labels.data()),
            static_cast<std::streamsize>(handle.data.labels.size() *
                                         sizeof(double)));
  write_string(out, handle.source);
  write_string(out, handle.digest);
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

DatasetHandle load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0)
    throw std::runtime_error(path + ": not a dataset file");
  DatasetHandle handle;
  const std::uint64_t n = read_u64(in, path);
  const std::uint64_t p = read_u64(in, path);
  handle.num_classes = read_u64(in, path);
  in.read(reinterpret_cast<char*>(&handle.data.input_norm_bound),
          sizeof(double));
  handle.data.features = Tensor::zeros({static_cast<std::size_t>(n),
                                        static_cast<std::size_t>(p)});
  in.read(reinterpret_cast<char*>(handle.data.features.data().data()),
          static_cast<std::streamsize>(n * p * sizeof(double)));
  handle.data.labels.resize(n);
  in.read(reinterpret_cast<char*>(handle.data.labels.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error(path + ": truncated dataset file");
  handle.source = read_string(in, path);
  handle.digest = read_string(in, path);
  return handle;
}

SplitIndices stratified_split(const std::vector<double>& labels,
                              double test_fraction, RngState& rng) {
  if (!(test_fraction >= 0.0) || test_fraction >= 1.0)
    throw std::invalid_argument(
        "stratified_split: test_fraction must be in [0,1)");
  std::map<double, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);

  SplitIndices split;
  for (auto& [label, members] : by_class) {
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[rng.uniform_index(i)]);
    std::size_t take = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    if (take >= members.size()) take = members.size() - 1;
    for (std::size_t i = 0; i < members.size(); ++i)
      (i < take ? split.test : split.train).push_back(members[i]);
  }
  if (test_fraction > 0.0 && split.test.empty() && split.train.size() > 1) {
    split.test.push_back(split.train.back());
    split.train.pop_back();
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("subset: empty index set");
  Dataset out;
  out.input_norm_bound = data.input_norm_bound;
  out.features = Tensor::zeros({indices.size(), data.features.dim(1)});
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= data.size())
      throw std::invalid_argument("subset: index out of range");
    for (std::size_t j = 0; j < data.features.dim(1); ++j)
      out.features.at(i, j) = data.features.at(indices[i], j);
    out.labels[i] = data.labels[indices[i]];
  }
  return out;
}

DatasetHandle make_synthetic_classification(std::size_t n, std::size_t dim,
                                            std::size_t classes,
                                            double separation, RngState& rng,
                                            double input_norm_bound) {
  if (n < classes || classes < 2 || dim == 0)
    throw std::invalid_argument(
        "make_synthetic_classification: need n >= classes >= 2 and dim >= 1");
  std::vector<Tensor> means;
  for (std::size_t c = 0; c < classes; ++c) {
    Tensor m = Tensor::zeros({dim});
    for (std::size_t j = 0; j < dim; ++j) m[j] = rng.normal();
    const double norm = euclidean_norm(m);
    if (norm > 0.0) m *= separation / norm;
    means.push_back(std::move(m));
  }
  DatasetHandle handle;
  handle.data.features = Tensor::zeros({n, dim});
  handle.data.labels.resize(n);
  handle.data.input_norm_bound = input_norm_bound;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % classes;
    for (std::size_t j = 0; j < dim; ++j)
      handle.data.features.at(i, j) = means[label][j] + rng.normal();
    handle.data.labels[i] = static_cast<double>(label);
  }
  scale_rows_to_max(handle.data.features, input_norm_bound);
  handle.num_classes = classes;
  handle.source = "synthetic";
  handle.digest = dataset_digest(handle.data, classes);
  return handle;
}

}  // namespace lipdp
