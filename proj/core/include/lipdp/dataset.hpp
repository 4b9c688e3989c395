#ifndef LIPDP_DATASET_HPP
#define LIPDP_DATASET_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "lipdp/optim.hpp"
#include "lipdp/rng.hpp"

namespace lipdp {

/// A preprocessed dataset plus its provenance: where it came from and a
/// digest of the preprocessed bytes for reproducibility checks.
struct DatasetHandle {
  Dataset data;
  std::size_t num_classes = 0;
  std::string source;
  std::string digest;  // 64-bit FNV-1a of features, labels, and shape
};

enum class ColumnKind { kNumeric, kCategorical, kIgnore };

struct CsvSchema {
  /// Kind per CSV column; the label column's entry is ignored.
  std::vector<ColumnKind> columns;
  bool has_header = false;
  /// Rows are rescaled jointly so the max row norm equals this.
  double input_norm_bound = 1.0;
};

/// The preprocessing fitted by load_csv, kept so rows seen later can be
/// encoded the same way. Unknown categories encode to all zeros.
struct CsvEncoding {
  std::vector<ColumnKind> columns;
  std::size_t label_column = 0;
  std::vector<std::vector<std::string>> categories;  // per categorical column
  std::vector<double> means;                         // per numeric column
  std::vector<double> stds;
  double feature_scale = 1.0;
  std::vector<std::string> label_classes;
  std::size_t feature_dim = 0;
};

struct CsvLoadResult {
  DatasetHandle handle;
  CsvEncoding encoding;
};

/// Loads a comma-separated file: categorical columns one-hot encoded,
/// numeric columns standardized to zero mean and unit (population)
/// variance, then all rows scaled jointly so the largest row norm
/// equals the schema bound. Labels are mapped to class indices, sorted
/// numerically when every label parses as a number and lexically
/// otherwise. Empty or "?" fields are rejected with their row number.
CsvLoadResult load_csv(const std::string& path, std::size_t label_column,
                       const CsvSchema& schema);

/// Encodes one raw row of fields with a fitted encoding (the label
/// column entry is ignored). Unknown categories map to all zeros.
Tensor encode_row(const CsvEncoding& encoding,
                  const std::vector<std::string>& fields);

/// Reads the big-endian IDX image/label pair (magic 0x803 and 0x801),
/// scales pixels to [0,1], flattens each image, and rescales any row
/// with norm above the bound down to it. Malformed headers and
/// truncated payloads are rejected with the offending byte offset.
DatasetHandle load_idx(const std::string& images_path,
                       const std::string& labels_path,
                       double input_norm_bound = 1.0);

/// Binary round-trip of a preprocessed dataset; saving what load
/// returns reproduces the file byte for byte.
void save_dataset(const DatasetHandle& handle, const std::string& path);
DatasetHandle load_dataset(const std::string& path);

/// Digest of the preprocessed content (shape, features, labels, class
/// count) as 16 hex digits.
std::string dataset_digest(const Dataset& data, std::size_t num_classes);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffled split; each class contributes round(fraction *
/// count) test rows, capped so it keeps at least one training row.
SplitIndices stratified_split(const std::vector<double>& labels,
                              double test_fraction, RngState& rng);

Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices);

/// Balanced Gaussian blobs: one random unit direction per class scaled
/// by `separation`, unit isotropic noise, rows rescaled jointly to max
/// norm input_norm_bound.
DatasetHandle make_synthetic_classification(std::size_t n, std::size_t dim,
                                            std::size_t classes,
                                            double separation, RngState& rng,
                                            double input_norm_bound = 1.0);

}  // namespace lipdp

#endif  // LIPDP_DATASET_HPP
