#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace ewopt {

/// A fixed sample of labeled examples.
///
/// Labels are stored 0-based internally; `label_map[k]` holds the original
/// label value for internal index k (external files use 1..m).
/// `group_ids` (0-based cluster ids) and `protected_ids` are optional;
/// protected attributes are only ever read by oracle metric constructors.
struct Dataset {
  Eigen::MatrixXd features;        // n x d
  std::vector<int> labels;         // size n, values in [0, num_classes)
  int num_classes = 0;
  std::vector<int> group_ids;      // empty or size n
  std::vector<int> protected_ids;  // empty or size n
  std::vector<int> label_map;      // size num_classes

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  // Throws on inconsistent sizes or out-of-range labels/groups.
  void validate() const;

  // Empirical class priors (length num_classes, sums to 1).
  Eigen::VectorXd priors() const;

  int num_groups() const;
};

/// Per-example class probabilities aligned to one Dataset.
struct ProbabilityModel {
  Eigen::MatrixXd probs;  // n x m, rows on the simplex

  // Rows must be nonnegative and sum to 1 within 1e-9.
  void validate(const Dataset& data) const;
};

/// Column layout of a delimited text file.
///
/// The delimiter is sniffed from the header line (tab if present, else
/// comma). `features` empty means every column not otherwise claimed.
/// `num_classes` 0 means infer from the distinct labels seen; otherwise
/// labels must be integers in 1..num_classes.
struct ColumnSchema {
  std::string label = "label";
  std::vector<std::string> features;
  std::string group;            // optional
  std::string protected_attr;   // optional
  std::string prob_prefix;      // optional; columns prefix1..prefixm
  int num_classes = 0;
};

struct LoadResult {
  Dataset data;
  std::optional<ProbabilityModel> probs;
};

// Parses a delimited text file with a header row. Malformed rows and
// out-of-range labels raise Error with the offending line number.
LoadResult load_dataset(const std::string& path, const ColumnSchema& schema);

// Writes the dataset (and optional probability columns p1..pm) back out in
// the same format load_dataset reads.
void write_dataset(const std::string& path, const Dataset& data,
                   const ProbabilityModel* probs = nullptr);

// Feature standardization fit on one dataset and applied to others.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // max(stddev, 1e-12)

  static Standardizer fit(const Eigen::MatrixXd& features);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

}  // namespace ewopt
