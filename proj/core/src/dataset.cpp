#include "ewopt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ewopt/error.hpp"

namespace ewopt {

void Dataset::validate() const {
  const auto n = size();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw Error("dataset: label count does not match feature rows");
  if (num_classes < 1) throw Error("dataset: num_classes must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw Error("dataset: label out of range at row " + std::to_string(i));
  }
  if (!group_ids.empty()) {
    if (static_cast<Eigen::Index>(group_ids.size()) != n)
      throw Error("dataset: group_ids size mismatch");
    for (std::size_t i = 0; i < group_ids.size(); ++i)
      if (group_ids[i] < 0)
        throw Error("dataset: negative group id at row " + std::to_string(i));
  }
  if (!protected_ids.empty() &&
      static_cast<Eigen::Index>(protected_ids.size()) != n)
    throw Error("dataset: protected_ids size mismatch");
  if (!label_map.empty() &&
      static_cast<int>(label_map.size()) != num_classes)
    throw Error("dataset: label_map size mismatch");
}

Eigen::VectorXd Dataset::priors() const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(num_classes);
  for (int y : labels) p[y] += 1.0;
  if (!labels.empty()) p /= static_cast<double>(labels.size());
  return p;
}

int Dataset::num_groups() const {
  int g = 0;
  for (int id : group_ids) g = std::max(g, id + 1);
  return g;
}

void ProbabilityModel::validate(const Dataset& data) const {
  if (probs.rows() != data.size() || probs.cols() != data.num_classes)
    throw Error("probability model: shape does not match dataset");
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      if (probs(i, j) < 0.0)
        throw Error("probability model: negative entry at row " +
                    std::to_string(i));
      sum += probs(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error("probability model: row " + std::to_string(i) +
                  " sums to " + std::to_string(sum));
  }
}

// ============================================================================
// Delimited text I/O
// ============================================================================

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& path, int line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(path + ":" + std::to_string(line) +
                ": cannot parse numeric value '" + s + "'");
  }
}

}  // namespace

LoadResult load_dataset(const std::string& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw Error(path + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> names = split_line(header, delim);

  auto column_of = [&](const std::string& name) -> int {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1
                             : static_cast<int>(it - names.begin());
  };

  const int label_col = column_of(schema.label);
  if (label_col < 0)
    throw Error(path + ": missing label column '" + schema.label + "'");
  const int group_col =
      schema.group.empty() ? -1 : column_of(schema.group);
  if (!schema.group.empty() && group_col < 0)
    throw Error(path + ": missing group column '" + schema.group + "'");
  const int prot_col =
      schema.protected_attr.empty() ? -1 : column_of(schema.protected_attr);
  if (!schema.protected_attr.empty() && prot_col < 0)
    throw Error(path + ": missing protected column '" +
                schema.protected_attr + "'");

  std::vector<int> prob_cols;
  if (!schema.prob_prefix.empty()) {
    for (int k = 1;; ++k) {
      int c = column_of(schema.prob_prefix + std::to_string(k));
      if (c < 0) break;
      prob_cols.push_back(c);
    }
    if (prob_cols.empty())
      throw Error(path + ": no columns with prefix '" + schema.prob_prefix +
                  "'");
  }

  std::vector<int> feature_cols;
  if (schema.features.empty()) {
    std::vector<bool> claimed(names.size(), false);
    claimed[label_col] = true;
    if (group_col >= 0) claimed[group_col] = true;
    if (prot_col >= 0) claimed[prot_col] = true;
    for (int c : prob_cols) claimed[c] = true;
    for (std::size_t c = 0; c < names.size(); ++c)
      if (!claimed[c]) feature_cols.push_back(static_cast<int>(c));
  } else {
    for (const auto& f : schema.features) {
      int c = column_of(f);
      if (c < 0) throw Error(path + ": missing feature column '" + f + "'");
      feature_cols.push_back(c);
    }
  }
  if (feature_cols.empty())
    throw Error(path + ": no feature columns");

  std::vector<std::vector<double>> feat_rows;
  std::vector<int> raw_labels;
  std::vector<int> groups, prots;
  std::vector<std::vector<double>> prob_rows;

  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line, delim);
    if (cells.size() != names.size())
      throw Error(path + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(names.size()) + " columns, got " +
                  std::to_string(cells.size()));

    std::vector<double> feats;
    feats.reserve(feature_cols.size());
    for (int c : feature_cols)
      feats.push_back(parse_double(cells[c], path, lineno));
    feat_rows.push_back(std::move(feats));

    const double raw = parse_double(cells[label_col], path, lineno);
    const int lab = static_cast<int>(std::lround(raw));
    if (std::abs(raw - lab) > 1e-9)
      throw Error(path + ":" + std::to_string(lineno) +
                  ": non-integer label '" + cells[label_col] + "'");
    raw_labels.push_back(lab);

    if (group_col >= 0)
      groups.push_back(
          static_cast<int>(std::lround(parse_double(cells[group_col], path,
                                                    lineno))));
    if (prot_col >= 0)
      prots.push_back(
          static_cast<int>(std::lround(parse_double(cells[prot_col], path,
                                                    lineno))));
    if (!prob_cols.empty()) {
      std::vector<double> pr;
      pr.reserve(prob_cols.size());
      for (int c : prob_cols) pr.push_back(parse_double(cells[c], path, lineno));
      prob_rows.push_back(std::move(pr));
    }
  }
  if (feat_rows.empty()) throw Error(path + ": no data rows");

  LoadResult out;
  Dataset& data = out.data;

  // Label handling: a declared class count demands labels 1..m; otherwise
  // the distinct values seen are remapped to 1..m in sorted order.
  if (schema.num_classes > 0) {
    data.num_classes = schema.num_classes;
    data.label_map.resize(data.num_classes);
    for (int k = 0; k < data.num_classes; ++k) data.label_map[k] = k + 1;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      if (raw_labels[i] < 1 || raw_labels[i] > schema.num_classes)
        throw Error(path + ":" + std::to_string(i + 2) + ": label " +
                    std::to_string(raw_labels[i]) + " outside declared range 1.." +
                    std::to_string(schema.num_classes));
      data.labels.push_back(raw_labels[i] - 1);
    }
  } else {
    std::map<int, int> remap;
    for (int lab : raw_labels) remap.emplace(lab, 0);
    int next = 0;
    for (auto& [lab, idx] : remap) idx = next++;
    data.num_classes = next;
    data.label_map.resize(next);
    for (const auto& [lab, idx] : remap) data.label_map[idx] = lab;
    for (int lab : raw_labels) data.labels.push_back(remap.at(lab));
  }

  const Eigen::Index n = static_cast<Eigen::Index>(feat_rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(feature_cols.size());
  data.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      data.features(i, j) = feat_rows[i][j];

  if (group_col >= 0) {
    // Group ids remapped to 0-based dense ids in sorted order.
    std::map<int, int> gmap;
    for (int g : groups) gmap.emplace(g, 0);
    int next = 0;
    for (auto& [g, idx] : gmap) idx = next++;
    for (int g : groups) data.group_ids.push_back(gmap.at(g));
  }
  if (prot_col >= 0) {
    std::map<int, int> pmap;
    for (int p : prots) pmap.emplace(p, 0);
    int next = 0;
    for (auto& [p, idx] : pmap) idx = next++;
    for (int p : prots) data.protected_ids.push_back(pmap.at(p));
  }

  if (!prob_rows.empty()) {
    if (static_cast<int>(prob_cols.size()) != data.num_classes)
      throw Error(path + ": found " + std::to_string(prob_cols.size()) +
                  " probability columns for " +
                  std::to_string(data.num_classes) + " classes");
    ProbabilityModel pm;
    pm.probs.resize(n, data.num_classes);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < data.num_classes; ++j)
        pm.probs(i, j) = prob_rows[i][j];
    pm.validate(data);
    out.probs = std::move(pm);
  }

  data.validate();
  return out;
}

void write_dataset(const std::string& path, const Dataset& data,
                   const ProbabilityModel* probs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open file for writing: " + path);
  out.precision(17);

  for (Eigen::Index j = 0; j < data.dim(); ++j) out << "x" << (j + 1) << ",";
  out << "label";
  if (!data.group_ids.empty()) out << ",group";
  if (!data.protected_ids.empty()) out << ",prot";
  if (probs)
    for (int k = 1; k <= data.num_classes; ++k) out << ",p" << k;
  out << "\n";

  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j)
      out << data.features(i, j) << ",";
    const int lab = data.labels[i];
    out << (data.label_map.empty() ? lab + 1 : data.label_map[lab]);
    if (!data.group_ids.empty()) out << "," << data.group_ids[i] + 1;
    if (!data.protected_ids.empty()) out << "," << data.protected_ids[i];
    if (probs)
      for (int k = 0; k < data.num_classes; ++k)
        out << "," << probs->probs(i, k);
    out << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& features) {
  Standardizer s;
  const double n = static_cast<double>(features.rows());
  s.mean = features.colwise().mean();
  Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.scale = (centered.array().square().colwise().sum() / n).sqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (s.scale[j] < 1e-12) s.scale[j] = 1e-12;
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd out = features.rowwise() - mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

}  // namespace ewopt
