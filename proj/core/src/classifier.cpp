#include "ewopt/classifier.hpp"

#include <atomic>
#include <cmath>

#include "ewopt/error.hpp"

namespace ewopt {

Sample make_sample(Dataset data, Eigen::MatrixXd phi, Eigen::MatrixXd eta) {
  static std::atomic<std::uint64_t> next_id{1};
  Sample s;
  s.data = std::move(data);
  s.phi = std::move(phi);
  s.eta = std::move(eta);
  s.id = next_id.fetch_add(1);
  if (s.phi.size() > 0 && s.phi.rows() != s.data.size())
    throw Error("sample: phi rows do not match dataset");
  if (s.eta.size() > 0 && (s.eta.rows() != s.data.size() ||
                           s.eta.cols() != s.data.num_classes))
    throw Error("sample: eta shape does not match dataset");
  return s;
}

bool PostShiftRule::operator==(const PostShiftRule& o) const {
  return coef.mode == o.coef.mode && coef.num_bases == o.coef.num_bases &&
         coef.num_classes == o.coef.num_classes &&
         coef.alpha.size() == o.coef.alpha.size() && coef.alpha == o.coef.alpha;
}

bool WeightedArgmaxRule::operator==(const WeightedArgmaxRule& o) const {
  return w.size() == o.w.size() && w == o.w;
}

namespace {

int argmax_lowest(const Eigen::VectorXd& scores) {
  int best = 0;
  for (int i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

}  // namespace

std::vector<int> materialize(const DeterministicRule& rule,
                             const Sample& sample) {
  const Eigen::Index n = sample.data.size();
  const int m = sample.data.num_classes;
  std::vector<int> preds(n);

  if (const auto* c = std::get_if<ConstantRule>(&rule)) {
    if (c->cls < 0 || c->cls >= m)
      throw Error("constant rule: class out of range");
    std::fill(preds.begin(), preds.end(), c->cls);
  } else if (const auto* a = std::get_if<AssignmentRule>(&rule)) {
    if (a->sample_id != sample.id)
      throw Error("assignment rule applied to a different sample");
    if (static_cast<Eigen::Index>(a->assignment.size()) != n)
      throw Error("assignment rule: length mismatch");
    preds = a->assignment;
  } else if (std::get_if<ArgmaxRule>(&rule)) {
    if (sample.eta.size() == 0)
      throw Error("argmax rule needs a probability model on the sample");
    for (Eigen::Index i = 0; i < n; ++i)
      preds[i] = argmax_lowest(sample.eta.row(i).transpose());
  } else if (const auto* p = std::get_if<PostShiftRule>(&rule)) {
    if (sample.eta.size() == 0)
      throw Error("post-shift rule needs a probability model on the sample");
    if (sample.phi.cols() != p->coef.num_bases)
      throw Error("post-shift rule: basis count mismatch");
    if (p->coef.num_classes != m)
      throw Error("post-shift rule: class count mismatch");
    if (p->coef.mode == WeightMode::kDiagonal) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd w = p->coef.weights_at(sample.phi.row(i));
        const Eigen::VectorXd scores =
            w.array() * sample.eta.row(i).transpose().array();
        preds[i] = argmax_lowest(scores);
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::MatrixXd w = p->coef.weight_matrix_at(sample.phi.row(i));
        const Eigen::VectorXd scores =
            w.transpose() * sample.eta.row(i).transpose();
        preds[i] = argmax_lowest(scores);
      }
    }
  } else if (const auto* wa = std::get_if<WeightedArgmaxRule>(&rule)) {
    if (sample.eta.size() == 0)
      throw Error("weighted argmax rule needs a probability model");
    if (wa->w.size() != m)
      throw Error("weighted argmax rule: weight length mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd scores =
          wa->w.array() * sample.eta.row(i).transpose().array();
      preds[i] = argmax_lowest(scores);
    }
  }
  return preds;
}

Eigen::MatrixXd one_hot(const std::vector<int>& preds, int num_classes) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(preds.size()), num_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= num_classes)
      throw Error("one_hot: prediction out of range");
    out(static_cast<Eigen::Index>(i), preds[i]) = 1.0;
  }
  return out;
}

double RandomizedClassifier::total_weight() const {
  double s = 0.0;
  for (const auto& [w, rule] : components) s += w;
  return s;
}

RandomizedClassifier RandomizedClassifier::pure(DeterministicRule rule) {
  RandomizedClassifier h;
  h.components.emplace_back(1.0, std::move(rule));
  return h;
}

RandomizedClassifier mix(const RandomizedClassifier& a,
                         const RandomizedClassifier& b, double w) {
  if (w < 0.0 || w > 1.0) throw Error("mix: weight must lie in [0, 1]");
  RandomizedClassifier out;
  out.components.reserve(a.components.size() + b.components.size());
  for (const auto& [cw, rule] : a.components)
    out.components.emplace_back(w * cw, rule);
  for (const auto& [cw, rule] : b.components)
    out.components.emplace_back((1.0 - w) * cw, rule);
  return compact(out);
}

RandomizedClassifier compact(const RandomizedClassifier& h) {
  RandomizedClassifier out;
  for (const auto& [w, rule] : h.components) {
    if (w == 0.0) continue;
    bool merged = false;
    for (auto& [ow, orule] : out.components) {
      if (orule == rule) {
        ow += w;
        merged = true;
        break;
      }
    }
    if (!merged) out.components.emplace_back(w, rule);
  }
  return out;
}

Eigen::MatrixXd distribution(const RandomizedClassifier& h,
                             const Sample& sample) {
  const Eigen::Index n = sample.data.size();
  const int m = sample.data.num_classes;
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, m);
  for (const auto& [w, rule] : h.components) {
    const std::vector<int> preds = materialize(rule, sample);
    for (Eigen::Index i = 0; i < n; ++i) dist(i, preds[i]) += w;
  }
  return dist;
}

}  // namespace ewopt
