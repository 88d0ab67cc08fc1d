#pragma once

#include <vector>

#include "ewopt/classifier.hpp"
#include "ewopt/elicit.hpp"
#include "ewopt/metrics.hpp"
#include "ewopt/postshift.hpp"

namespace ewopt {

enum class SplitMode { kShared, kHalved };

struct FwOptions {
  int iterations = 25;
  double epsilon = 0.4;        // probe perturbation around the iterate
  bool known_gradient = true;  // closed-form gradient path
  SplitMode split = SplitMode::kShared;
  ElicitOptions elicit;        // epsilon and mode fields are overridden
};

struct FwIterRecord {
  int t = 0;
  bool known_path = true;
  Eigen::VectorXd beta;     // gradient coefficients; empty on unknown path
  Eigen::VectorXd alpha;    // elicited weights for this step's direction
  double condition_number = 0.0;
  double step = 0.0;        // 2 / (t + 2)
  Eigen::VectorXd rhs;      // probe metric values fed to the solver
  Eigen::VectorXd c_tilde;  // direction's diagonal confusion on the c-sample
  Eigen::VectorXd c_after;  // c_{t+1}
  double objective = 0.0;   // metric at c_{t+1} (oracle: measured directly)
  bool grad_clamped = false;
};

struct FwTrace {
  Eigen::VectorXd c0;
  double initial_objective = 0.0;
  Eigen::Index val1_size = 0;  // elicitation sample
  Eigen::Index val2_size = 0;  // confusion-measurement sample
  std::vector<FwIterRecord> iters;
};

struct FwResult {
  RandomizedClassifier classifier;  // at most iterations + 1 components
  std::vector<PostShiftRule> directions;
  FwTrace trace;
};

struct FwState {
  int t = 0;
  RandomizedClassifier h;
  Eigen::VectorXd c;
};

double fw_step_size(int t);

// One update: h <- (1-s) h + s direction, c <- (1-s) c + s c_tilde with
// s = 2/(t+2), then t advances.
FwState fw_step(const FwState& state, const DeterministicRule& direction,
                const Eigen::VectorXd& c_tilde);

// Iterative maximization over randomized classifiers. The known path
// linearizes the metric with its diagonal gradient each round; the unknown
// path probes the shifted metric value around the current iterate. In
// halved mode the first half of `val` (rounded up) drives elicitation and
// the second half measures confusions; in shared mode both use all of it.
FwResult fw_eg(const MetricSpec& metric, const Sample& train,
               const Sample& val, const FwOptions& opts);

// Trace rows serialized one JSON object per line.
void write_trace(const std::string& path, const FwTrace& trace);

}  // namespace ewopt
