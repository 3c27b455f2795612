#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace pseudoherm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A point expressed in the chart of its owning model. Group models use
// (x^1..x^n, y^1..y^n, t); the sphere stores unit ambient vectors.
struct ChartPoint {
  Vec coords;
  std::string model_id;
};

// A tangent vector: coordinate components attached to a base point.
struct Tangent {
  ChartPoint base;
  Vec components;
};

// ---------------------------------------------------------------------------
// Error hierarchy.
//
// Contract violations (wrong sizes, mismatched base points, invalid
// parameters) throw std::invalid_argument or std::domain_error directly.
// The classes below carry structured failure modes that callers may want to
// catch individually.
// ---------------------------------------------------------------------------

// The metric (or a Gram matrix derived from it) is numerically singular.
class DegenerateMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Axiom residuals exceed 10x their tolerance: a convention or construction
// bug rather than ordinary numerical noise.
class InconsistentModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A boundary value problem was posed across a conjugate pair (singular
// shooting matrix), or a construction window contains conjugate parameters.
class ConjugateIntervalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A theorem's hypothesis failed; the message names which clause.
class HypothesisViolationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two vectors meant to span a 2-plane are (numerically) linearly dependent.
class DegeneratePlaneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation requires a model class it was not given (e.g. the circle-bundle
// metric is only built over the flat group models).
class UnsupportedModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Generic numerical failure with a location string in the message.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ODE step produced a NaN or diverged; records the last trusted parameter.
class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& what, double last_good_t)
      : NumericError(what), last_good_t_(last_good_t) {}
  double last_good_t() const { return last_good_t_; }

 private:
  double last_good_t_ = 0.0;
};

inline void require(bool cond, const std::string& message) {
  if (!cond) throw std::invalid_argument(message);
}

inline void require_domain(bool cond, const std::string& message) {
  if (!cond) throw std::domain_error(message);
}

}  // namespace pseudoherm
