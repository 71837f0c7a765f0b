#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "anchorbox/geometry.hpp"

namespace anchorbox {

// Black-box faithfulness indicator e(x) in {0, 1} with an evaluation counter.
// The counter reflects completed evaluations only: a call that throws is not
// counted. Counter updates are atomic; whether concurrent evaluation is safe
// depends on the concrete oracle (in-process oracles are, external-process
// oracles serialize internally).
class FaithfulnessOracle {
 public:
  virtual ~FaithfulnessOracle() = default;

  int evaluate(const Point& x) {
    const int e = do_evaluate(x);
    count_.fetch_add(1, std::memory_order_relaxed);
    return e;
  }

  std::uint64_t eval_count() const {
    return count_.load(std::memory_order_relaxed);
  }

 private:
  virtual int do_evaluate(const Point& x) = 0;

  std::atomic<std::uint64_t> count_{0};
};

using OraclePtr = std::shared_ptr<FaithfulnessOracle>;

// Wraps an arbitrary deterministic predicate, mostly for tests.
class FunctionOracle final : public FaithfulnessOracle {
 public:
  explicit FunctionOracle(std::function<int(const Point&)> fn)
      : fn_(std::move(fn)) {}

 private:
  int do_evaluate(const Point& x) override { return fn_(x) ? 1 : 0; }

  std::function<int(const Point&)> fn_;
};

// e(x) = 1 iff |f(x) - g(x)| < epsilon.
class RegressionFaithfulness final : public FaithfulnessOracle {
 public:
  RegressionFaithfulness(ValueFn f, ValueFn g, double epsilon);

 private:
  int do_evaluate(const Point& x) override;

  ValueFn f_;
  ValueFn g_;
  double epsilon_;
};

// e(x) = 1 iff f and g predict the same class, or their confidences in f's
// predicted class differ by less than `tolerance`.
class ClassificationFaithfulness final : public FaithfulnessOracle {
 public:
  ClassificationFaithfulness(ProbFn f, ProbFn g, double tolerance = 0.10);

 private:
  int do_evaluate(const Point& x) override;

  ProbFn f_;
  ProbFn g_;
  double tolerance_;
};

// Plain-function form of the classification rule, shared with surrogate
// validation where no counting is wanted.
int classification_faithful(const std::vector<double>& f_probs,
                            const std::vector<double>& g_probs,
                            double tolerance);

// e(x) = 1 iff sum_{i < D/2} |x_i| < D/4. Only the first half of the
// coordinates matter; D must be even.
int half_l1_ball(std::size_t dim, const Point& x);

class HalfL1BallOracle final : public FaithfulnessOracle {
 public:
  explicit HalfL1BallOracle(std::size_t dim);
  std::size_t dim() const { return dim_; }

 private:
  int do_evaluate(const Point& x) override { return half_l1_ball(dim_, x); }

  std::size_t dim_;
};

// Family of K+1 indicator functions over [0,1]^D that agree except on thin
// slabs, K = C(D, floor(D/2)). Member 0 is the base function; member k >= 1
// additionally accepts the box that is full along subset S_k and clipped to
// [0, ratio] elsewhere. Used as an adversarial test fixture: any single
// evaluation point can separate at most one member from the base.
class AdversarialFamily {
 public:
  AdversarialFamily(std::size_t dim, double ratio);

  std::size_t dim() const { return dim_; }
  double ratio() const { return ratio_; }
  std::size_t member_count() const { return subsets_.size(); }  // K

  // k in [0, K]; k = 0 is the base member.
  int evaluate_member(std::size_t k, const Point& x) const;

  const std::vector<std::vector<std::size_t>>& subsets() const {
    return subsets_;
  }

  OraclePtr member_oracle(std::size_t k) const;

 private:
  std::size_t dim_;
  double ratio_;
  std::vector<std::vector<std::size_t>> subsets_;
};

}  // namespace anchorbox
