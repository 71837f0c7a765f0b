#include "anchorbox/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace anchorbox {

namespace {

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(
      std::max_element(v.begin(), v.end()) - v.begin());
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string("non-finite ") + what + " output");
  }
}

}  // namespace

RegressionFaithfulness::RegressionFaithfulness(ValueFn f, ValueFn g,
                                               double epsilon)
    : f_(std::move(f)), g_(std::move(g)), epsilon_(epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be positive");
  }
}

int RegressionFaithfulness::do_evaluate(const Point& x) {
  const double fy = f_(x);
  const double gy = g_(x);
  check_finite(fy, "model");
  check_finite(gy, "surrogate");
  return std::abs(fy - gy) < epsilon_ ? 1 : 0;
}

ClassificationFaithfulness::ClassificationFaithfulness(ProbFn f, ProbFn g,
                                                       double tolerance)
    : f_(std::move(f)), g_(std::move(g)), tolerance_(tolerance) {
  if (!(tolerance > 0.0) || !(tolerance < 1.0)) {
    throw std::invalid_argument("tolerance must lie in (0, 1)");
  }
}

int classification_faithful(const std::vector<double>& f_probs,
                            const std::vector<double>& g_probs,
                            double tolerance) {
  if (f_probs.empty() || f_probs.size() != g_probs.size()) {
    throw std::runtime_error("class probability vectors disagree in length");
  }
  for (const double p : f_probs) check_finite(p, "model");
  for (const double p : g_probs) check_finite(p, "surrogate");
  const std::size_t c_star = argmax(f_probs);
  if (argmax(g_probs) == c_star) return 1;
  return std::abs(f_probs[c_star] - g_probs[c_star]) < tolerance ? 1 : 0;
}

int ClassificationFaithfulness::do_evaluate(const Point& x) {
  return classification_faithful(f_(x), g_(x), tolerance_);
}

int half_l1_ball(std::size_t dim, const Point& x) {
  if (dim % 2 != 0) {
    throw std::invalid_argument("half-L1-ball dimension must be even");
  }
  if (x.size() != dim) {
    throw std::invalid_argument("point dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < dim / 2; ++i) sum += std::abs(x[i]);
  return sum < static_cast<double>(dim) / 4.0 ? 1 : 0;
}

HalfL1BallOracle::HalfL1BallOracle(std::size_t dim) : dim_(dim) {
  if (dim % 2 != 0 || dim == 0) {
    throw std::invalid_argument("half-L1-ball dimension must be even");
  }
}

AdversarialFamily::AdversarialFamily(std::size_t dim, double ratio)
    : dim_(dim), ratio_(ratio) {
  if (dim < 2) throw std::invalid_argument("family needs dim >= 2");
  if (!(ratio > 0.0) || !(ratio < 1.0)) {
    throw std::invalid_argument("ratio must lie in (0, 1)");
  }
  // Enumerate all floor(D/2)-size subsets of {0..D-1} lexicographically.
  const std::size_t m = dim / 2;
  std::vector<std::size_t> comb(m);
  for (std::size_t i = 0; i < m; ++i) comb[i] = i;
  while (true) {
    subsets_.push_back(comb);
    if (subsets_.size() > 10'000'000) {
      throw std::invalid_argument("family too large to enumerate");
    }
    // next combination
    std::size_t i = m;
    while (i > 0 && comb[i - 1] == dim - m + (i - 1)) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t j = i; j < m; ++j) comb[j] = comb[j - 1] + 1;
  }
}

int AdversarialFamily::evaluate_member(std::size_t k, const Point& x) const {
  if (k > subsets_.size()) {
    throw std::invalid_argument("family member index out of range");
  }
  if (x.size() != dim_) {
    throw std::invalid_argument("point dimension mismatch");
  }
  std::size_t at_or_above_ratio = 0;
  bool in_unit_cube = true;
  for (std::size_t d = 0; d < dim_; ++d) {
    if (x[d] < 0.0 || x[d] > 1.0) in_unit_cube = false;
    if (x[d] >= ratio_) ++at_or_above_ratio;
  }
  const int base =
      (in_unit_cube && at_or_above_ratio <= dim_ / 2 - 1) ? 1 : 0;
  if (k == 0 || base == 1) return base;

  const std::vector<std::size_t>& s = subsets_[k - 1];
  std::size_t si = 0;
  for (std::size_t d = 0; d < dim_; ++d) {
    const bool in_subset = si < s.size() && s[si] == d;
    if (in_subset) ++si;
    const double hi = in_subset ? 1.0 : ratio_;
    if (x[d] < 0.0 || x[d] > hi) return 0;
  }
  return 1;
}

OraclePtr AdversarialFamily::member_oracle(std::size_t k) const {
  if (k > subsets_.size()) {
    throw std::invalid_argument("family member index out of range");
  }
  AdversarialFamily copy = *this;
  return std::make_shared<FunctionOracle>(
      [copy, k](const Point& x) { return copy.evaluate_member(k, x); });
}

}  // namespace anchorbox
