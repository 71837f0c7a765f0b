#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "anchorbox/geometry.hpp"
#include "anchorbox/rng.hpp"

namespace anchorbox {

using Matrix = std::vector<Point>;

// A predictive model. Classification models return a normalized class
// probability vector; regression models report n_classes() == 1 and return
// the scalar prediction as a one-element vector.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t n_classes() const = 0;
  virtual std::vector<double> probs(const Point& x) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using ModelPtr = std::shared_ptr<const Model>;

ModelPtr model_from_json(const nlohmann::json& j);

// Adapters for the oracle constructors.
ProbFn probs_fn(const ModelPtr& m);
ValueFn value_fn(const ModelPtr& m);  // requires n_classes() == 1

class LinearModel final : public Model {
 public:
  enum class Link { identity, logistic };

  // weights is C x D (one row for the identity link).
  LinearModel(std::vector<std::vector<double>> weights,
              std::vector<double> bias, Link link);

  double value(const Point& x) const;  // identity link only
  std::size_t dim() const override { return weights_.front().size(); }
  std::size_t n_classes() const override;
  std::vector<double> probs(const Point& x) const override;
  nlohmann::json to_json() const override;

  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }
  Link link() const { return link_; }

 private:
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
  Link link_;
};

class DecisionTree final : public Model {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> leaf_probs;
  };

  DecisionTree(std::vector<Node> nodes, std::size_t dim,
               std::size_t n_classes);

  std::size_t dim() const override { return dim_; }
  std::size_t n_classes() const override { return n_classes_; }
  std::vector<double> probs(const Point& x) const override;
  nlohmann::json to_json() const override;
  int depth() const;
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
  std::size_t dim_;
  std::size_t n_classes_;
};

class RandomForest final : public Model {
 public:
  RandomForest(std::vector<DecisionTree> trees, std::size_t dim,
               std::size_t n_classes);

  std::size_t dim() const override { return dim_; }
  std::size_t n_classes() const override { return n_classes_; }
  std::vector<double> probs(const Point& x) const override;
  nlohmann::json to_json() const override;
  std::size_t n_estimators() const { return trees_.size(); }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t dim_;
  std::size_t n_classes_;
};

// Evaluates `m` with x[k] overwritten by a fixed value; the result is exactly
// constant along feature k.
ModelPtr mask_feature(ModelPtr m, std::size_t k, double anchor_value);

// --- Training ------------------------------------------------------------

// Gini-impurity CART over (feature, midpoint-threshold) candidates.
DecisionTree train_tree(const Matrix& data, const std::vector<int>& labels,
                        std::size_t n_classes, int max_depth = 3);

// Bootstrap-aggregated trees with ceil(sqrt(D)) features per split.
ModelPtr train_forest(const Matrix& data, const std::vector<int>& labels,
                      std::size_t n_classes, Rng& rng,
                      std::size_t n_estimators = 100, int max_depth = 64);

// Multinomial logistic regression, batch gradient descent from zero init.
ModelPtr train_logistic(const Matrix& data, const std::vector<int>& labels,
                        std::size_t n_classes, int iterations = 500,
                        double step = 0.1);

// Ordinary least squares (normal equations), identity link.
ModelPtr fit_linear_regression(const Matrix& data,
                               const std::vector<double>& targets);

// --- Surrogate fitting ----------------------------------------------------

enum class SurrogateFamily { linear, tree };

struct FaithSpec {
  enum class Kind { regression, classification };
  Kind kind = Kind::classification;
  double epsilon = 0.1;     // regression
  double tolerance = 0.10;  // classification
};

struct SurrogateFit {
  ModelPtr surrogate;
  double sigma = 0.0;
  double faithful_fraction = 0.0;
};

struct SurrogateFitConfig {
  double base_sigma = 0.01;
  int grid_steps = 15;  // sigma in {base * 2^j : j = 0..grid_steps-1}
  std::size_t train_samples = 1000;
  std::size_t validation_samples = 1000;
  double required_fraction = 0.99;
};

// Trains a local surrogate on Gaussian perturbations N(a, sigma^2 I) around
// the anchor, choosing the largest grid sigma whose fit stays faithful on at
// least 99% of a fresh validation draw. Throws when no grid sigma qualifies.
SurrogateFit fit_surrogate(const ModelPtr& f, const Point& anchor,
                           SurrogateFamily family, const FaithSpec& faith,
                           Rng rng, const SurrogateFitConfig& cfg = {});

}  // namespace anchorbox
