#include "anchorbox/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "anchorbox/external_oracle.hpp"
#include "anchorbox/oracle.hpp"

namespace anchorbox {

namespace {

using nlohmann::json;

void check_training_input(const Matrix& data, std::size_t n_labels) {
  if (data.empty()) throw std::invalid_argument("empty training data");
  if (data.size() != n_labels) {
    throw std::invalid_argument("data/label count mismatch");
  }
}

std::vector<double> softmax(std::vector<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

}  // namespace

// --- LinearModel -----------------------------------------------------------

LinearModel::LinearModel(std::vector<std::vector<double>> weights,
                         std::vector<double> bias, Link link)
    : weights_(std::move(weights)), bias_(std::move(bias)), link_(link) {
  if (weights_.empty() || weights_.size() != bias_.size()) {
    throw std::invalid_argument("weight/bias shape mismatch");
  }
  if (link_ == Link::identity && weights_.size() != 1) {
    throw std::invalid_argument("identity link takes a single weight row");
  }
}

std::size_t LinearModel::n_classes() const {
  return link_ == Link::identity ? 1 : weights_.size();
}

double LinearModel::value(const Point& x) const {
  if (link_ != Link::identity) {
    throw std::logic_error("value() requires the identity link");
  }
  return std::inner_product(weights_[0].begin(), weights_[0].end(), x.begin(),
                            bias_[0]);
}

std::vector<double> LinearModel::probs(const Point& x) const {
  if (link_ == Link::identity) return {value(x)};
  std::vector<double> z(weights_.size());
  for (std::size_t c = 0; c < weights_.size(); ++c) {
    z[c] = std::inner_product(weights_[c].begin(), weights_[c].end(),
                              x.begin(), bias_[c]);
  }
  return softmax(std::move(z));
}

json LinearModel::to_json() const {
  return json{{"type", "linear"},
              {"link", link_ == Link::identity ? "identity" : "logistic"},
              {"weights", weights_},
              {"bias", bias_}};
}

// --- DecisionTree ----------------------------------------------------------

DecisionTree::DecisionTree(std::vector<Node> nodes, std::size_t dim,
                           std::size_t n_classes)
    : nodes_(std::move(nodes)), dim_(dim), n_classes_(n_classes) {
  if (nodes_.empty()) throw std::invalid_argument("tree has no nodes");
}

std::vector<double> DecisionTree::probs(const Point& x) const {
  if (x.size() != dim_) throw std::invalid_argument("dimension mismatch");
  int i = 0;
  while (nodes_[i].feature >= 0) {
    i = x[nodes_[i].feature] < nodes_[i].threshold ? nodes_[i].left
                                                   : nodes_[i].right;
  }
  return nodes_[i].leaf_probs;
}

int DecisionTree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int max_depth = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].feature >= 0) {
      depth[nodes_[i].left] = depth[i] + 1;
      depth[nodes_[i].right] = depth[i] + 1;
    }
    max_depth = std::max(max_depth, depth[i]);
  }
  return max_depth;
}

json DecisionTree::to_json() const {
  json nodes = json::array();
  for (const Node& n : nodes_) {
    if (n.feature < 0) {
      nodes.push_back(json{{"leaf", n.leaf_probs}});
    } else {
      nodes.push_back(json{{"feature", n.feature},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right}});
    }
  }
  return json{{"type", "tree"},
              {"dim", dim_},
              {"n_classes", n_classes_},
              {"nodes", nodes}};
}

// --- RandomForest ----------------------------------------------------------

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::size_t dim,
                           std::size_t n_classes)
    : trees_(std::move(trees)), dim_(dim), n_classes_(n_classes) {
  if (trees_.empty()) throw std::invalid_argument("forest has no trees");
}

std::vector<double> RandomForest::probs(const Point& x) const {
  std::vector<double> acc(n_classes_, 0.0);
  for (const DecisionTree& t : trees_) {
    const std::vector<double> p = t.probs(x);
    for (std::size_t c = 0; c < n_classes_; ++c) acc[c] += p[c];
  }
  for (double& v : acc) v /= static_cast<double>(trees_.size());
  return acc;
}

json RandomForest::to_json() const {
  json trees = json::array();
  for (const DecisionTree& t : trees_) trees.push_back(t.to_json());
  return json{{"type", "forest"},
              {"dim", dim_},
              {"n_classes", n_classes_},
              {"trees", trees}};
}

// --- Masking ---------------------------------------------------------------

namespace {

class MaskedModel final : public Model {
 public:
  MaskedModel(ModelPtr inner, std::size_t feature, double value)
      : inner_(std::move(inner)), feature_(feature), value_(value) {
    if (feature_ >= inner_->dim()) {
      throw std::invalid_argument("masked feature index out of range");
    }
  }

  std::size_t dim() const override { return inner_->dim(); }
  std::size_t n_classes() const override { return inner_->n_classes(); }

  std::vector<double> probs(const Point& x) const override {
    Point masked = x;
    masked[feature_] = value_;
    return inner_->probs(masked);
  }

  json to_json() const override {
    return json{{"type", "masked"},
                {"feature", feature_},
                {"value", value_},
                {"inner", inner_->to_json()}};
  }

 private:
  ModelPtr inner_;
  std::size_t feature_;
  double value_;
};

}  // namespace

ModelPtr mask_feature(ModelPtr m, std::size_t k, double anchor_value) {
  return std::make_shared<MaskedModel>(std::move(m), k, anchor_value);
}

// --- Serialization ---------------------------------------------------------

namespace {

DecisionTree tree_from_json(const json& j) {
  std::vector<DecisionTree::Node> nodes;
  for (const auto& n : j.at("nodes")) {
    DecisionTree::Node node;
    if (n.contains("leaf")) {
      node.leaf_probs = n.at("leaf").get<std::vector<double>>();
    } else {
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
    }
    nodes.push_back(std::move(node));
  }
  return DecisionTree(std::move(nodes), j.at("dim").get<std::size_t>(),
                      j.at("n_classes").get<std::size_t>());
}

}  // namespace

ModelPtr model_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "linear") {
    const std::string link = j.at("link").get<std::string>();
    return std::make_shared<LinearModel>(
        j.at("weights").get<std::vector<std::vector<double>>>(),
        j.at("bias").get<std::vector<double>>(),
        link == "identity" ? LinearModel::Link::identity
                           : LinearModel::Link::logistic);
  }
  if (type == "tree") {
    return std::make_shared<DecisionTree>(tree_from_json(j));
  }
  if (type == "forest") {
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
    return std::make_shared<RandomForest>(std::move(trees),
                                          j.at("dim").get<std::size_t>(),
                                          j.at("n_classes").get<std::size_t>());
  }
  if (type == "masked") {
    return mask_feature(model_from_json(j.at("inner")),
                        j.at("feature").get<std::size_t>(),
                        j.at("value").get<double>());
  }
  if (type == "external") {
    return std::make_shared<ExternalModel>(
        j.at("command").get<std::string>(), j.at("dim").get<std::size_t>(),
        j.at("n_classes").get<std::size_t>());
  }
  throw std::invalid_argument("unknown model type: " + type);
}

ProbFn probs_fn(const ModelPtr& m) {
  return [m](const Point& x) { return m->probs(x); };
}

ValueFn value_fn(const ModelPtr& m) {
  if (m->n_classes() != 1) {
    throw std::invalid_argument("value_fn requires a scalar model");
  }
  return [m](const Point& x) { return m->probs(x)[0]; };
}

// --- Tree training ---------------------------------------------------------

namespace {

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (const int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child impurity
};

// One candidate threshold per feature: the midpoint of the node's value
// range. Lowest weighted Gini wins; a zero-gain split is still taken, which
// lets depth handle interactions (e.g. XOR) that give no first-level gain.
SplitChoice best_split(const Matrix& data, const std::vector<int>& labels,
                       const std::vector<int>& sample_idx,
                       const std::vector<std::size_t>& features,
                       std::size_t n_classes) {
  const int n = static_cast<int>(sample_idx.size());
  SplitChoice best;
  std::vector<int> total_counts(n_classes, 0);
  for (const int i : sample_idx) ++total_counts[labels[i]];
  if (gini(total_counts, n) == 0.0) return best;  // pure node

  std::vector<int> left_counts(n_classes, 0);
  for (const std::size_t f : features) {
    double lo = data[sample_idx.front()][f];
    double hi = lo;
    for (const int i : sample_idx) {
      lo = std::min(lo, data[i][f]);
      hi = std::max(hi, data[i][f]);
    }
    if (lo == hi) continue;  // both children are nonempty otherwise
    const double thr = 0.5 * (lo + hi);
    std::fill(left_counts.begin(), left_counts.end(), 0);
    int n_left = 0;
    for (const int i : sample_idx) {
      if (data[i][f] < thr) {
        ++left_counts[labels[i]];
        ++n_left;
      }
    }
    std::vector<int> right_counts(n_classes, 0);
    for (std::size_t c = 0; c < n_classes; ++c) {
      right_counts[c] = total_counts[c] - left_counts[c];
    }
    const int n_right = n - n_left;
    const double impurity = (n_left * gini(left_counts, n_left) +
                             n_right * gini(right_counts, n_right)) /
                            n;
    if (!best.found || impurity < best.impurity - 1e-15) {
      best = {true, f, thr, impurity};
    }
  }
  return best;
}

// Feature-subset provider: the plain tree sees every feature, forest trees a
// fresh random ceil(sqrt(D)) subset per split.
using FeaturePicker = std::function<std::vector<std::size_t>()>;

DecisionTree build_tree(const Matrix& data, const std::vector<int>& labels,
                        std::size_t n_classes, int max_depth,
                        const FeaturePicker& pick_features,
                        const std::vector<int>& root_samples) {
  std::vector<DecisionTree::Node> nodes;

  struct Item {
    std::vector<int> samples;
    int depth;
    int node_index;
  };
  std::vector<Item> stack;
  nodes.emplace_back();
  stack.push_back({root_samples, 0, 0});

  while (!stack.empty()) {
    Item item = std::move(stack.back());
    stack.pop_back();

    SplitChoice split;
    if (item.depth < max_depth) {
      split = best_split(data, labels, item.samples, pick_features(),
                         n_classes);
    }
    if (!split.found) {
      std::vector<double> freq(n_classes, 0.0);
      for (const int i : item.samples) freq[labels[i]] += 1.0;
      for (double& v : freq) v /= static_cast<double>(item.samples.size());
      nodes[item.node_index].leaf_probs = std::move(freq);
      continue;
    }

    std::vector<int> left, right;
    for (const int i : item.samples) {
      (data[i][split.feature] < split.threshold ? left : right).push_back(i);
    }
    const int li = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const int ri = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[item.node_index].feature = static_cast<int>(split.feature);
    nodes[item.node_index].threshold = split.threshold;
    nodes[item.node_index].left = li;
    nodes[item.node_index].right = ri;
    stack.push_back({std::move(right), item.depth + 1, ri});
    stack.push_back({std::move(left), item.depth + 1, li});
  }
  return DecisionTree(std::move(nodes), data.front().size(), n_classes);
}

}  // namespace

DecisionTree train_tree(const Matrix& data, const std::vector<int>& labels,
                        std::size_t n_classes, int max_depth) {
  check_training_input(data, labels.size());
  const std::size_t dim = data.front().size();
  std::vector<std::size_t> all(dim);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<int> samples(data.size());
  std::iota(samples.begin(), samples.end(), 0);
  return build_tree(data, labels, n_classes, max_depth,
                    [&all]() { return all; }, samples);
}

ModelPtr train_forest(const Matrix& data, const std::vector<int>& labels,
                      std::size_t n_classes, Rng& rng,
                      std::size_t n_estimators, int max_depth) {
  check_training_input(data, labels.size());
  const std::size_t dim = data.front().size();
  const std::size_t per_split = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(dim))));

  std::vector<DecisionTree> trees;
  trees.reserve(n_estimators);
  for (std::size_t t = 0; t < n_estimators; ++t) {
    Rng tree_rng = rng.derive("tree", t);
    std::vector<int> bootstrap(data.size());
    for (int& i : bootstrap) {
      i = static_cast<int>(tree_rng.index(data.size()));
    }
    auto pick = [&tree_rng, dim, per_split]() {
      std::vector<std::size_t> pool(dim);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < per_split; ++i) {
        std::swap(pool[i], pool[i + tree_rng.index(dim - i)]);
      }
      pool.resize(per_split);
      std::sort(pool.begin(), pool.end());
      return pool;
    };
    trees.push_back(
        build_tree(data, labels, n_classes, max_depth, pick, bootstrap));
  }
  return std::make_shared<RandomForest>(std::move(trees), dim, n_classes);
}

ModelPtr train_logistic(const Matrix& data, const std::vector<int>& labels,
                        std::size_t n_classes, int iterations, double step) {
  check_training_input(data, labels.size());
  const std::size_t dim = data.front().size();
  const std::size_t n = data.size();
  std::vector<std::vector<double>> w(n_classes, std::vector<double>(dim, 0.0));
  std::vector<double> b(n_classes, 0.0);

  std::vector<double> z(n_classes);
  std::vector<std::vector<double>> gw(n_classes,
                                      std::vector<double>(dim, 0.0));
  std::vector<double> gb(n_classes, 0.0);
  for (int it = 0; it < iterations; ++it) {
    for (auto& row : gw) std::fill(row.begin(), row.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < n_classes; ++c) {
        z[c] = std::inner_product(w[c].begin(), w[c].end(), data[i].begin(),
                                  b[c]);
      }
      const std::vector<double> p = softmax(z);
      for (std::size_t c = 0; c < n_classes; ++c) {
        const double err = p[c] - (labels[i] == static_cast<int>(c) ? 1. : 0.);
        gb[c] += err;
        for (std::size_t d = 0; d < dim; ++d) gw[c][d] += err * data[i][d];
      }
    }
    const double scale = step / static_cast<double>(n);
    for (std::size_t c = 0; c < n_classes; ++c) {
      b[c] -= scale * gb[c];
      for (std::size_t d = 0; d < dim; ++d) w[c][d] -= scale * gw[c][d];
    }
  }
  return std::make_shared<LinearModel>(std::move(w), std::move(b),
                                       LinearModel::Link::logistic);
}

ModelPtr fit_linear_regression(const Matrix& data,
                               const std::vector<double>& targets) {
  check_training_input(data, targets.size());
  const std::size_t dim = data.front().size();
  const std::size_t k = dim + 1;  // weights plus intercept

  // Normal equations with a tiny ridge for numerical safety.
  std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
  std::vector<double> rhs(k, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xp = p < dim ? data[i][p] : 1.0;
      rhs[p] += xp * targets[i];
      for (std::size_t q = p; q < k; ++q) {
        const double xq = q < dim ? data[i][q] : 1.0;
        a[p][q] += xp * xq;
      }
    }
  }
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = 0; q < p; ++q) a[p][q] = a[q][p];
    a[p][p] += 1e-10;
  }

  // Gaussian elimination with partial pivoting.
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (std::size_t r = col + 1; r < k; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < k; ++c) a[r][c] -= factor * a[col][c];
      rhs[r] -= factor * rhs[col];
    }
  }
  std::vector<double> coef(k, 0.0);
  for (std::size_t r = k; r-- > 0;) {
    double v = rhs[r];
    for (std::size_t c = r + 1; c < k; ++c) v -= a[r][c] * coef[c];
    coef[r] = v / a[r][r];
  }
  std::vector<double> weights(coef.begin(), coef.begin() + dim);
  return std::make_shared<LinearModel>(
      std::vector<std::vector<double>>{weights},
      std::vector<double>{coef[dim]}, LinearModel::Link::identity);
}

// --- Surrogate fitting -----------------------------------------------------

namespace {

Matrix gaussian_draw(const Point& anchor, double sigma, std::size_t count,
                     Rng& rng) {
  Matrix out(count, Point(anchor.size()));
  for (auto& row : out) {
    for (std::size_t d = 0; d < anchor.size(); ++d) {
      row[d] = rng.normal(anchor[d], sigma);
    }
  }
  return out;
}

}  // namespace

SurrogateFit fit_surrogate(const ModelPtr& f, const Point& anchor,
                           SurrogateFamily family, const FaithSpec& faith,
                           Rng rng, const SurrogateFitConfig& cfg) {
  if (f->dim() != anchor.size()) {
    throw std::invalid_argument("anchor dimension mismatch");
  }
  const bool classification = faith.kind == FaithSpec::Kind::classification;
  if (!classification && family == SurrogateFamily::tree) {
    throw std::invalid_argument(
        "tree surrogates are only supported for classification faithfulness");
  }
  const std::size_t n_classes = f->n_classes();
  if (classification && n_classes < 2) {
    throw std::invalid_argument(
        "classification faithfulness needs a class-probability model");
  }

  for (int j = cfg.grid_steps - 1; j >= 0; --j) {
    const double sigma = cfg.base_sigma * std::pow(2.0, j);
    Rng grid_rng = rng.derive("sigma", static_cast<std::uint64_t>(j));
    Rng train_rng = grid_rng.derive("train");
    Rng valid_rng = grid_rng.derive("valid");

    const Matrix train = gaussian_draw(anchor, sigma, cfg.train_samples,
                                       train_rng);
    ModelPtr g;
    if (classification) {
      std::vector<int> labels(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) {
        const std::vector<double> p = f->probs(train[i]);
        labels[i] = static_cast<int>(
            std::max_element(p.begin(), p.end()) - p.begin());
      }
      g = family == SurrogateFamily::linear
              ? train_logistic(train, labels, n_classes)
              : std::make_shared<DecisionTree>(
                    train_tree(train, labels, n_classes, 3));
    } else {
      std::vector<double> targets(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) {
        targets[i] = f->probs(train[i])[0];
      }
      g = fit_linear_regression(train, targets);
    }

    auto faithful_at = [&](const Point& x) {
      if (classification) {
        return classification_faithful(f->probs(x), g->probs(x),
                                       faith.tolerance) == 1;
      }
      return std::abs(f->probs(x)[0] - g->probs(x)[0]) < faith.epsilon;
    };
    // The anchor itself must be faithful, or no guarantee region exists.
    if (!faithful_at(anchor)) continue;

    const Matrix valid = gaussian_draw(anchor, sigma, cfg.validation_samples,
                                       valid_rng);
    std::size_t faithful = 0;
    for (const Point& x : valid) faithful += faithful_at(x);
    const double fraction =
        static_cast<double>(faithful) / cfg.validation_samples;
    if (fraction >= cfg.required_fraction) {
      return SurrogateFit{g, sigma, fraction};
    }
  }
  throw std::runtime_error(
      "no sigma on the grid met the faithfulness threshold; check that the "
      "anchor itself is faithful or extend the grid to a smaller base sigma");
}

}  // namespace anchorbox
