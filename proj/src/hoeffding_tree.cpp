#include "streamhar/hoeffding_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamhar/error.hpp"

namespace streamhar {

namespace {

double entropy_bits(std::span<const double> dist) {
  double total = 0;
  for (double v : dist) total += v;
  if (total <= 0) return 0;
  double h = 0;
  for (double v : dist)
    if (v > 0) h -= (v / total) * std::log2(v / total);
  return h;
}

double info_gain(std::span<const double> pre, std::span<const double> left, std::span<const double> right) {
  const double wl = std::accumulate(left.begin(), left.end(), 0.0);
  const double wr = std::accumulate(right.begin(), right.end(), 0.0);
  const double total = wl + wr;
  if (total <= 0) return 0;
  // a split that leaves one side nearly empty carries no information
  if (wl <= 0 || wr <= 0) return 0;
  return entropy_bits(pre) - (wl / total) * entropy_bits(left) - (wr / total) * entropy_bits(right);
}

std::vector<double> normalized(std::vector<double> v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (s > 0)
    for (double& x : v) x /= s;
  return v;
}

}  // namespace

double HoeffdingTree::Node::weight() const noexcept {
  return std::accumulate(class_weight.begin(), class_weight.end(), 0.0);
}

HoeffdingTree::HoeffdingTree(std::size_t dim, HoeffdingConfig config, double variance_floor)
    : dim_(dim), config_(config), variance_floor_(variance_floor) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "tree dimension must be positive");
  if (config_.n_thresholds < 1) throw Error(ErrorCode::InvalidArgument, "need at least one split threshold");
  Node root;
  root.stats = GaussianClassStats(dim_, variance_floor_);
  nodes_.push_back(std::move(root));
}

int HoeffdingTree::leaf_for(std::span<const double> x) const {
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.attribute)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

std::vector<double> HoeffdingTree::leaf_distribution(const Node& leaf, std::span<const double> x) const {
  const auto mc = normalized(leaf.class_weight);
  if (config_.leaf == LeafPrediction::MajorityClass || leaf.stats.empty()) return mc;
  if (config_.leaf == LeafPrediction::NaiveBayesAdaptive && leaf.mc_correct > leaf.nb_correct) return mc;
  auto nb = leaf.stats.posterior(x);
  nb.resize(std::max(nb.size(), mc.size()), 0.0);
  return nb;
}

std::vector<double> HoeffdingTree::distribution(std::span<const double> x) const {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "tree input has wrong dimension");
  return leaf_distribution(nodes_[static_cast<std::size_t>(leaf_for(x))], x);
}

void HoeffdingTree::learn(std::span<const double> x, LabelId y, double weight) {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "tree input has wrong dimension");
  if (weight <= 0) return;
  const int li = leaf_for(x);
  auto& leaf = nodes_[static_cast<std::size_t>(li)];

  if (config_.leaf == LeafPrediction::NaiveBayesAdaptive && leaf.weight() > 0) {
    const auto mc = static_cast<LabelId>(argmax(leaf.class_weight));
    if (mc == y) leaf.mc_correct += weight;
    const auto nb = leaf.stats.empty() ? mc : *leaf.stats.predict(x);
    if (nb == y) leaf.nb_correct += weight;
  }

  const auto yi = static_cast<std::size_t>(y);
  if (leaf.class_weight.size() <= yi) leaf.class_weight.resize(yi + 1, 0.0);
  leaf.class_weight[yi] += weight;
  leaf.stats.add(x, y, weight);
  total_weight_ += weight;

  if (leaf.weight() - leaf.weight_at_last_attempt >= config_.grace_period) attempt_split(li);
}

std::vector<SplitCandidate> HoeffdingTree::evaluate_splits(const Node& leaf) const {
  std::vector<SplitCandidate> out;
  const auto& st = leaf.stats;
  const std::size_t nc = st.n_classes();
  std::vector<double> pre(nc);
  for (std::size_t c = 0; c < nc; ++c) pre[c] = st.class_weight(static_cast<LabelId>(c));

  out.push_back(SplitCandidate{-1, 0, 0, {}, {}});
  for (std::size_t a = 0; a < dim_; ++a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& e = st.estimator(static_cast<LabelId>(c), a);
      if (e.weight <= 0) continue;
      lo = std::min(lo, e.min);
      hi = std::max(hi, e.max);
    }
    if (!(lo < hi)) continue;

    SplitCandidate best_here;
    best_here.attribute = static_cast<int>(a);
    best_here.merit = -1;
    const double step = (hi - lo) / (config_.n_thresholds + 1);
    for (int t = 1; t <= config_.n_thresholds; ++t) {
      const double thr = lo + step * t;
      std::vector<double> left(nc, 0.0), right(nc, 0.0);
      for (std::size_t c = 0; c < nc; ++c) {
        const auto& e = st.estimator(static_cast<LabelId>(c), a);
        if (e.weight <= 0) continue;
        const double p = e.cdf(thr);
        left[c] = e.weight * p;
        right[c] = e.weight * (1.0 - p);
      }
      const double merit = info_gain(pre, left, right);
      if (merit > best_here.merit) {
        best_here.threshold = thr;
        best_here.merit = merit;
        best_here.left_dist = std::move(left);
        best_here.right_dist = std::move(right);
      }
    }
    if (best_here.merit >= 0) out.push_back(std::move(best_here));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SplitCandidate& a, const SplitCandidate& b) { return a.merit > b.merit; });
  return out;
}

std::vector<SplitCandidate> HoeffdingTree::rank_splits(std::span<const double> x) const {
  return evaluate_splits(nodes_[static_cast<std::size_t>(leaf_for(x))]);
}

void HoeffdingTree::attempt_split(int leaf_index) {
  auto& leaf = nodes_[static_cast<std::size_t>(leaf_index)];
  leaf.weight_at_last_attempt = leaf.weight();
  const auto observed = std::count_if(leaf.class_weight.begin(), leaf.class_weight.end(),
                                      [](double w) { return w > 0; });
  if (observed < 2) return;

  const auto candidates = evaluate_splits(leaf);
  if (candidates.size() < 2) return;
  const auto& best = candidates[0];
  const auto& second = candidates[1];
  const double range = std::log2(static_cast<double>(std::max<std::ptrdiff_t>(observed, 2)));
  const double eps = hoeffding_bound(range, config_.delta, leaf.weight());
  if (best.attribute < 0 || best.merit <= 0) return;
  if (!(best.merit - second.merit > eps || eps < config_.tie_threshold)) return;

  Node left, right;
  left.depth = right.depth = leaf.depth + 1;
  left.class_weight = best.left_dist;
  right.class_weight = best.right_dist;
  left.stats = GaussianClassStats(dim_, variance_floor_);
  right.stats = GaussianClassStats(dim_, variance_floor_);
  left.weight_at_last_attempt = left.weight();
  right.weight_at_last_attempt = right.weight();

  const int attribute = best.attribute;
  const double threshold = best.threshold;
  const auto li = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(left));
  nodes_.push_back(std::move(right));

  auto& parent = nodes_[static_cast<std::size_t>(leaf_index)];
  parent.attribute = attribute;
  parent.threshold = threshold;
  parent.left = li;
  parent.right = li + 1;
  parent.stats = GaussianClassStats();
}

std::size_t HoeffdingTree::n_leaves() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t HoeffdingTree::depth() const noexcept {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return static_cast<std::size_t>(d);
}

nlohmann::json HoeffdingTree::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  j["variance_floor"] = variance_floor_;
  j["total_weight"] = total_weight_;
  j["config"] = {{"delta", config_.delta},
                 {"grace_period", config_.grace_period},
                 {"tie_threshold", config_.tie_threshold},
                 {"n_thresholds", config_.n_thresholds},
                 {"leaf", static_cast<int>(config_.leaf)}};
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nlohmann::json jn = {{"attribute", n.attribute}, {"threshold", n.threshold}, {"left", n.left},
                         {"right", n.right},         {"depth", n.depth},         {"class_weight", n.class_weight},
                         {"last_attempt", n.weight_at_last_attempt},
                         {"mc_correct", n.mc_correct}, {"nb_correct", n.nb_correct}};
    if (n.is_leaf()) jn["stats"] = n.stats.to_json();
    nodes.push_back(std::move(jn));
  }
  return j;
}

HoeffdingTree HoeffdingTree::from_json(const nlohmann::json& j) {
  HoeffdingTree t;
  t.dim_ = j.at("dim").get<std::size_t>();
  t.variance_floor_ = j.at("variance_floor").get<double>();
  t.total_weight_ = j.at("total_weight").get<double>();
  const auto& c = j.at("config");
  t.config_.delta = c.at("delta").get<double>();
  t.config_.grace_period = c.at("grace_period").get<double>();
  t.config_.tie_threshold = c.at("tie_threshold").get<double>();
  t.config_.n_thresholds = c.at("n_thresholds").get<int>();
  t.config_.leaf = static_cast<LeafPrediction>(c.at("leaf").get<int>());
  for (const auto& jn : j.at("nodes")) {
    Node n;
    n.attribute = jn.at("attribute").get<int>();
    n.threshold = jn.at("threshold").get<double>();
    n.left = jn.at("left").get<int>();
    n.right = jn.at("right").get<int>();
    n.depth = jn.at("depth").get<int>();
    n.class_weight = jn.at("class_weight").get<std::vector<double>>();
    n.weight_at_last_attempt = jn.at("last_attempt").get<double>();
    n.mc_correct = jn.at("mc_correct").get<double>();
    n.nb_correct = jn.at("nb_correct").get<double>();
    if (jn.contains("stats")) n.stats = GaussianClassStats::from_json(jn.at("stats"));
    t.nodes_.push_back(std::move(n));
  }
  if (t.nodes_.empty()) throw Error(ErrorCode::SnapshotFormat, "tree snapshot has no nodes");
  return t;
}

}  // namespace streamhar
