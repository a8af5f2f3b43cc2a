#include "streamhar/learners.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "streamhar/classifiers.hpp"
#include "streamhar/error.hpp"

namespace streamhar {

namespace {
constexpr const char* kSnapshotFormat = "streamhar-model";
constexpr int kSnapshotVersion = 1;
}  // namespace

std::string_view algorithm_id(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::IKNN: return "iknn";
    case Algorithm::IDT: return "idt";
    case Algorithm::IRF: return "irf";
    case Algorithm::IAdaBoost: return "iadaboost";
    case Algorithm::INB: return "inb";
    case Algorithm::LearnNSE: return "learnnse";
  }
  return "?";
}

std::string_view algorithm_display(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::IKNN: return "IKNN";
    case Algorithm::IDT: return "IDT";
    case Algorithm::IRF: return "IRF";
    case Algorithm::IAdaBoost: return "IAdaBoost";
    case Algorithm::INB: return "INB";
    case Algorithm::LearnNSE: return "Learn++NSE";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view id) {
  for (Algorithm a : kAllAlgorithms)
    if (algorithm_id(a) == id) return a;
  if (id == "nse" || id == "learn++nse") return Algorithm::LearnNSE;
  if (id == "adaboost") return Algorithm::IAdaBoost;
  throw Error(ErrorCode::UnknownAlgorithm, "unknown algorithm '" + std::string(id) + "'");
}

nlohmann::json to_json(const LearnerConfig& c) {
  return {{"dim", c.dim},
          {"seed", c.seed},
          {"variance_floor", c.variance_floor},
          {"knn_k", c.knn_k},
          {"knn_capacity", c.knn_capacity},
          {"tree_delta", c.tree.delta},
          {"tree_grace_period", c.tree.grace_period},
          {"tree_tie_threshold", c.tree.tie_threshold},
          {"tree_thresholds", c.tree.n_thresholds},
          {"tree_leaf", c.tree.leaf == LeafPrediction::MajorityClass ? "mc"
                        : c.tree.leaf == LeafPrediction::NaiveBayes  ? "nb"
                                                                     : "nba"},
          {"forest_size", c.forest_size},
          {"forest_subset", c.forest_subset},
          {"boost_stages", c.boost_stages},
          {"nse_chunk", c.nse_chunk},
          {"nse_slope", c.nse_slope},
          {"nse_offset", c.nse_offset},
          {"nse_error_floor", c.nse_error_floor}};
}

LearnerConfig learner_config_from_json(const nlohmann::json& j, LearnerConfig c) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("dim", c.dim);
  take("seed", c.seed);
  take("variance_floor", c.variance_floor);
  take("knn_k", c.knn_k);
  take("knn_capacity", c.knn_capacity);
  take("tree_delta", c.tree.delta);
  take("tree_grace_period", c.tree.grace_period);
  take("tree_tie_threshold", c.tree.tie_threshold);
  take("tree_thresholds", c.tree.n_thresholds);
  if (j.contains("tree_leaf")) {
    const auto leaf = j.at("tree_leaf").get<std::string>();
    if (leaf == "mc") c.tree.leaf = LeafPrediction::MajorityClass;
    else if (leaf == "nb") c.tree.leaf = LeafPrediction::NaiveBayes;
    else if (leaf == "nba") c.tree.leaf = LeafPrediction::NaiveBayesAdaptive;
    else throw Error(ErrorCode::InvalidArgument, "tree_leaf must be mc, nb or nba");
  }
  take("forest_size", c.forest_size);
  take("forest_subset", c.forest_subset);
  take("boost_stages", c.boost_stages);
  take("nse_chunk", c.nse_chunk);
  take("nse_slope", c.nse_slope);
  take("nse_offset", c.nse_offset);
  take("nse_error_floor", c.nse_error_floor);
  return c;
}

Prediction prediction_from_scores(std::span<const double> scores) {
  Prediction p;
  p.label = static_cast<LabelId>(argmax(scores));
  p.scores.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    p.scores.push_back({static_cast<LabelId>(i), scores[i]});
  return p;
}

std::optional<Prediction> OnlineClassifier::predict(std::span<const double> x) const {
  if (x.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(dim_) + " features, got " + std::to_string(x.size()));
  if (seen_ == 0) return std::nullopt;
  return do_predict(x);
}

void OnlineClassifier::learn(std::span<const double> x, LabelId y) {
  if (x.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(dim_) + " features, got " + std::to_string(x.size()));
  if (y < 0) throw Error(ErrorCode::InvalidArgument, "class ids are non-negative");
  do_learn(x, y);
  ++seen_;
}

nlohmann::json OnlineClassifier::snapshot() const {
  return {{"format", kSnapshotFormat},
          {"v", kSnapshotVersion},
          {"algo", algorithm_id(algorithm())},
          {"dim", dim_},
          {"seen", seen_},
          {"state", save_state()}};
}

void OnlineClassifier::save(std::ostream& os) const { os << snapshot().dump() << '\n'; }

std::unique_ptr<OnlineClassifier> make_classifier(Algorithm a, const LearnerConfig& config) {
  if (config.dim == 0) throw Error(ErrorCode::InvalidArgument, "learner dimension must be positive");
  switch (a) {
    case Algorithm::IKNN: return std::make_unique<IncrementalKnn>(config);
    case Algorithm::IDT: return std::make_unique<IncrementalDecisionTree>(config);
    case Algorithm::IRF: return std::make_unique<IncrementalRandomForest>(config);
    case Algorithm::IAdaBoost: return std::make_unique<IncrementalAdaBoost>(config);
    case Algorithm::INB: return std::make_unique<IncrementalNaiveBayes>(config);
    case Algorithm::LearnNSE: return std::make_unique<LearnNse>(config);
  }
  throw Error(ErrorCode::UnknownAlgorithm, "unknown algorithm");
}

std::unique_ptr<OnlineClassifier> load_classifier(const nlohmann::json& snap) {
  try {
    if (snap.at("format").get<std::string>() != kSnapshotFormat)
      throw Error(ErrorCode::SnapshotFormat, "not a model snapshot");
    if (snap.at("v").get<int>() != kSnapshotVersion)
      throw Error(ErrorCode::SnapshotFormat, "unsupported snapshot version");
    LearnerConfig cfg;
    cfg.dim = snap.at("dim").get<std::size_t>();
    auto model = make_classifier(parse_algorithm(snap.at("algo").get<std::string>()), cfg);
    model->load_state(snap.at("state"));
    model->seen_ = snap.at("seen").get<std::uint64_t>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SnapshotFormat, std::string("malformed snapshot: ") + e.what());
  }
}

std::unique_ptr<OnlineClassifier> load_classifier(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SnapshotFormat, std::string("unreadable snapshot: ") + e.what());
  }
  return load_classifier(j);
}

double hoeffding_bound(double range, double delta, double n) {
  if (!(range > 0)) throw Error(ErrorCode::InvalidArgument, "Hoeffding range must be positive");
  if (!(delta > 0 && delta < 1)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  if (!(n >= 1)) throw Error(ErrorCode::InvalidArgument, "Hoeffding bound needs n >= 1");
  return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

std::uint64_t online_bagging_sample(double lambda, std::mt19937_64& rng) {
  if (!(lambda > 0) || !std::isfinite(lambda)) return 0;
  // fresh distribution per draw so no cached state outlives the call
  std::poisson_distribution<std::uint64_t> dist(lambda);
  return dist(rng);
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng(std::mt19937_64& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw Error(ErrorCode::SnapshotFormat, "bad generator state");
}

}  // namespace streamhar
