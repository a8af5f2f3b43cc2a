#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamhar/classifiers.hpp"
#include "streamhar/error.hpp"

namespace streamhar {

IncrementalKnn::IncrementalKnn(const LearnerConfig& config)
    : OnlineClassifier(config.dim), k_(config.knn_k), capacity_(config.knn_capacity) {
  if (k_ == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
}

std::unique_ptr<OnlineClassifier> IncrementalKnn::clone() const {
  return std::make_unique<IncrementalKnn>(*this);
}

void IncrementalKnn::do_learn(std::span<const double> x, LabelId y) {
  if (capacity_ > 0 && memory_.size() == capacity_) memory_.pop_front();
  memory_.push_back({std::vector<double>(x.begin(), x.end()), y, next_seq_++});
  max_label_ = std::max(max_label_, y);
}

Prediction IncrementalKnn::do_predict(std::span<const double> x) const {
  struct Hit {
    double dist;
    std::uint64_t seq;
    LabelId y;
  };
  std::vector<Hit> hits;
  hits.reserve(memory_.size());
  for (const auto& e : memory_) {
    double acc = 0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double diff = x[d] - e.x[d];
      acc += diff * diff;
    }
    hits.push_back({std::sqrt(acc), e.seq, e.y});
  }
  const std::size_t k = std::min(k_, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(),
                    [](const Hit& a, const Hit& b) { return a.dist < b.dist || (a.dist == b.dist && a.seq < b.seq); });

  const auto n_classes = static_cast<std::size_t>(max_label_ + 1);
  std::vector<double> votes(n_classes, 0.0), dist_sum(n_classes, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    votes[static_cast<std::size_t>(hits[i].y)] += 1.0;
    dist_sum[static_cast<std::size_t>(hits[i].y)] += hits[i].dist;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && votes[c] > 0 && dist_sum[c] < dist_sum[best]))
      best = c;
  }
  Prediction p;
  p.label = static_cast<LabelId>(best);
  for (std::size_t c = 0; c < n_classes; ++c)
    p.scores.push_back({static_cast<LabelId>(c), votes[c] / static_cast<double>(k)});
  return p;
}

nlohmann::json IncrementalKnn::save_state() const {
  nlohmann::json mem = nlohmann::json::array();
  for (const auto& e : memory_) mem.push_back({{"x", e.x}, {"y", e.y}, {"seq", e.seq}});
  return {{"k", k_}, {"capacity", capacity_}, {"next_seq", next_seq_}, {"max_label", max_label_},
          {"memory", std::move(mem)}};
}

void IncrementalKnn::load_state(const nlohmann::json& s) {
  k_ = s.at("k").get<std::size_t>();
  capacity_ = s.at("capacity").get<std::size_t>();
  next_seq_ = s.at("next_seq").get<std::uint64_t>();
  max_label_ = s.at("max_label").get<LabelId>();
  memory_.clear();
  for (const auto& e : s.at("memory")) {
    auto x = e.at("x").get<std::vector<double>>();
    if (x.size() != dim()) throw Error(ErrorCode::SnapshotFormat, "stored vector has wrong dimension");
    memory_.push_back({std::move(x), e.at("y").get<LabelId>(), e.at("seq").get<std::uint64_t>()});
  }
}

}  // namespace streamhar
