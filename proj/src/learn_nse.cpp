#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamhar/classifiers.hpp"
#include "streamhar/error.hpp"

namespace streamhar {

double nse_weighted_beta(const NseMember& m, const NseParams& p) {
  if (m.betas.empty()) return 1.0;
  std::vector<double> omega(m.betas.size());
  for (std::size_t j = 0; j < m.betas.size(); ++j) {
    // j-th evaluation happened at tau = born + j, so tau - born = j
    omega[j] = 1.0 / (1.0 + std::exp(-p.slope * (static_cast<double>(j) - p.offset)));
  }
  const double norm = std::accumulate(omega.begin(), omega.end(), 0.0);
  double beta_bar = 0;
  for (std::size_t j = 0; j < m.betas.size(); ++j) beta_bar += omega[j] / norm * m.betas[j];
  return beta_bar;
}

LearnNse::LearnNse(const LearnerConfig& config)
    : OnlineClassifier(config.dim),
      chunk_(config.nse_chunk),
      params_{config.nse_slope, config.nse_offset, config.nse_error_floor},
      variance_floor_(config.variance_floor),
      warmup_(config.dim, config.variance_floor) {
  if (chunk_ == 0) throw Error(ErrorCode::InvalidArgument, "NSE chunk size must be positive");
  if (!(params_.error_floor > 0 && params_.error_floor < 0.5))
    throw Error(ErrorCode::InvalidArgument, "NSE error floor must lie in (0, 0.5)");
}

std::unique_ptr<OnlineClassifier> LearnNse::clone() const { return std::make_unique<LearnNse>(*this); }

std::optional<Prediction> LearnNse::ensemble_predict(std::span<const double> x) const {
  if (members_.empty()) return std::nullopt;
  std::vector<double> votes;
  double mass = 0;
  std::vector<std::size_t> labels;
  labels.reserve(members_.size());
  for (const auto& m : members_) {
    const auto label = static_cast<std::size_t>(*m.model.predict(x));
    labels.push_back(label);
    if (label >= votes.size()) votes.resize(label + 1, 0.0);
    votes[label] += m.weight;
    mass += m.weight;
  }
  // every member sits at chance: plain majority vote
  if (mass <= 0)
    for (std::size_t l : labels) votes[l] += 1.0;
  const double total = std::accumulate(votes.begin(), votes.end(), 0.0);
  for (double& v : votes) v /= total;
  return prediction_from_scores(votes);
}

void LearnNse::update(std::span<const std::pair<std::vector<double>, LabelId>> chunk) {
  if (chunk.empty()) throw Error(ErrorCode::EmptyChunk, "NSE update needs a non-empty chunk");
  ++t_;
  const std::size_t m = chunk.size();
  const double uniform = 1.0 / static_cast<double>(m);

  // (1) instance weights emphasise what the current ensemble gets wrong
  std::vector<double> dist(m, uniform);
  if (!members_.empty()) {
    std::vector<bool> correct(m);
    double err = 0;
    for (std::size_t i = 0; i < m; ++i) {
      correct[i] = ensemble_predict(chunk[i].first)->label == chunk[i].second;
      if (!correct[i]) err += uniform;
    }
    const double b = err / (1.0 - err);
    double sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
      dist[i] = uniform * (correct[i] ? b : 1.0);
      sum += dist[i];
    }
    if (sum > 0 && std::isfinite(sum)) {
      for (double& d : dist) d /= sum;
    } else {
      std::fill(dist.begin(), dist.end(), uniform);
    }
  }

  auto fit = [&](const std::vector<double>& weights) {
    GaussianClassStats model(dim(), variance_floor_);
    for (std::size_t i = 0; i < m; ++i)
      model.add(chunk[i].first, chunk[i].second, weights[i] * static_cast<double>(m));
    return model;
  };
  auto weighted_error = [&](const GaussianClassStats& model) {
    double e = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (*model.predict(chunk[i].first) != chunk[i].second) e += dist[i];
    return e;
  };

  // (2) new member on the chunk
  NseMember fresh;
  fresh.model = fit(dist);
  fresh.born = t_;
  members_.push_back(std::move(fresh));

  // (3)-(5) errors, discounted betas, voting weights
  for (auto& member : members_) {
    double e = weighted_error(member.model);
    if (member.born == t_ && e > 0.5) {
      member.model = fit(std::vector<double>(m, uniform));
      e = weighted_error(member.model);
    }
    e = std::clamp(e, params_.error_floor, 0.5);
    member.betas.push_back(e / (1.0 - e));
    member.weight = std::log(1.0 / nse_weighted_beta(member, params_));
  }
}

void LearnNse::do_learn(std::span<const double> x, LabelId y) {
  buffer_.emplace_back(std::vector<double>(x.begin(), x.end()), y);
  warmup_.add(x, y);
  if (buffer_.size() == chunk_) {
    update(buffer_);
    buffer_.clear();
    warmup_ = GaussianClassStats(dim(), variance_floor_);
  }
}

Prediction LearnNse::do_predict(std::span<const double> x) const {
  if (auto p = ensemble_predict(x)) return *p;
  return prediction_from_scores(warmup_.posterior(x));
}

nlohmann::json LearnNse::save_state() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& mbr : members_)
    members.push_back({{"model", mbr.model.to_json()}, {"born", mbr.born}, {"betas", mbr.betas},
                       {"weight", mbr.weight}});
  nlohmann::json buffer = nlohmann::json::array();
  for (const auto& [x, y] : buffer_) buffer.push_back({{"x", x}, {"y", y}});
  return {{"chunk", chunk_},
          {"slope", params_.slope},
          {"offset", params_.offset},
          {"error_floor", params_.error_floor},
          {"variance_floor", variance_floor_},
          {"t", t_},
          {"members", std::move(members)},
          {"buffer", std::move(buffer)},
          {"warmup", warmup_.to_json()}};
}

void LearnNse::load_state(const nlohmann::json& s) {
  chunk_ = s.at("chunk").get<std::size_t>();
  params_.slope = s.at("slope").get<double>();
  params_.offset = s.at("offset").get<double>();
  params_.error_floor = s.at("error_floor").get<double>();
  variance_floor_ = s.at("variance_floor").get<double>();
  t_ = s.at("t").get<std::size_t>();
  members_.clear();
  for (const auto& jm : s.at("members")) {
    NseMember mbr;
    mbr.model = GaussianClassStats::from_json(jm.at("model"));
    mbr.born = jm.at("born").get<std::size_t>();
    mbr.betas = jm.at("betas").get<std::vector<double>>();
    mbr.weight = jm.at("weight").get<double>();
    members_.push_back(std::move(mbr));
  }
  buffer_.clear();
  for (const auto& jb : s.at("buffer"))
    buffer_.emplace_back(jb.at("x").get<std::vector<double>>(), jb.at("y").get<LabelId>());
  warmup_ = GaussianClassStats::from_json(s.at("warmup"));
}

}  // namespace streamhar
