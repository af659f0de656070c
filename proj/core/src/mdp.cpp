#include "qavg/mdp.hpp"

#include "qavg/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace qavg {

using json = nlohmann::json;

RewardModel RewardModel::deterministic(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ParameterError("deterministic reward must lie in [0, 1]");
  }
  return {RewardKind::deterministic, value};
}

RewardModel RewardModel::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("bernoulli reward needs p in [0, 1]");
  return {RewardKind::bernoulli, p};
}

double RewardModel::mean() const {
  switch (kind) {
    case RewardKind::deterministic: return param;
    case RewardKind::uniform01: return 0.5;
    case RewardKind::bernoulli: return param;
  }
  return 0.0;
}

double RewardModel::variance() const {
  switch (kind) {
    case RewardKind::deterministic: return 0.0;
    case RewardKind::uniform01: return 1.0 / 12.0;
    case RewardKind::bernoulli: return param * (1.0 - param);
  }
  return 0.0;
}

double RewardModel::draw(RandomStream& rng) const {
  switch (kind) {
    case RewardKind::deterministic: return param;
    case RewardKind::uniform01: return rng.uniform();
    case RewardKind::bernoulli: return rng.uniform() < param ? 1.0 : 0.0;
  }
  return 0.0;
}

std::string_view to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::deterministic: return "deterministic";
    case RewardKind::uniform01: return "uniform01";
    case RewardKind::bernoulli: return "bernoulli";
  }
  return "unknown";
}

RewardKind reward_kind_from_string(std::string_view name) {
  if (name == "deterministic") return RewardKind::deterministic;
  if (name == "uniform01") return RewardKind::uniform01;
  if (name == "bernoulli") return RewardKind::bernoulli;
  throw ParameterError("unknown reward kind '" + std::string(name) + "'");
}

TabularMDP::TabularMDP(Index n_states, Index n_actions, double gamma, Matrix transitions,
                       std::vector<RewardModel> rewards)
    : n_states_(n_states),
      n_actions_(n_actions),
      gamma_(gamma),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)) {
  if (n_states < 1 || n_actions < 1) throw ParameterError("MDP needs at least one state and action");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("discount must lie strictly inside (0, 1)");
  const Index d = n_pairs();
  if (transitions_.rows() != d || transitions_.cols() != n_states) {
    throw ShapeError("transition matrix must be (S*A) x S");
  }
  if (static_cast<Index>(rewards_.size()) != d) throw ShapeError("need one reward model per pair");

  for (Index i = 0; i < d; ++i) {
    double sum = 0.0;
    for (Index s = 0; s < n_states; ++s) {
      double p = transitions_(i, s);
      if (!(p >= 0.0) || !std::isfinite(p)) throw ParameterError("transition probabilities must be nonnegative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ParameterError("transition rows must sum to 1");
  }
  for (const auto& r : rewards_) {
    if (!(r.param >= 0.0 && r.param <= 1.0)) throw ParameterError("reward parameters must lie in [0, 1]");
  }

  reward_mean_.resize(d);
  reward_variance_.resize(d);
  for (Index i = 0; i < d; ++i) {
    reward_mean_(i) = rewards_[i].mean();
    reward_variance_(i) = rewards_[i].variance();
  }

  cdf_.resize(d, n_states);
  for (Index i = 0; i < d; ++i) {
    double acc = 0.0;
    for (Index s = 0; s < n_states; ++s) {
      acc += transitions_(i, s);
      cdf_(i, s) = acc;
    }
    // Entries past the last positive probability are pinned to 1 so the
    // search below never runs off the row and never lands on a zero-mass state.
    Index last = n_states - 1;
    while (last > 0 && transitions_(i, last) == 0.0) --last;
    for (Index s = last; s < n_states; ++s) cdf_(i, s) = 1.0;
  }
}

TabularMDP TabularMDP::with_gamma(double gamma) const {
  return TabularMDP(n_states_, n_actions_, gamma, transitions_, rewards_);
}

bool operator==(const TabularMDP& a, const TabularMDP& b) {
  return a.n_states_ == b.n_states_ && a.n_actions_ == b.n_actions_ && a.gamma_ == b.gamma_ &&
         a.transitions_ == b.transitions_ && a.rewards_ == b.rewards_;
}

TabularMDP random_mdp(Index n_states, Index n_actions, double gamma, std::uint64_t seed,
                      RandomRewards reward_rule) {
  if (n_states < 1 || n_actions < 1) throw ParameterError("MDP needs at least one state and action");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("discount must lie strictly inside (0, 1)");
  RandomStream rng(seed);
  const Index d = n_states * n_actions;
  Matrix p(d, n_states);
  for (Index i = 0; i < d; ++i) {
    double sum = 0.0;
    for (Index s = 0; s < n_states; ++s) {
      p(i, s) = rng.uniform();
      sum += p(i, s);
    }
    p.row(i) /= sum;
  }
  std::vector<RewardModel> rewards;
  rewards.reserve(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    rewards.push_back(reward_rule == RandomRewards::uniform_means
                          ? RewardModel::deterministic(rng.uniform())
                          : RewardModel::uniform01());
  }
  return TabularMDP(n_states, n_actions, gamma, std::move(p), std::move(rewards));
}

void sample_generative(const TabularMDP& mdp, RandomStream& rng, GenerativeSample& out) {
  const Index d = mdp.n_pairs();
  const Index n_states = mdp.n_states();
  const Matrix& cdf = mdp.transition_cdf();
  const auto& rewards = mdp.rewards();
  out.reward_draw.resize(d);
  out.next_state.resize(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    out.reward_draw(i) = rewards[static_cast<std::size_t>(i)].draw(rng);
    double u = rng.uniform();
    Index s = 0;
    while (s + 1 < n_states && u >= cdf(i, s)) ++s;
    out.next_state[static_cast<std::size_t>(i)] = s;
  }
}

GenerativeSample sample_generative(const TabularMDP& mdp, RandomStream& rng) {
  GenerativeSample out;
  sample_generative(mdp, rng, out);
  return out;
}

std::string to_json(const TabularMDP& mdp) {
  json doc;
  doc["n_states"] = mdp.n_states();
  doc["n_actions"] = mdp.n_actions();
  doc["gamma"] = mdp.gamma();
  json rows = json::array();
  for (Index i = 0; i < mdp.n_pairs(); ++i) {
    json row = json::array();
    for (Index s = 0; s < mdp.n_states(); ++s) row.push_back(mdp.transitions()(i, s));
    rows.push_back(std::move(row));
  }
  doc["transitions"] = std::move(rows);
  json rewards = json::array();
  for (const auto& r : mdp.rewards()) {
    json entry{{"kind", std::string(to_string(r.kind))}};
    if (r.kind != RewardKind::uniform01) entry["param"] = r.param;
    rewards.push_back(std::move(entry));
  }
  doc["rewards"] = std::move(rewards);
  return doc.dump(2) + "\n";
}

TabularMDP mdp_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("malformed MDP document: ") + e.what());
  }
  try {
    const Index n_states = doc.at("n_states").get<Index>();
    const Index n_actions = doc.at("n_actions").get<Index>();
    const double gamma = doc.at("gamma").get<double>();
    const auto& rows = doc.at("transitions");
    if (n_states < 1 || n_actions < 1) throw ParameterError("MDP needs at least one state and action");
    const Index d = n_states * n_actions;
    if (!rows.is_array() || static_cast<Index>(rows.size()) != d) {
      throw ShapeError("transitions must list S*A rows");
    }
    Matrix p(d, n_states);
    for (Index i = 0; i < d; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Index>(row.size()) != n_states) {
        throw ShapeError("every transition row needs S entries");
      }
      for (Index s = 0; s < n_states; ++s) p(i, s) = row[static_cast<std::size_t>(s)].get<double>();
    }
    std::vector<RewardModel> rewards;
    for (const auto& entry : doc.at("rewards")) {
      RewardKind kind = reward_kind_from_string(entry.at("kind").get<std::string>());
      double param = kind == RewardKind::uniform01 ? 0.0 : entry.at("param").get<double>();
      rewards.push_back({kind, param});
    }
    return TabularMDP(n_states, n_actions, gamma, std::move(p), std::move(rewards));
  } catch (const json::exception& e) {
    throw ParameterError(std::string("invalid MDP document: ") + e.what());
  }
}

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << to_json(mdp);
}

TabularMDP load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return mdp_from_json(buf.str());
}

}  // namespace qavg
