#include "config.hpp"

#include "qavg/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace qavg::cli {

using json = nlohmann::json;

namespace {

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    std::ostringstream os;
    auto pos = text_.find("\"" + key + "\"");
    if (pos != std::string::npos) os << "line " << locate(text_, pos).first << ": ";
    os << "field '" << key << "': " << message;
    throw ConfigError(os.str());
  }

  void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(where, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
      if (!ok.count(item.key())) fail(item.key(), "unknown field in " + where);
    }
  }

  double number(const json& obj, const std::string& key) const {
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const json& obj, const std::string& key, std::int64_t min_value) const {
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    auto x = v.get<std::int64_t>();
    if (x < min_value) fail(key, "must be at least " + std::to_string(min_value));
    return x;
  }

  std::uint64_t seed(const json& obj, const std::string& key) const {
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(key, "expected a nonnegative integer");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    auto x = v.get<std::int64_t>();
    if (x < 0) fail(key, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(x);
  }

  bool boolean(const json& obj, const std::string& key) const {
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const json& obj, const std::string& key) const {
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const json& obj, const std::string& key) const {
    const auto& v = obj.at(key);
    if (!v.is_array()) fail(key, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(key, "expected a list of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::int64_t> integers(const json& obj, const std::string& key) const {
    const auto& v = obj.at(key);
    if (!v.is_array()) fail(key, "expected a list of integers");
    std::vector<std::int64_t> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) fail(key, "expected a list of integers");
      out.push_back(x.get<std::int64_t>());
    }
    return out;
  }

 private:
  const std::string& text_;
};

void parse_mdp(const Reader& rd, const json& node, MdpSource& src) {
  rd.check_keys(node, "mdp", {"random", "file", "inline"});
  if (node.size() != 1) rd.fail("mdp", "give exactly one of random, file, inline");
  if (node.contains("random")) {
    const auto& r = node["random"];
    rd.check_keys(r, "random", {"n_states", "n_actions", "seed", "rewards"});
    src.kind = MdpSource::Kind::random;
    if (r.contains("n_states")) src.n_states = rd.integer(r, "n_states", 1);
    if (r.contains("n_actions")) src.n_actions = rd.integer(r, "n_actions", 1);
    if (r.contains("seed")) src.seed = rd.seed(r, "seed");
    if (r.contains("rewards")) {
      auto name = rd.string(r, "rewards");
      if (name == "uniform_means") {
        src.rewards = RandomRewards::uniform_means;
      } else if (name == "uniform_noise") {
        src.rewards = RandomRewards::uniform_noise;
      } else {
        rd.fail("rewards", "expected uniform_means or uniform_noise");
      }
    }
  } else if (node.contains("file")) {
    src.kind = MdpSource::Kind::file;
    src.path = rd.string(node, "file");
  } else {
    src.kind = MdpSource::Kind::inline_document;
    src.document = node["inline"].dump();
  }
}

void parse_schedule(const Reader& rd, const json& node, StepSchedule& schedule) {
  rd.check_keys(node, "schedule", {"kind", "alpha"});
  auto kind = rd.string(node, "kind");
  if (kind == "polynomial") {
    double alpha = node.contains("alpha") ? rd.number(node, "alpha") : 0.51;
    if (!(alpha > 0.0 && alpha < 1.0)) rd.fail("alpha", "must lie in (0, 1)");
    schedule = StepSchedule::polynomial(alpha);
  } else if (kind == "linear_rescaled") {
    schedule = StepSchedule::linear_rescaled();
  } else {
    rd.fail("kind", "expected polynomial or linear_rescaled");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = locate(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream os;
    os << "line " << line << ", column " << col << ": malformed JSON";
    throw ConfigError(os.str());
  }

  Reader rd(text);
  ExperimentConfig cfg;
  cfg.raw_text = text;
  cfg.base_dir = base_dir;
  rd.check_keys(doc, "config",
                {"mdp", "gamma", "gamma_sweep", "schedule", "T", "T_checkpoints", "n_trials",
                 "warmup_fraction", "epsilon", "level", "critical_value", "variant", "lambda",
                 "master_seed", "output_dir", "threads", "checkpoints_per_decade",
                 "all_coordinates", "full_var_q", "quantiles", "diagnose"});

  try {
    if (doc.contains("mdp")) parse_mdp(rd, doc["mdp"], cfg.mdp);
    if (doc.contains("gamma")) {
      cfg.gamma = rd.number(doc, "gamma");
      if (!(*cfg.gamma > 0.0 && *cfg.gamma < 1.0)) rd.fail("gamma", "must lie in (0, 1)");
    }
    if (doc.contains("gamma_sweep")) {
      const auto& sweep = doc["gamma_sweep"];
      if (sweep.is_object()) {
        rd.check_keys(sweep, "gamma_sweep", {"from", "to", "count"});
        double from = rd.number(sweep, "from");
        double to = rd.number(sweep, "to");
        auto count = rd.integer(sweep, "count", 1);
        for (std::int64_t i = 0; i < count; ++i) {
          cfg.gamma_sweep.push_back(count == 1 ? from
                                               : from + (to - from) * static_cast<double>(i) /
                                                            static_cast<double>(count - 1));
        }
      } else {
        cfg.gamma_sweep = rd.numbers(doc, "gamma_sweep");
      }
      for (double g : cfg.gamma_sweep) {
        if (!(g > 0.0 && g < 1.0)) rd.fail("gamma_sweep", "every discount must lie in (0, 1)");
      }
    }
    if (doc.contains("schedule")) parse_schedule(rd, doc["schedule"], cfg.schedule);
    if (doc.contains("T")) cfg.T = rd.integer(doc, "T", 1);
    if (doc.contains("T_checkpoints")) {
      cfg.T_checkpoints = rd.integers(doc, "T_checkpoints");
      if (cfg.T_checkpoints.empty()) rd.fail("T_checkpoints", "must not be empty");
      for (std::size_t i = 0; i < cfg.T_checkpoints.size(); ++i) {
        if (cfg.T_checkpoints[i] < 1 || (i > 0 && cfg.T_checkpoints[i] <= cfg.T_checkpoints[i - 1])) {
          rd.fail("T_checkpoints", "must be positive and strictly ascending");
        }
      }
    }
    if (doc.contains("n_trials")) cfg.n_trials = static_cast<long>(rd.integer(doc, "n_trials", 1));
    if (doc.contains("warmup_fraction")) {
      double w = rd.number(doc, "warmup_fraction");
      if (!(w >= 0.0 && w < 1.0)) rd.fail("warmup_fraction", "must lie in [0, 1)");
      cfg.warmup_fraction = w;
    }
    if (doc.contains("epsilon")) {
      cfg.epsilon = rd.number(doc, "epsilon");
      if (!(cfg.epsilon > 0.0)) rd.fail("epsilon", "must be positive");
    }
    if (doc.contains("level")) {
      cfg.level = rd.number(doc, "level");
      if (!(cfg.level > 0.0 && cfg.level < 1.0)) rd.fail("level", "must lie in (0, 1)");
    }
    if (doc.contains("critical_value")) {
      cfg.critical_value = rd.number(doc, "critical_value");
      if (!(*cfg.critical_value > 0.0)) rd.fail("critical_value", "must be positive");
    }
    if (doc.contains("variant")) {
      auto v = rd.string(doc, "variant");
      if (v == "plain") {
        cfg.variant = Variant::plain;
      } else if (v == "entropy") {
        cfg.variant = Variant::entropy;
      } else {
        rd.fail("variant", "expected plain or entropy");
      }
    }
    if (doc.contains("lambda")) {
      cfg.lambda = rd.number(doc, "lambda");
      if (!(*cfg.lambda > 0.0)) rd.fail("lambda", "must be positive");
    }
    if (cfg.variant == Variant::entropy && !cfg.lambda) {
      rd.fail("variant", "entropy variant needs a lambda");
    }
    if (doc.contains("master_seed")) cfg.master_seed = rd.seed(doc, "master_seed");
    if (doc.contains("output_dir")) cfg.output_dir = rd.string(doc, "output_dir");
    if (doc.contains("threads")) cfg.threads = static_cast<unsigned>(rd.integer(doc, "threads", 1));
    if (doc.contains("checkpoints_per_decade")) {
      cfg.checkpoints_per_decade = static_cast<int>(rd.integer(doc, "checkpoints_per_decade", 1));
    }
    if (doc.contains("all_coordinates")) cfg.all_coordinates = rd.boolean(doc, "all_coordinates");
    if (doc.contains("full_var_q")) cfg.full_var_q = rd.boolean(doc, "full_var_q");

    if (doc.contains("quantiles")) {
      const auto& q = doc["quantiles"];
      rd.check_keys(q, "quantiles", {"dim", "grid_size", "n_sims", "levels"});
      if (q.contains("dim")) cfg.quantiles.dim = rd.integer(q, "dim", 1);
      if (q.contains("grid_size")) cfg.quantiles.grid_size = rd.integer(q, "grid_size", 100);
      if (q.contains("n_sims")) cfg.quantiles.n_sims = static_cast<long>(rd.integer(q, "n_sims", 10000));
      if (q.contains("levels")) {
        cfg.quantiles.levels = rd.numbers(q, "levels");
        for (double l : cfg.quantiles.levels) {
          if (!(l > 0.0 && l < 1.0)) rd.fail("levels", "must lie in (0, 1)");
        }
      }
    }

    if (doc.contains("diagnose")) {
      const auto& dg = doc["diagnose"];
      rd.check_keys(dg, "diagnose", {"checks", "T_values", "ajt_pairs", "lambdas", "entropy_tol"});
      if (dg.contains("checks")) {
        const auto& checks = dg["checks"];
        if (!checks.is_array()) rd.fail("checks", "expected a list of names");
        cfg.diagnose.checks.clear();
        for (const auto& c : checks) {
          if (!c.is_string()) rd.fail("checks", "expected a list of names");
          auto name = c.get<std::string>();
          if (name != "ajt" && name != "uniform_approx" && name != "clt" && name != "entropy_bias") {
            rd.fail("checks", "unknown check '" + name + "'");
          }
          cfg.diagnose.checks.push_back(name);
        }
      }
      if (dg.contains("T_values")) {
        cfg.diagnose.T_values = rd.integers(dg, "T_values");
        for (auto t : cfg.diagnose.T_values) {
          if (t < 1) rd.fail("T_values", "must be positive");
        }
      }
      if (dg.contains("ajt_pairs")) {
        const auto& pairs = dg["ajt_pairs"];
        if (!pairs.is_array()) rd.fail("ajt_pairs", "expected a list of [j, T] pairs");
        for (const auto& p : pairs) {
          if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
            rd.fail("ajt_pairs", "expected a list of [j, T] pairs");
          }
          auto j = p[0].get<std::int64_t>();
          auto t = p[1].get<std::int64_t>();
          if (j < 0 || j > t) rd.fail("ajt_pairs", "need 0 <= j <= T");
          cfg.diagnose.ajt_pairs.emplace_back(j, t);
        }
      }
      if (dg.contains("lambdas")) {
        cfg.diagnose.lambdas = rd.numbers(dg, "lambdas");
        for (double l : cfg.diagnose.lambdas) {
          if (!(l > 0.0)) rd.fail("lambdas", "must be positive");
        }
      }
      if (dg.contains("entropy_tol")) cfg.diagnose.entropy_tol = rd.number(dg, "entropy_tol");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

TabularMDP make_mdp(const ExperimentConfig& config) {
  const auto& src = config.mdp;
  try {
    switch (src.kind) {
      case MdpSource::Kind::random:
        return random_mdp(src.n_states, src.n_actions, config.gamma.value_or(0.9), src.seed,
                          src.rewards);
      case MdpSource::Kind::file: {
        auto path = src.path.is_absolute() ? src.path : config.base_dir / src.path;
        TabularMDP mdp = load_mdp(path);
        return config.gamma ? mdp.with_gamma(*config.gamma) : mdp;
      }
      case MdpSource::Kind::inline_document: {
        TabularMDP mdp = mdp_from_json(src.document);
        return config.gamma ? mdp.with_gamma(*config.gamma) : mdp;
      }
    }
  } catch (const Error& e) {
    throw ConfigError(std::string("mdp: ") + e.what());
  }
  throw ConfigError("mdp: unknown source");
}

}  // namespace qavg::cli
