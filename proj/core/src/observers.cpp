#include "qavg/observers.hpp"

#include "qavg/csv.hpp"
#include "qavg/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qavg {

std::vector<std::int64_t> log_checkpoints(std::int64_t horizon, int per_decade) {
  if (horizon < 1) throw ParameterError("horizon must be at least 1");
  if (per_decade < 1) throw ParameterError("need at least one checkpoint per decade");
  std::vector<std::int64_t> out{1};
  const double top = std::log10(static_cast<double>(horizon));
  for (int k = 1; static_cast<double>(k) / per_decade < top; ++k) {
    auto t = static_cast<std::int64_t>(std::llround(std::pow(10.0, static_cast<double>(k) / per_decade)));
    if (t > out.back() && t < horizon) out.push_back(t);
  }
  if (out.back() != horizon) out.push_back(horizon);
  return out;
}

ErrorCurveRecorder::ErrorCurveRecorder(Vector q_star, std::vector<std::int64_t> checkpoints)
    : q_star_(std::move(q_star)), checkpoints_(std::move(checkpoints)) {
  if (!std::is_sorted(checkpoints_.begin(), checkpoints_.end())) {
    throw ParameterError("checkpoints must be ascending");
  }
  points_.reserve(checkpoints_.size());
}

void ErrorCurveRecorder::observe(const RunState& state) {
  if (next_ >= checkpoints_.size() || checkpoints_[next_] != state.t) return;
  double err = linf(Vector(state.q - q_star_));
  double err_avg = state.n_averaged > 0 ? linf(Vector(state.q_bar - q_star_))
                                         : std::numeric_limits<double>::quiet_NaN();
  points_.push_back({state.t, err, err_avg});
  while (next_ < checkpoints_.size() && checkpoints_[next_] <= state.t) ++next_;
}

void ErrorCurveRecorder::write_csv(std::ostream& out) const {
  CsvWriter csv(out);
  csv.header({"t", "linf_error", "linf_error_avg"});
  for (const auto& p : points_) csv.row(p.t, p.linf_error, p.linf_error_avg);
}

PartialSumRecorder::PartialSumRecorder(Index dim) : running_(Vector::Zero(dim)), every_(true) {}

PartialSumRecorder::PartialSumRecorder(Index dim, std::vector<std::int64_t> at)
    : running_(Vector::Zero(dim)), every_(false), at_(std::move(at)) {
  std::sort(at_.begin(), at_.end());
  at_.erase(std::unique(at_.begin(), at_.end()), at_.end());
}

void PartialSumRecorder::observe(const RunState& state) {
  running_ += state.q;
  record_.horizon = state.t;
  if (every_) {
    record_.sums.emplace(state.t, running_);
    return;
  }
  while (next_ < at_.size() && at_[next_] < state.t) ++next_;
  if (next_ < at_.size() && at_[next_] == state.t) record_.sums.emplace(state.t, running_);
}

}  // namespace qavg
