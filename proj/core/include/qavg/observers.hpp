#pragma once

#include "qavg/sa.hpp"
#include "qavg/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

namespace qavg {

/// Log-spaced iteration counts in [1, horizon]: round(10^(k / per_decade)),
/// deduplicated, always containing 1 and horizon.
std::vector<std::int64_t> log_checkpoints(std::int64_t horizon, int per_decade = 50);

/// Records ||Q_t - Q*||_inf and ||Qbar_t - Q*||_inf at fixed checkpoints.
class ErrorCurveRecorder : public TrajectoryObserver {
 public:
  struct Point {
    std::int64_t t;
    double linf_error;
    double linf_error_avg;
  };

  ErrorCurveRecorder(Vector q_star, std::vector<std::int64_t> checkpoints);

  void observe(const RunState& state) override;
  const std::vector<Point>& points() const { return points_; }

  /// Columns t,linf_error,linf_error_avg.
  void write_csv(std::ostream& out) const;

 private:
  Vector q_star_;
  std::vector<std::int64_t> checkpoints_;
  std::size_t next_ = 0;
  std::vector<Point> points_;
};

/// Partial sums S_t = sum_{j<=t} Q_j over all iterates (warm-up included),
/// stored at the requested iterations.
struct PartialSumRecord {
  std::int64_t horizon = 0;
  std::map<std::int64_t, Vector> sums;
};

class PartialSumRecorder : public TrajectoryObserver {
 public:
  /// Records at every iteration.
  explicit PartialSumRecorder(Index dim);
  /// Records only at the listed iterations.
  PartialSumRecorder(Index dim, std::vector<std::int64_t> at);

  void observe(const RunState& state) override;
  const PartialSumRecord& record() const { return record_; }

 private:
  Vector running_;
  bool every_;
  std::vector<std::int64_t> at_;
  std::size_t next_ = 0;
  PartialSumRecord record_;
};

}  // namespace qavg
