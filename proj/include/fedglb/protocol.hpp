#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace fedglb {

// Directed client<->server message categories on the star network.
enum class MsgKind : int {
  delta_A_up = 0,    // covariance deltas uploaded at a sync
  gradient_up = 1,   // one per client per iterative-update round (gradient up,
                     // model back folded into the same event)
  model_down = 2,    // standalone model broadcast
  sync_down = 3,     // full state broadcast closing a sync
  stats_up = 4,      // raw sufficient statistics uploaded
  stats_down = 5,    // sufficient statistics broadcast
  one_ucb_round = 6, // per-round all-pairs sharing floor of the shared-model baseline
  kCount = 7,
};

const char* msg_kind_name(MsgKind k);

// Exact transfer accounting in both metrics: events (number of directed
// messages) and scalars (numbers carried). Counters only ever grow; the
// per-record log replays to the same totals.
class CommLedger {
 public:
  struct Record {
    MsgKind kind;
    long long events;
    long long scalars;
  };

  void record(MsgKind kind, long long events, long long scalars);

  long long events() const { return events_; }
  long long scalars() const { return scalars_; }
  long long events_of(MsgKind k) const { return per_kind_[static_cast<int>(k)].first; }
  long long scalars_of(MsgKind k) const { return per_kind_[static_cast<int>(k)].second; }
  const std::vector<Record>& log() const { return log_; }

 private:
  long long events_ = 0;
  long long scalars_ = 0;
  std::array<std::pair<long long, long long>, static_cast<int>(MsgKind::kCount)> per_kind_{};
  std::vector<Record> log_;
};

struct SyncCost {
  long long events;
  long long scalars;
};

// Cost of one distributed global update with J gradient-aggregation rounds:
//   events  = N (delta uploads) + N*J (one per client per round) + N (broadcast)
//   scalars = N d^2 + J * 2 N d + N (d^2 + 2d)
// Symmetric matrices travel as full d^2 scalars.
SyncCost meter_agd_sync(int num_clients, int dim, int iterations);

}  // namespace fedglb
