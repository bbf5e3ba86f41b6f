#include "fedglb/protocol.hpp"

#include "fedglb/errors.hpp"

namespace fedglb {

const char* msg_kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::delta_A_up: return "delta_A_up";
    case MsgKind::gradient_up: return "gradient_up";
    case MsgKind::model_down: return "model_down";
    case MsgKind::sync_down: return "sync_down";
    case MsgKind::stats_up: return "stats_up";
    case MsgKind::stats_down: return "stats_down";
    case MsgKind::one_ucb_round: return "one_ucb_round";
    default: return "unknown";
  }
}

void CommLedger::record(MsgKind kind, long long events, long long scalars) {
  if (events < 0 || scalars < 0)
    throw numeric_error("CommLedger::record: counts must be nonnegative");
  if (events == 0 && scalars == 0) return;
  events_ += events;
  scalars_ += scalars;
  auto& pk = per_kind_[static_cast<int>(kind)];
  pk.first += events;
  pk.second += scalars;
  log_.push_back({kind, events, scalars});
}

SyncCost meter_agd_sync(int num_clients, int dim, int iterations) {
  if (num_clients < 1 || dim < 1 || iterations < 1)
    throw numeric_error("meter_agd_sync: N, d, J must all be >= 1");
  const long long n = num_clients;
  const long long d = dim;
  const long long j = iterations;
  SyncCost c;
  c.events = n + n * j + n;
  c.scalars = n * d * d + j * 2 * n * d + n * (d * d + 2 * d);
  return c;
}

}  // namespace fedglb
