#include <doctest.h>

#include "fedglb/errors.hpp"
#include "fedglb/protocol.hpp"

using fedglb::CommLedger;
using fedglb::MsgKind;
using fedglb::meter_agd_sync;

TEST_CASE("ledger recording and additivity") {
  CommLedger ledger;
  ledger.record(MsgKind::delta_A_up, 3, 12);
  ledger.record(MsgKind::gradient_up, 3, 24);
  CHECK(ledger.events() == 6);
  CHECK(ledger.scalars() == 36);
  CHECK(ledger.events_of(MsgKind::delta_A_up) == 3);
  CHECK(ledger.scalars_of(MsgKind::gradient_up) == 24);

  // zero-count records are no-ops
  ledger.record(MsgKind::sync_down, 0, 0);
  CHECK(ledger.log().size() == 2);

  CHECK_THROWS_AS(ledger.record(MsgKind::sync_down, -1, 0), fedglb::numeric_error);
}

TEST_CASE("ledger replay reproduces the totals") {
  CommLedger ledger;
  ledger.record(MsgKind::stats_up, 5, 40);
  ledger.record(MsgKind::stats_down, 5, 40);
  ledger.record(MsgKind::one_ucb_round, 25, 125);
  long long events = 0;
  long long scalars = 0;
  for (const auto& rec : ledger.log()) {
    events += rec.events;
    scalars += rec.scalars;
  }
  CHECK(events == ledger.events());
  CHECK(scalars == ledger.scalars());
}

TEST_CASE("distributed update metering") {
  const auto c = meter_agd_sync(3, 2, 4);
  CHECK(c.events == 18);   // 3 + 12 + 3
  CHECK(c.scalars == 84);  // 12 + 48 + 24

  const auto unit = meter_agd_sync(1, 1, 1);
  CHECK(unit.events == 3);
  CHECK(unit.scalars == 6);

  CHECK_THROWS_AS(meter_agd_sync(0, 2, 4), fedglb::numeric_error);
}

TEST_CASE("doubling d scales scalar counts by the exact formula") {
  const int n = 4;
  const int j = 7;
  for (int d = 1; d <= 16; d *= 2) {
    const auto small = meter_agd_sync(n, d, j);
    const auto big = meter_agd_sync(n, 2 * d, j);
    const auto expect = [&](int dim) {
      return static_cast<long long>(n) * dim * dim + 2LL * j * n * dim +
             static_cast<long long>(n) * (static_cast<long long>(dim) * dim + 2 * dim);
    };
    CHECK(small.scalars == expect(d));
    CHECK(big.scalars == expect(2 * d));
    CHECK(small.events == big.events);  // events never depend on d
  }
}
