#include "catch_amalgamated.hpp"
#include "coinsensus/bv_broadcast.hpp"
#include "test_support.hpp"

using namespace coinsensus;
using coinsensus::testing::broadcasts_of;
using coinsensus::testing::count_kind;

namespace {
const SystemParams p4 = SystemParams::validate(4, 1);
const SystemParams p7 = SystemParams::validate(7, 2);
const InstanceTag tag = InstanceTag::stage(1, 0);
}  // namespace

TEST_CASE("bv_init broadcasts the local value") {
  Effects fx;
  BvState st = bv_init(tag, Val::One, fx);
  auto msgs = broadcasts_of(fx);
  REQUIRE(msgs.size() == 1);
  CHECK(msgs[0].kind == MsgKind::Bval);
  CHECK(msgs[0].value == Val::One);
  CHECK(st.bin_values == 0);
  CHECK(st.echoed == val_bit(Val::One));
}

TEST_CASE("bv_init with skip_broadcast marks the value echoed silently") {
  Effects fx;
  BvState st = bv_init(tag, Val::Zero, fx, /*skip_broadcast=*/true);
  CHECK(fx.empty());
  CHECK(st.echoed == val_bit(Val::Zero));
}

TEST_CASE("echo fires at t+1 distinct senders, once") {
  Effects fx;
  BvState st = bv_init(tag, Val::One, fx);
  fx.clear();
  bv_on_bval(p4, st, 1, Val::Zero, fx);
  CHECK(broadcasts_of(fx).empty());  // 1 < t+1
  bv_on_bval(p4, st, 2, Val::Zero, fx);
  auto msgs = broadcasts_of(fx);
  REQUIRE(msgs.size() == 1);  // echo at exactly t+1 = 2
  CHECK(msgs[0].value == Val::Zero);
  fx.clear();
  bv_on_bval(p4, st, 3, Val::Zero, fx);  // 2t+1, but no second echo
  CHECK(broadcasts_of(fx).empty());
  CHECK(st.bin_values == val_bit(Val::Zero));
}

TEST_CASE("own value is never re-echoed") {
  Effects fx;
  BvState st = bv_init(tag, Val::One, fx);
  fx.clear();
  bv_on_bval(p4, st, 1, Val::One, fx);
  bv_on_bval(p4, st, 2, Val::One, fx);
  CHECK(broadcasts_of(fx).empty());  // already broadcast at init
}

TEST_CASE("delivery into bin_values at 2t+1 with notification") {
  Effects fx;
  BvState st = bv_init(tag, Val::One, fx);
  fx.clear();
  bv_on_bval(p4, st, 0, Val::One, fx);  // self-delivery counts
  bv_on_bval(p4, st, 1, Val::One, fx);
  CHECK(st.bin_values == 0);
  bv_on_bval(p4, st, 2, Val::One, fx);
  CHECK(st.bin_values == val_bit(Val::One));
  CHECK(count_kind(fx, Effect::Kind::BinValueAdded) == 1);
  fx.clear();
  bv_on_bval(p4, st, 3, Val::One, fx);  // growth is monotone, no re-notification
  CHECK(count_kind(fx, Effect::Kind::BinValueAdded) == 0);
}

TEST_CASE("per-sender duplicates are ignored") {
  Effects fx;
  BvState st = bv_init(tag, Val::One, fx);
  fx.clear();
  for (int i = 0; i < 5; ++i) bv_on_bval(p4, st, 1, Val::Zero, fx);
  CHECK(st.sender_count(Val::Zero) == 1);
  CHECK(broadcasts_of(fx).empty());
}

TEST_CASE("t byzantine senders alone never reach bin_values") {
  // Justification at the module level: at n=4, t=1 the lone byzantine
  // sender cannot push a value past either threshold by itself.
  Effects fx;
  BvState st = bv_init(tag, Val::One, fx);
  fx.clear();
  bv_on_bval(p4, st, 3, Val::Zero, fx);
  CHECK(st.bin_values == 0);
  CHECK(broadcasts_of(fx).empty());

  // n=7, t=2: two byzantine senders still sit below t+1 = 3.
  Effects fx7;
  BvState st7 = bv_init(tag, Val::One, fx7);
  fx7.clear();
  bv_on_bval(p7, st7, 5, Val::Zero, fx7);
  bv_on_bval(p7, st7, 6, Val::Zero, fx7);
  CHECK(st7.bin_values == 0);
  CHECK(broadcasts_of(fx7).empty());
}

TEST_CASE("n=7 thresholds are 3 and 5") {
  Effects fx;
  BvState st = bv_init(tag, Val::One, fx);
  fx.clear();
  for (Pid s = 1; s <= 2; ++s) bv_on_bval(p7, st, s, Val::Zero, fx);
  CHECK(broadcasts_of(fx).empty());
  bv_on_bval(p7, st, 3, Val::Zero, fx);
  CHECK(broadcasts_of(fx).size() == 1);  // echo at 3
  CHECK(st.bin_values == 0);
  bv_on_bval(p7, st, 4, Val::Zero, fx);
  CHECK(st.bin_values == 0);
  bv_on_bval(p7, st, 5, Val::Zero, fx);  // 5 distinct senders
  CHECK(st.bin_values == val_bit(Val::Zero));
}

TEST_CASE("steps are pure state transitions") {
  // Two identical replays produce identical states and effects.
  auto play = [] {
    Effects fx;
    BvState st = bv_init(tag, Val::One, fx);
    bv_on_bval(p4, st, 1, Val::Zero, fx);
    bv_on_bval(p4, st, 2, Val::Zero, fx);
    bv_on_bval(p4, st, 3, Val::One, fx);
    return std::pair{st.bin_values, broadcasts_of(fx)};
  };
  auto a = play();
  auto b = play();
  CHECK(a.first == b.first);
  REQUIRE(a.second.size() == b.second.size());
  for (std::size_t i = 0; i < a.second.size(); ++i) CHECK(a.second[i] == b.second[i]);
}
