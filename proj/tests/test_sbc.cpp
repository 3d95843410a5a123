#include "catch_amalgamated.hpp"
#include "coinsensus/s_broadcast.hpp"
#include "test_support.hpp"

using namespace coinsensus;
using coinsensus::testing::broadcasts_of;
using coinsensus::testing::count_kind;

namespace {
const SystemParams p4 = SystemParams::validate(4, 1);
const InstanceTag tag = InstanceTag::est(1);
}  // namespace

TEST_CASE("s_init with should_broadcast emits SVAL, flag stays false") {
  Effects fx;
  SbcState st = s_init(tag, Val::One, true, fx);
  auto msgs = broadcasts_of(fx);
  REQUIRE(msgs.size() == 1);
  CHECK(msgs[0].kind == MsgKind::Sval);
  CHECK(msgs[0].value == Val::One);
  CHECK_FALSE(st.svalue);
  CHECK(st.broadcast_done);
}

TEST_CASE("s_init without should_broadcast is silent") {
  Effects fx;
  SbcState st = s_init(tag, Val::Zero, false, fx);
  CHECK(fx.empty());
  CHECK_FALSE(st.broadcast_done);
  CHECK_FALSE(st.svalue);
}

TEST_CASE("echo at t+1, flag at 2t+1") {
  Effects fx;
  SbcState st = s_init(tag, Val::One, false, fx);
  fx.clear();
  s_on_sval(p4, st, 1, fx);
  CHECK(broadcasts_of(fx).empty());
  s_on_sval(p4, st, 3, fx);  // t+1 = 2 distinct senders, echo
  REQUIRE(broadcasts_of(fx).size() == 1);
  CHECK(broadcasts_of(fx)[0].value == Val::One);
  CHECK_FALSE(st.svalue);
  s_on_sval(p4, st, 0, fx);  // own echo delivered back: 3 = 2t+1
  CHECK(st.svalue);
  CHECK(count_kind(fx, Effect::Kind::SvalueTrue) == 1);
}

TEST_CASE("one echo per instance lifetime and per-sender dedup") {
  Effects fx;
  SbcState st = s_init(tag, Val::One, true, fx);  // already broadcast at init
  fx.clear();
  for (int rep = 0; rep < 3; ++rep)
    for (Pid s = 1; s <= 2; ++s) s_on_sval(p4, st, s, fx);
  CHECK(broadcasts_of(fx).empty());  // no echo: broadcast_done was set at init
  CHECK(__builtin_popcountll(st.senders) == 2);
}

TEST_CASE("flag is monotone") {
  Effects fx;
  SbcState st = s_init(tag, Val::One, false, fx);
  for (Pid s = 0; s < 4; ++s) s_on_sval(p4, st, s, fx);
  CHECK(st.svalue);
  fx.clear();
  s_on_sval(p4, st, 2, fx);  // duplicates change nothing
  CHECK(st.svalue);
  CHECK(count_kind(fx, Effect::Kind::SvalueTrue) == 0);
}

TEST_CASE("t+1 initiators force the flag everywhere") {
  // Processes 0 and 1 initiate value 1; process 2 only watches. Deliver
  // every broadcast to all three and the flag must turn true at each.
  struct Node {
    SbcState st;
    Effects fx;
  };
  std::array<Node, 3> nodes;
  std::vector<Message> wire;
  for (Pid p = 0; p < 3; ++p) {
    nodes[p].st = s_init(tag, Val::One, /*should_broadcast=*/p < 2, nodes[p].fx);
    for (Message m : broadcasts_of(nodes[p].fx)) {
      m.sender = p;
      wire.push_back(m);
    }
    nodes[p].fx.clear();
  }
  // FIFO fan-out until quiescent.
  for (std::size_t i = 0; i < wire.size(); ++i) {
    for (Pid p = 0; p < 3; ++p) {
      s_on_sval(p4, nodes[p].st, wire[i].sender, nodes[p].fx);
      for (Message m : broadcasts_of(nodes[p].fx)) {
        m.sender = p;
        wire.push_back(m);
      }
      nodes[p].fx.clear();
    }
  }
  for (Pid p = 0; p < 3; ++p) CHECK(nodes[p].st.svalue);
}

TEST_CASE("a single initiator cannot force the flag without help") {
  Effects fx;
  SbcState st = s_init(tag, Val::One, true, fx);
  s_on_sval(p4, st, 0, fx);  // only its own SVAL comes back
  CHECK_FALSE(st.svalue);
}
