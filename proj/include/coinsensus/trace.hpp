#pragma once

#include <cstdint>
#include <string>

#include "coinsensus/core.hpp"

namespace coinsensus {

// 64-bit FNV-1a over the canonical JSONL byte stream.
struct Fnv1a64 {
  std::uint64_t hash = 0xcbf29ce484222325ull;

  void update(const char* data, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= static_cast<unsigned char>(data[i]);
      hash *= 0x100000001b3ull;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
};

// Canonical message encoding used in traces:
// {"kind":...,"tag":{"variant":...,"round":...,"phase":...},"value":...,"sender":...}
// with bot encoded as the string "bot". Field order is fixed.
inline void append_message_json(std::string& out, const Message& m) {
  out += "{\"kind\":\"";
  out += to_string(m.kind);
  out += "\",\"tag\":{\"variant\":\"";
  if (m.kind == MsgKind::AuxSet || m.kind == MsgKind::AuxBin) {
    out += "round\",\"round\":";
    out += std::to_string(m.tag.round);
  } else if (m.tag.kind == InstanceTag::Kind::Stage) {
    out += "stage\",\"round\":";
    out += std::to_string(m.tag.round);
    out += ",\"phase\":";
    out += std::to_string(m.tag.phase);
  } else {
    out += "est\",\"round\":";
    out += std::to_string(m.tag.round);
  }
  out += "},\"value\":";
  if (m.kind == MsgKind::AuxSet) {
    out += "[";
    bool first = true;
    for (Val v : {Val::Zero, Val::One, Val::Bot}) {
      if (!set_contains(m.set, v)) continue;
      if (!first) out += ",";
      out += v == Val::Bot ? "\"bot\"" : to_string(v);
      first = false;
    }
    out += "]";
  } else {
    out += m.value == Val::Bot ? "\"bot\"" : to_string(m.value);
  }
  out += ",\"sender\":";
  out += std::to_string(m.sender);
  out += "}";
}

// One TraceRecord per line; field order fixed so the byte stream (and its
// digest) is canonical.
class TraceBuilder {
 public:
  explicit TraceBuilder(bool keep_lines) : keep_lines_(keep_lines) {}

  void record(const char* event, const std::string& payload) {
    line_.clear();
    line_ += "{\"seq\":";
    line_ += std::to_string(seq_++);
    line_ += ",\"event\":\"";
    line_ += event;
    line_ += "\",\"payload\":";
    line_ += payload;
    line_ += "}\n";
    digest_.update(line_);
    if (keep_lines_) lines_ += line_;
  }

  std::uint64_t digest() const { return digest_.hash; }
  const std::string& lines() const { return lines_; }
  std::uint64_t seq() const { return seq_; }

 private:
  bool keep_lines_;
  std::uint64_t seq_ = 0;
  Fnv1a64 digest_;
  std::string line_;
  std::string lines_;
};

}  // namespace coinsensus
