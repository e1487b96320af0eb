#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "svosim/common.hpp"
#include "svosim/rng.hpp"

namespace svosim {

// Episode action log. Fixed little-endian layout:
//   u32 magic, u32 version, u8 env, u8 n_agents, u16 reserved,
//   u32 steps, u64 world_seed, u64 map_hash, u64 final_state_hash,
//   steps*n_agents action bytes, u64 digest of everything before it.
// steps and final_state_hash are patched in by finalize(); replaying
// the actions from the recorded seed must reproduce final_state_hash.
struct ReplayHeader {
  EnvKind env = EnvKind::HarvestPatch;
  int n_agents = 0;
  uint32_t steps = 0;
  uint64_t seed = 0;
  uint64_t map_hash = 0;
  uint64_t final_hash = 0;
};

namespace replay_detail {
constexpr uint32_t kMagic = 0x50525653;  // "SVRP"
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderSize = 40;
constexpr size_t kStepsOffset = 12;
constexpr size_t kFinalHashOffset = 32;
}  // namespace replay_detail

class ReplayWriter {
 public:
  ReplayWriter(EnvKind env, int n_agents, uint64_t world_seed, uint64_t map_hash)
      : n_agents_(n_agents) {
    if (n_agents < 1 || n_agents > 255) throw ConfigError("replay: agent count out of range");
    auto put32 = [this](uint32_t v) { put(&v, 4); };
    auto put64 = [this](uint64_t v) { put(&v, 8); };
    put32(replay_detail::kMagic);
    put32(replay_detail::kVersion);
    const uint8_t env8 = static_cast<uint8_t>(env);
    const uint8_t n8 = static_cast<uint8_t>(n_agents);
    const uint16_t reserved = 0;
    put(&env8, 1);
    put(&n8, 1);
    put(&reserved, 2);
    put32(0);  // steps, patched later
    put64(world_seed);
    put64(map_hash);
    put64(0);  // final hash, patched later
  }

  void add_step(const std::vector<Action>& joint) {
    if (finalized_) throw std::logic_error("replay: add_step after finalize");
    if (static_cast<int>(joint.size()) != n_agents_) {
      throw std::invalid_argument("replay: joint action size mismatch");
    }
    for (Action a : joint) buf_.push_back(static_cast<uint8_t>(a));
    steps_ += 1;
  }

  void finalize(uint64_t final_state_hash) {
    if (finalized_) return;
    std::memcpy(buf_.data() + replay_detail::kStepsOffset, &steps_, 4);
    std::memcpy(buf_.data() + replay_detail::kFinalHashOffset, &final_state_hash, 8);
    const uint64_t digest = fnv1a64(buf_.data(), buf_.size());
    put(&digest, 8);
    finalized_ = true;
  }

  const std::vector<uint8_t>& buffer() const {
    if (!finalized_) throw std::logic_error("replay: buffer before finalize");
    return buf_;
  }

  void write_file(const std::string& path) const {
    const auto& b = buffer();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write replay: " + path);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!f) throw std::runtime_error("short write on replay: " + path);
  }

 private:
  void put(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  std::vector<uint8_t> buf_;
  int n_agents_ = 0;
  uint32_t steps_ = 0;
  bool finalized_ = false;
};

class ReplayReader {
 public:
  explicit ReplayReader(std::vector<uint8_t> data) : buf_(std::move(data)) { parse(); }

  static ReplayReader from_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read replay: " + path);
    std::vector<uint8_t> b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return ReplayReader(std::move(b));
  }

  const ReplayHeader& header() const { return header_; }
  int steps() const { return static_cast<int>(header_.steps); }

  std::vector<Action> step_actions(int t) const {
    if (t < 0 || t >= steps()) throw std::out_of_range("replay: step out of range");
    std::vector<Action> out(header_.n_agents);
    const size_t base = replay_detail::kHeaderSize +
                        static_cast<size_t>(t) * header_.n_agents;
    for (int i = 0; i < header_.n_agents; ++i) {
      out[i] = static_cast<Action>(buf_[base + i]);
    }
    return out;
  }

 private:
  void parse() {
    using namespace replay_detail;
    if (buf_.size() < kHeaderSize + 8) throw IntegrityError("replay: file too short for header");
    uint32_t magic = 0, version = 0;
    std::memcpy(&magic, buf_.data(), 4);
    std::memcpy(&version, buf_.data() + 4, 4);
    if (magic != kMagic) throw IntegrityError("replay: bad magic");
    if (version != kVersion) throw IntegrityError("replay: unsupported version");
    const uint8_t env8 = buf_[8];
    if (env8 > 1) throw IntegrityError("replay: unknown environment id");
    header_.env = static_cast<EnvKind>(env8);
    header_.n_agents = buf_[9];
    if (header_.n_agents < 1) throw IntegrityError("replay: zero agents");
    std::memcpy(&header_.steps, buf_.data() + kStepsOffset, 4);
    std::memcpy(&header_.seed, buf_.data() + 16, 8);
    std::memcpy(&header_.map_hash, buf_.data() + 24, 8);
    std::memcpy(&header_.final_hash, buf_.data() + kFinalHashOffset, 8);
    const size_t expect = kHeaderSize + static_cast<size_t>(header_.steps) * header_.n_agents + 8;
    if (buf_.size() != expect) {
      const size_t body = buf_.size() > kHeaderSize + 8 ? buf_.size() - kHeaderSize - 8 : 0;
      throw IntegrityError("replay: truncated at step " +
                           std::to_string(body / header_.n_agents) + " of " +
                           std::to_string(header_.steps));
    }
    uint64_t digest = 0;
    std::memcpy(&digest, buf_.data() + buf_.size() - 8, 8);
    if (digest != fnv1a64(buf_.data(), buf_.size() - 8)) {
      throw IntegrityError("replay: content digest mismatch");
    }
    const int max_action = action_count(header_.env);
    for (size_t i = kHeaderSize; i < buf_.size() - 8; ++i) {
      if (buf_[i] >= max_action) {
        throw IntegrityError("replay: invalid action code at byte " + std::to_string(i));
      }
    }
  }

  std::vector<uint8_t> buf_;
  ReplayHeader header_;
};

}  // namespace svosim
