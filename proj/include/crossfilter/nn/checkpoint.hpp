#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "crossfilter/core/error.hpp"
#include "crossfilter/core/rng.hpp"
#include "crossfilter/nn/model.hpp"
#include "crossfilter/nn/optimizer.hpp"

namespace crossfilter::nn {

/// Checkpoint file: everything needed to resume training exactly.
///
///   magic "CFCK" | version u32 | scalar_size u8 | repr_kind u8 | head_c u8 |
///   reserved u8 | n_classes u32 | n_blocks u32 | channels i32[n_blocks] |
///   epoch u32 | adam_step u64 | rng_state u64[4] | param_count u64 |
///   params Real[param_count] | adam_m Real[param_count] |
///   adam_v Real[param_count]
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class Real>
struct ModelCheckpoint {
  DualHeadModel<Real> model;
  AdamW<Real> optimizer;
  std::uint32_t epoch = 0;
  Rng rng;
  std::vector<int> channels;
};

template <class Real>
void save_checkpoint(const std::string& path, DualHeadModel<Real>& model, AdamW<Real>& opt,
                     std::uint32_t epoch, const Rng& rng, const std::vector<int>& channels) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Errc::io_error, "cannot open for write: " + path);
  auto put = [&](const void* p, std::size_t n) {
    f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  };
  f.write("CFCK", 4);
  const std::uint32_t version = kCheckpointVersion;
  put(&version, 4);
  const std::uint8_t scalar = sizeof(Real);
  const auto repr = static_cast<std::uint8_t>(model.repr_kind());
  const auto head = static_cast<std::uint8_t>(model.head_c_kind());
  const std::uint8_t reserved = 0;
  put(&scalar, 1);
  put(&repr, 1);
  put(&head, 1);
  put(&reserved, 1);
  const auto n_classes = static_cast<std::uint32_t>(model.n_classes());
  put(&n_classes, 4);
  const auto n_blocks = static_cast<std::uint32_t>(channels.size());
  put(&n_blocks, 4);
  for (int ch : channels) {
    const std::int32_t v = ch;
    put(&v, 4);
  }
  put(&epoch, 4);
  const std::uint64_t step = opt.step_count();
  put(&step, 8);
  const auto state = rng.state();
  put(state.data(), sizeof(state));

  std::uint64_t count = 0;
  auto blocks = model.params();
  for (const auto& b : blocks) count += b.n;
  put(&count, 8);
  for (const auto& b : blocks) put(b.param, b.n * sizeof(Real));
  require(opt.moment1().size() == count && opt.moment2().size() == count, Errc::io_error,
          "optimizer not attached to this model");
  put(opt.moment1().data(), count * sizeof(Real));
  put(opt.moment2().data(), count * sizeof(Real));
  require(f.good(), Errc::io_error, "short write: " + path);
}

template <class Real>
ModelCheckpoint<Real> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), Errc::io_error, "cannot open: " + path);
  auto get = [&](void* p, std::size_t n) {
    f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  };
  char magic[4];
  get(magic, 4);
  require(f.good() && std::memcmp(magic, "CFCK", 4) == 0, Errc::parse_error,
          "bad checkpoint magic: " + path);
  std::uint32_t version = 0;
  get(&version, 4);
  require(version == kCheckpointVersion, Errc::parse_error, "unsupported checkpoint version");
  std::uint8_t scalar = 0, repr = 0, head = 0, reserved = 0;
  get(&scalar, 1);
  get(&repr, 1);
  get(&head, 1);
  get(&reserved, 1);
  require(scalar == sizeof(Real), Errc::parse_error, "checkpoint scalar width mismatch");
  std::uint32_t n_classes = 0, n_blocks = 0;
  get(&n_classes, 4);
  get(&n_blocks, 4);
  require(n_blocks >= 1 && n_blocks <= 16, Errc::parse_error, "bad checkpoint block count");
  std::vector<int> channels(n_blocks);
  for (auto& ch : channels) {
    std::int32_t v = 0;
    get(&v, 4);
    ch = v;
  }
  ModelCheckpoint<Real> out;
  out.channels = channels;
  get(&out.epoch, 4);
  std::uint64_t step = 0;
  get(&step, 8);
  Rng::State state{};
  get(state.data(), sizeof(state));
  out.rng.set_state(state);

  Rng init_rng(0);  // weights are overwritten below
  out.model = DualHeadModel<Real>(n_classes, static_cast<dsp::RepKind>(repr),
                                  static_cast<HeadKind>(head) == HeadKind::sigmoid, channels,
                                  init_rng);
  std::uint64_t count = 0;
  get(&count, 8);
  auto blocks = out.model.params();
  std::uint64_t expect = 0;
  for (const auto& b : blocks) expect += b.n;
  require(count == expect, Errc::parse_error, "checkpoint parameter count mismatch");
  for (auto& b : blocks) get(b.param, b.n * sizeof(Real));
  out.optimizer.attach(out.model.params());
  get(out.optimizer.moment1().data(), count * sizeof(Real));
  get(out.optimizer.moment2().data(), count * sizeof(Real));
  out.optimizer.set_step_count(step);
  require(f.good(), Errc::parse_error, "truncated checkpoint: " + path);
  return out;
}

}  // namespace crossfilter::nn
