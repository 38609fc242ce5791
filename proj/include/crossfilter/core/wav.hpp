#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "crossfilter/core/error.hpp"

namespace crossfilter {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

struct WavData {
  std::vector<float> samples;  // mono, [-1, 1]
  std::uint32_t sample_rate = 44100;
};

namespace detail {

template <class T>
void put_le(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get_le(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace detail

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1] before quantizing.
inline void write_wav16(const std::string& path, const std::vector<float>& samples,
                        std::uint32_t sample_rate) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Errc::io_error, "cannot open for write: " + path);

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  f.write("RIFF", 4);
  detail::put_le<std::uint32_t>(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  detail::put_le<std::uint32_t>(f, 16);
  detail::put_le<std::uint16_t>(f, 1);  // PCM
  detail::put_le<std::uint16_t>(f, 1);  // mono
  detail::put_le<std::uint32_t>(f, sample_rate);
  detail::put_le<std::uint32_t>(f, sample_rate * 2);
  detail::put_le<std::uint16_t>(f, 2);
  detail::put_le<std::uint16_t>(f, 16);
  f.write("data", 4);
  detail::put_le<std::uint32_t>(f, data_bytes);
  for (float s : samples) {
    float c = s < -1.f ? -1.f : (s > 1.f ? 1.f : s);
    auto q = static_cast<std::int16_t>(std::lrint(c * 32767.f));
    detail::put_le<std::int16_t>(f, q);
  }
  require(f.good(), Errc::io_error, "short write: " + path);
}

/// Reads mono 16-bit PCM. Multi-channel input is averaged down to mono.
inline WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), Errc::io_error, "cannot open: " + path);

  char tag[5] = {0};
  f.read(tag, 4);
  require(std::strncmp(tag, "RIFF", 4) == 0, Errc::parse_error, "not a RIFF file: " + path);
  detail::get_le<std::uint32_t>(f);
  f.read(tag, 4);
  require(std::strncmp(tag, "WAVE", 4) == 0, Errc::parse_error, "not a WAVE file: " + path);

  WavData out;
  std::uint16_t channels = 0, bits = 0, format = 0;
  bool got_fmt = false;
  while (f.read(tag, 4)) {
    const std::uint32_t chunk = detail::get_le<std::uint32_t>(f);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      format = detail::get_le<std::uint16_t>(f);
      channels = detail::get_le<std::uint16_t>(f);
      out.sample_rate = detail::get_le<std::uint32_t>(f);
      detail::get_le<std::uint32_t>(f);
      detail::get_le<std::uint16_t>(f);
      bits = detail::get_le<std::uint16_t>(f);
      if (chunk > 16) f.seekg(chunk - 16, std::ios::cur);
      got_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      require(got_fmt, Errc::parse_error, "data chunk before fmt: " + path);
      require(format == 1 && bits == 16, Errc::parse_error,
              "only 16-bit PCM supported: " + path);
      require(channels >= 1, Errc::parse_error, "zero channels: " + path);
      const std::size_t n_frames = chunk / (2u * channels);
      out.samples.resize(n_frames);
      std::vector<std::int16_t> raw(static_cast<std::size_t>(channels));
      for (std::size_t i = 0; i < n_frames; ++i) {
        f.read(reinterpret_cast<char*>(raw.data()), 2 * channels);
        double acc = 0;
        for (std::int16_t s : raw) acc += s;
        out.samples[i] = static_cast<float>(acc / (32768.0 * channels));
      }
      require(f.good(), Errc::parse_error, "truncated data chunk: " + path);
      return out;
    } else {
      f.seekg(chunk + (chunk & 1), std::ios::cur);
    }
  }
  raise(Errc::parse_error, "no data chunk: " + path);
}

}  // namespace crossfilter
