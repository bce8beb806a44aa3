#include "dds/iq_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace dds::io {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

constexpr std::uint8_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }
  void magic(const char* m) { buf_.append(m, 4); }
  void zeros(std::size_t n) { buf_.append(n, '\0'); }
  void complexes(const Complex* p, std::size_t n) {
    buf_.append(reinterpret_cast<const char*>(p), n * sizeof(Complex));
  }
  [[nodiscard]] const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void expect_magic(const char* m) {
    need(4);
    if (std::memcmp(data_.data() + pos_, m, 4) != 0) fail(std::string("bad magic, expected ") + m);
    pos_ += 4;
    if (get<std::uint8_t>() != kVersion) fail("unsupported version");
    skip(3);
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  void complexes(Complex* out, std::size_t n) {
    need(n * sizeof(Complex));
    std::memcpy(reinterpret_cast<char*>(out), data_.data() + pos_, n * sizeof(Complex));
    pos_ += n * sizeof(Complex);
  }
  void finish() const {
    if (pos_ != data_.size()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& what) const { throw IoError(name_ + ": corrupt file (" + what + ")"); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("truncated");
  }
  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::string number(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_dds1(const std::filesystem::path& path, const SampledSignal& sig, std::uint32_t seed) {
  if (sig.size() > 0xFFFFFFFFu) throw IoError(path.string() + ": record too long for DDS1");
  Writer w;
  w.magic("DDS1");
  w.put<std::uint8_t>(kVersion);
  w.zeros(3);
  w.put<double>(sig.sample_rate_hz);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sig.size()));
  w.put<std::uint32_t>(seed);
  w.put<double>(sig.t0_s);
  w.complexes(sig.samples.data(), sig.size());
  write_atomic(path, w.bytes());
}

SampledSignal read_dds1(const std::filesystem::path& path, std::uint32_t* seed) {
  Reader r(read_file(path), path.string());
  r.expect_magic("DDS1");
  SampledSignal sig;
  sig.sample_rate_hz = r.get<double>();
  const auto n = r.get<std::uint32_t>();
  const auto s = r.get<std::uint32_t>();
  sig.t0_s = r.get<double>();
  sig.samples.resize(n);
  r.complexes(sig.samples.data(), n);
  r.finish();
  if (!(sig.sample_rate_hz > 0.0)) r.fail("sample rate");
  if (seed != nullptr) *seed = s;
  return sig;
}

void write_ddg1(const std::filesystem::path& path, const TransferFunctionGrid& H, std::uint64_t seed) {
  const auto Q = static_cast<std::size_t>(H.snapshots());
  const auto K = static_cast<std::size_t>(H.tones());
  if (H.tone_frequencies_hz.size() != K || H.snapshot_times_s.size() != Q || H.noise_power.size() != Q ||
      H.doppler_hz.size() != Q) {
    throw ShapeError("transfer function grid has inconsistent axes");
  }
  Writer w;
  w.magic("DDG1");
  w.put<std::uint8_t>(kVersion);
  w.zeros(3);
  w.put<std::uint64_t>(seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(Q));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(K));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(H.tx_index));
  w.put<std::uint32_t>(0);
  const double t0 = Q > 0 ? H.snapshot_times_s.front() : 0.0;
  const double dt = Q > 1 ? H.snapshot_times_s[1] - H.snapshot_times_s[0] : 0.0;
  w.put<double>(t0);
  w.put<double>(dt);
  for (double f : H.tone_frequencies_hz) w.put<double>(f);
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t k = 0; k < K; ++k) w.put<Complex>(H.values(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k)));
  }
  for (double v : H.noise_power) w.put<double>(v);
  for (double v : H.doppler_hz) w.put<double>(v);
  write_atomic(path, w.bytes());
}

TransferFunctionGrid read_ddg1(const std::filesystem::path& path, std::uint64_t* seed) {
  Reader r(read_file(path), path.string());
  r.expect_magic("DDG1");
  const auto s = r.get<std::uint64_t>();
  const auto Q = r.get<std::uint32_t>();
  const auto K = r.get<std::uint32_t>();
  TransferFunctionGrid H;
  H.tx_index = static_cast<int>(r.get<std::uint32_t>());
  r.skip(4);
  const double t0 = r.get<double>();
  const double dt = r.get<double>();
  H.tone_frequencies_hz.resize(K);
  for (auto& f : H.tone_frequencies_hz) f = r.get<double>();
  H.values.resize(Q, K);
  for (std::uint32_t q = 0; q < Q; ++q) {
    for (std::uint32_t k = 0; k < K; ++k) H.values(q, k) = r.get<Complex>();
  }
  H.noise_power.resize(Q);
  for (auto& v : H.noise_power) v = r.get<double>();
  H.doppler_hz.resize(Q);
  for (auto& v : H.doppler_hz) v = r.get<double>();
  r.finish();
  H.snapshot_times_s.resize(Q);
  for (std::uint32_t q = 0; q < Q; ++q) H.snapshot_times_s[q] = t0 + q * dt;
  if (seed != nullptr) *seed = s;
  return H;
}

void write_ddg2(const std::filesystem::path& path, const RealGrid& grid, std::uint64_t seed) {
  const auto R = static_cast<std::size_t>(grid.delay_bins());
  const auto C = static_cast<std::size_t>(grid.doppler_bins());
  if (grid.delay_axis_s.size() != R || grid.doppler_axis_hz.size() != C) {
    throw ShapeError("grid axes do not match its dimensions");
  }
  Writer w;
  w.magic("DDG2");
  w.put<std::uint8_t>(kVersion);
  w.zeros(3);
  w.put<std::uint64_t>(seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(R));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(C));
  w.put<double>(grid.window_start_s);
  for (double v : grid.delay_axis_s) w.put<double>(v);
  for (double v : grid.doppler_axis_hz) w.put<double>(v);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) w.put<double>(grid.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
  }
  write_atomic(path, w.bytes());
}

RealGrid read_ddg2(const std::filesystem::path& path, std::uint64_t* seed) {
  Reader r(read_file(path), path.string());
  r.expect_magic("DDG2");
  const auto s = r.get<std::uint64_t>();
  const auto R = r.get<std::uint32_t>();
  const auto C = r.get<std::uint32_t>();
  RealGrid g;
  g.window_start_s = r.get<double>();
  g.delay_axis_s.resize(R);
  for (auto& v : g.delay_axis_s) v = r.get<double>();
  g.doppler_axis_hz.resize(C);
  for (auto& v : g.doppler_axis_hz) v = r.get<double>();
  g.values.resize(R, C);
  for (std::uint32_t i = 0; i < R; ++i) {
    for (std::uint32_t j = 0; j < C; ++j) g.values(i, j) = r.get<double>();
  }
  r.finish();
  if (seed != nullptr) *seed = s;
  return g;
}

std::string csv(std::span<const std::string> header, std::span<const std::vector<double>> columns) {
  if (header.size() != columns.size()) throw ShapeError("CSV header and column counts differ");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw ShapeError("CSV columns differ in length");
  }
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + number(columns[i][r]);
    out += '\n';
  }
  return out;
}

std::string peaks_json(const PeakList& peaks, std::uint64_t seed, const std::string& source) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["source"] = source;
  j["peaks"] = nlohmann::ordered_json::array();
  for (const auto& p : peaks) {
    j["peaks"].push_back({{"delay_s", p.delay_s},
                          {"doppler_hz", p.doppler_hz},
                          {"power", p.power},
                          {"delay_bin", p.delay_bin},
                          {"doppler_bin", p.doppler_bin}});
  }
  return j.dump(2) + "\n";
}

}  // namespace dds::io
