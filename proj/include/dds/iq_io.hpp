#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dds/rxproc.hpp"
#include "dds/tfanalysis.hpp"
#include "dds/waveform.hpp"

namespace dds::io {

// All binary formats are little-endian; see docs/formats.md.

/// Writes `bytes` to a temporary sibling and renames it over `path`.
/// Throws IoError naming the file on failure.
void write_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// DDS1: complex float64 IQ record.
void write_dds1(const std::filesystem::path& path, const SampledSignal& sig, std::uint32_t seed);
SampledSignal read_dds1(const std::filesystem::path& path, std::uint32_t* seed = nullptr);

/// DDG1: transfer function grid (Q x K complex, row-major).
void write_ddg1(const std::filesystem::path& path, const TransferFunctionGrid& H, std::uint64_t seed);
TransferFunctionGrid read_ddg1(const std::filesystem::path& path, std::uint64_t* seed = nullptr);

/// DDG2: real delay-Doppler grid with both axes.
void write_ddg2(const std::filesystem::path& path, const RealGrid& grid, std::uint64_t seed);
RealGrid read_ddg2(const std::filesystem::path& path, std::uint64_t* seed = nullptr);

/// CSV text with a header line; `columns` are equal-length series.
std::string csv(std::span<const std::string> header, std::span<const std::vector<double>> columns);

/// Peak list as JSON.
std::string peaks_json(const PeakList& peaks, std::uint64_t seed, const std::string& source);

}  // namespace dds::io
