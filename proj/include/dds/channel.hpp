#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dds/parallel.hpp"
#include "dds/params.hpp"
#include "dds/waveform.hpp"

namespace dds {

/// Horn main lobe, Gaussian in dB: G(theta) = G0 - 3 (theta / (bw / 2))^2,
/// clipped from below at the side/back-lobe floor. theta is the angle off
/// boresight.
struct BeamPattern {
  double boresight_elevation_deg = 0.0;
  double boresight_azimuth_deg = 0.0;  // relative to the direction of travel
  double gain_dbi = 20.0;
  double beamwidth_3db_deg = 15.0;
  double floor_dbi = -10.0;
};

/// Gain in dBi toward (azimuth, elevation), both relative to the direction of
/// travel and the horizon.
double horn_gain_db(const BeamPattern& beam, double azimuth_deg, double elevation_deg);

enum class PathKind { Los, Wall, Truck, Ground };

const char* to_string(PathKind kind);

/// Planar rectangular reflector origin + a*edge_u + b*edge_v, a, b in [0, 1].
struct Reflector {
  std::string name;
  PathKind kind = PathKind::Wall;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d edge_u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d edge_v = Eigen::Vector3d::UnitZ();
  double loss_db = 6.0;
  bool enabled = true;
};

/// Drive-by street-canyon geometry. x runs along the street toward the
/// crossroads, z is height; the trigger fires at t = 0.
struct ScenarioConfig {
  Eigen::Vector3d rx_position{0.0, 0.0, 5.0};
  Eigen::Vector3d tx_start_position{-41.0, -3.0, 2.0};  // z = TX antenna height
  Eigen::Vector3d tx_velocity{14.0, 0.0, 0.0};
  double canyon_width_m = 20.0;
  double trigger_distance_m = 41.0;
  std::vector<Reflector> reflectors;
  double capture_start_s = 0.0;  // epoch of the RX record after the trigger
  double duration_s = 3.6;       // length of the RX record
  double noise_power_db = -77.0; // complex noise variance per sample, dB re 1
  double cfo_hz = 350.0;
  double rx_gain_dbi = -4.0;
  std::vector<BeamPattern> tx_beams;

  [[nodiscard]] double tx_antenna_height() const { return tx_start_position.z(); }
  [[nodiscard]] Eigen::Vector3d tx_position(double t) const { return tx_start_position + t * tx_velocity; }
  [[nodiscard]] double end_time() const { return capture_start_s + duration_s; }
};

/// Default scenario: canyon walls, parked truck, street surface; 0 and 15
/// degree beams.
ScenarioConfig default_drive_by();

/// Throws ConfigError if the scenario breaks a sounder constraint (speed,
/// record length, single-bounce excess path <= 16 m) or has too few beams.
void validate_scenario(const ScenarioConfig& sc, const SounderConfig& cfg);

struct Path {
  int id = 0;  // 0 = LOS, 1 + reflector index otherwise
  PathKind kind = PathKind::Los;
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  Complex gain{};  // excludes the carrier phase exp(-j 2 pi fc delay)
  double departure_azimuth_deg = 0.0;
  double departure_elevation_deg = 0.0;
  bool visible = true;
};

struct PathSet {
  double time_s = 0.0;
  std::vector<Path> paths;  // LOS first
};

/// Visible single-bounce paths from TX `tx_index` at time t.
/// Throws DomainError if t lies outside [0, sc.end_time()].
PathSet scenario_paths(const ScenarioConfig& sc, const SounderConfig& cfg, double t, int tx_index);

/// All candidate paths (including image sources that are currently not
/// visible) from TX `tx_index` at time t, without range checking.
std::vector<Path> scenario_paths_all(const ScenarioConfig& sc, const SounderConfig& cfg, double t,
                                     int tx_index);

/// Time-varying channel for synthesis: paths of TX `tx_index` at time t.
using PathFunction = std::function<std::vector<Path>(double t, int tx_index)>;

struct SynthesisParams {
  double center_frequency_hz = 0.0;
  double sample_rate_hz = 0.0;
  std::int64_t start_sample = 0;  // absolute index; time = index / sample_rate
  std::int64_t length = 0;
  std::int64_t chunk_samples = 0; // geometry/noise block; one snapshot
  double cfo_hz = 0.0;
  double noise_power = 0.0;       // complex variance per sample
  std::uint64_t seed = 0;
};

/// Sum over TXs and paths of gain-weighted, band-limited delayed periodic
/// repetitions with carrier phase exp(-j 2 pi fc tau(t)), CFO rotation and
/// AWGN. Within each chunk the delay is linear in time (Doppler) and the
/// envelope delay is taken at the chunk centre. Noise is seeded per chunk, so
/// Serial and Parallel execution give bit-identical records.
SampledSignal synthesize(std::span<const SampledSignal> tx_periods, const PathFunction& paths,
                         const SynthesisParams& params, Execution exec = Execution::Parallel);

/// Direct per-sample evaluation of the same model (tone sums, no FFTs, no
/// phasor recursion, no noise). Slow; kept as a reference for tests.
SampledSignal synthesize_reference(std::span<const SampledSignal> tx_periods, const PathFunction& paths,
                                   const SynthesisParams& params);

/// RX record for the scenario's capture window.
SampledSignal apply_channel(std::span<const SampledSignal> tx_periods, const ScenarioConfig& sc,
                            const SounderConfig& cfg, std::uint64_t seed,
                            Execution exec = Execution::Parallel);

/// Standstill record for CFO measurement: TX parked at its start position.
SampledSignal standstill_record(std::span<const SampledSignal> tx_periods, const ScenarioConfig& sc,
                                const SounderConfig& cfg, double duration_s, std::uint64_t seed);

}  // namespace dds
