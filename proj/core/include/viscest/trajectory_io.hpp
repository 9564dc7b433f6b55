#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "viscest/dynamics.hpp"

namespace viscest {

/// Header block of a trajectory checkpoint file.
struct CheckpointHeader {
  std::string config_hash;
  int modes = 0;
  double dt = 0.0;
  double nu = 0.0;
  double noise_total = 0.0;
  double initial_energy = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  std::uint64_t counter_at_start = 0;  // stream counter at step 0 (after any warm-up)
  int noise_substeps = 1;
};

/// One record: (t, u_1..u_J, Q_t, M_t) followed by the remaining trace
/// accumulators needed to resume bit-exactly.
struct CheckpointRecord {
  std::int64_t step = 0;
  double t = 0.0;
  std::vector<double> u;
  double enstrophy_integral = 0.0;
  double martingale = 0.0;
  double quadratic_variation = 0.0;
  double sup_excess = 0.0;
  double sup_abs_martingale = 0.0;
};

struct CheckpointData {
  CheckpointHeader header;
  std::vector<CheckpointRecord> records;
};

/// Appends records as they are produced, flushing after each one.
class CheckpointWriter {
 public:
  /// Truncates `path` and writes the header.
  CheckpointWriter(const std::filesystem::path& path, const CheckpointHeader& header);
  /// Opens `path` for appending after `keep_records` complete records; used on resume.
  static CheckpointWriter reopen(const std::filesystem::path& path, const CheckpointData& data);

  void append(const CheckpointRecord& record);

 private:
  CheckpointWriter() = default;
  std::ofstream out_;
};

void write_checkpoint_header(std::ostream& out, const CheckpointHeader& header);
void write_checkpoint_record(std::ostream& out, const CheckpointRecord& record);

/// Parses a checkpoint; a truncated final line (interrupted write) is dropped.
CheckpointData read_checkpoint(std::istream& in);
CheckpointData read_checkpoint(const std::filesystem::path& path);

CheckpointRecord make_record(std::int64_t step, const TrajectorySample& sample);
EstimatorTrace trace_from_record(const CheckpointHeader& header, const CheckpointRecord& record,
                                 std::span<const double> alphas);

/// Columns t,energy,enstrophy,xi,nu_hat,M, preceded by a config-hash comment line.
void write_timeseries_csv(std::ostream& out, const std::string& config_hash,
                          std::span<const TrajectorySample> samples);

/// Same table rebuilt from checkpoint records.
std::vector<TrajectorySample> samples_from_checkpoint(const CheckpointData& data, std::span<const double> alphas);

}  // namespace viscest
