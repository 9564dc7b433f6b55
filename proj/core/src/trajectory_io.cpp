#include "viscest/trajectory_io.hpp"

#include <istream>
#include <ostream>

#include "viscest/errors.hpp"
#include "viscest/text_format.hpp"

namespace viscest {

namespace {

constexpr std::string_view kMagic = "# viscest-checkpoint v1";

}  // namespace

void write_checkpoint_header(std::ostream& out, const CheckpointHeader& h) {
  out << kMagic << '\n'
      << "config_hash " << h.config_hash << '\n'
      << "modes " << h.modes << '\n'
      << "dt " << format_double(h.dt) << '\n'
      << "nu " << format_double(h.nu) << '\n'
      << "noise_total " << format_double(h.noise_total) << '\n'
      << "initial_energy " << format_double(h.initial_energy) << '\n'
      << "seed " << h.seed << '\n'
      << "stream " << h.stream << '\n'
      << "counter_at_start " << h.counter_at_start << '\n'
      << "noise_substeps " << h.noise_substeps << '\n'
      << "columns step t";
  for (int j = 1; j <= h.modes; ++j) out << " u_" << j;
  out << " Q M QV sup_excess sup_abs_M\n"
      << "end_header\n";
}

void write_checkpoint_record(std::ostream& out, const CheckpointRecord& r) {
  out << r.step << ' ' << format_double(r.t);
  for (double x : r.u) out << ' ' << format_double(x);
  out << ' ' << format_double(r.enstrophy_integral) << ' ' << format_double(r.martingale) << ' '
      << format_double(r.quadratic_variation) << ' ' << format_double(r.sup_excess) << ' '
      << format_double(r.sup_abs_martingale) << '\n';
}

CheckpointWriter::CheckpointWriter(const std::filesystem::path& path, const CheckpointHeader& header)
    : out_(path, std::ios::trunc) {
  if (!out_) throw FormatError("cannot open checkpoint " + path.string());
  write_checkpoint_header(out_, header);
  out_.flush();
}

CheckpointWriter CheckpointWriter::reopen(const std::filesystem::path& path, const CheckpointData& data) {
  // Rewrite header and the intact records so a torn final line disappears.
  CheckpointWriter w(path, data.header);
  for (const auto& r : data.records) write_checkpoint_record(w.out_, r);
  w.out_.flush();
  return w;
}

void CheckpointWriter::append(const CheckpointRecord& record) {
  write_checkpoint_record(out_, record);
  out_.flush();
}

CheckpointData read_checkpoint(std::istream& in) {
  CheckpointData data;
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw FormatError("checkpoint: missing header");
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end_header") {
      ended = true;
      break;
    }
    const auto tok = split_whitespace(line);
    if (tok.size() < 2) continue;
    auto& h = data.header;
    if (tok[0] == "config_hash") h.config_hash = std::string(tok[1]);
    else if (tok[0] == "modes") h.modes = static_cast<int>(parse_integer(tok[1]));
    else if (tok[0] == "dt") h.dt = parse_double(tok[1]);
    else if (tok[0] == "nu") h.nu = parse_double(tok[1]);
    else if (tok[0] == "noise_total") h.noise_total = parse_double(tok[1]);
    else if (tok[0] == "initial_energy") h.initial_energy = parse_double(tok[1]);
    else if (tok[0] == "seed") h.seed = static_cast<std::uint64_t>(std::stoull(std::string(tok[1])));
    else if (tok[0] == "stream") h.stream = static_cast<std::uint32_t>(parse_integer(tok[1]));
    else if (tok[0] == "counter_at_start") h.counter_at_start = std::stoull(std::string(tok[1]));
    else if (tok[0] == "noise_substeps") h.noise_substeps = static_cast<int>(parse_integer(tok[1]));
  }
  if (!ended) throw FormatError("checkpoint: header not terminated");
  const auto expected = static_cast<std::size_t>(data.header.modes) + 7;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // no trailing newline: the write was interrupted
    const auto tok = split_whitespace(line);
    if (tok.empty()) continue;
    if (tok.size() != expected) throw FormatError("checkpoint: record has wrong column count");
    CheckpointRecord r;
    r.step = parse_integer(tok[0]);
    r.t = parse_double(tok[1]);
    for (int j = 0; j < data.header.modes; ++j) r.u.push_back(parse_double(tok[2 + j]));
    const std::size_t o = 2 + static_cast<std::size_t>(data.header.modes);
    r.enstrophy_integral = parse_double(tok[o]);
    r.martingale = parse_double(tok[o + 1]);
    r.quadratic_variation = parse_double(tok[o + 2]);
    r.sup_excess = parse_double(tok[o + 3]);
    r.sup_abs_martingale = parse_double(tok[o + 4]);
    data.records.push_back(std::move(r));
  }
  return data;
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

CheckpointRecord make_record(std::int64_t step, const TrajectorySample& s) {
  if (s.u.empty()) throw DimensionError("checkpoint records need stored states");
  return {step,
          s.t,
          s.u,
          s.trace.enstrophy_integral,
          s.trace.martingale,
          s.trace.quadratic_variation,
          s.trace.sup_excess,
          s.trace.sup_abs_martingale};
}

EstimatorTrace trace_from_record(const CheckpointHeader& h, const CheckpointRecord& r,
                                 std::span<const double> alphas) {
  EstimatorTrace trace = start_trace(h.noise_total, h.initial_energy);
  trace.t = r.t;
  trace.enstrophy_integral = r.enstrophy_integral;
  trace.martingale = r.martingale;
  trace.quadratic_variation = r.quadratic_variation;
  trace.sup_excess = r.sup_excess;
  trace.sup_abs_martingale = r.sup_abs_martingale;
  trace.energy = observables(SpectralState{r.t, r.u}, alphas).energy;
  return trace;
}

void write_timeseries_csv(std::ostream& out, const std::string& config_hash,
                          std::span<const TrajectorySample> samples) {
  out << "# config_hash=" << config_hash << '\n' << "t,energy,enstrophy,xi,nu_hat,M\n";
  for (const auto& s : samples) {
    double x = std::nan("");
    double nh = std::nan("");
    if (s.trace.t > 0.0) {
      x = xi(s.trace);
      if (s.trace.enstrophy_integral > 0.0) nh = nu_hat(s.trace);
    }
    out << format_double(s.t) << ',' << format_double(s.obs.energy) << ',' << format_double(s.obs.enstrophy)
        << ',' << format_double(x) << ',' << format_double(nh) << ',' << format_double(s.trace.martingale)
        << '\n';
  }
}

std::vector<TrajectorySample> samples_from_checkpoint(const CheckpointData& data, std::span<const double> alphas) {
  std::vector<TrajectorySample> out;
  out.reserve(data.records.size());
  for (const auto& r : data.records) {
    TrajectorySample s;
    s.t = r.t;
    s.obs = observables(SpectralState{r.t, r.u}, alphas);
    s.trace = trace_from_record(data.header, r, alphas);
    s.u = r.u;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace viscest
