#include "viscest/basis_cache.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "viscest/errors.hpp"
#include "viscest/text_format.hpp"

namespace viscest {

namespace {

constexpr std::string_view kMagic = "# viscest-basis-cache";

std::string canonical(const ChannelGeometry& g) {
  std::ostringstream s;
  s << "a=" << format_double(g.period) << ";K=" << g.max_wavenumber << ";M=" << g.wall_order
    << ";J=" << g.modes << ";N1=" << g.grid_x1 << ";N2=" << g.grid_x2 << ";v=" << kBasisCacheVersion;
  return s.str();
}

}  // namespace

std::string basis_cache_key(const ChannelGeometry& geometry) { return fnv1a_hex(canonical(geometry.resolved())); }

std::string basis_cache_filename(const ChannelGeometry& geometry) {
  return "basis-" + basis_cache_key(geometry) + ".txt";
}

void save_basis(const StokesBasis& basis, std::ostream& out) {
  const ChannelGeometry& g = basis.geometry();
  out << kMagic << '\n'
      << "format_version " << kBasisCacheVersion << '\n'
      << "key " << basis_cache_key(g) << '\n'
      << "period " << format_double(g.period) << '\n'
      << "max_wavenumber " << g.max_wavenumber << '\n'
      << "wall_order " << g.wall_order << '\n'
      << "modes " << g.modes << '\n'
      << "grid_x1 " << g.grid_x1 << '\n'
      << "grid_x2 " << g.grid_x2 << '\n'
      << "columns index k parity alpha norm count coefficients...\n"
      << "end_header\n";
  for (int j = 0; j < basis.size(); ++j) {
    const StokesMode& m = basis.mode(j);
    out << "mode " << j << ' ' << m.k << ' ' << m.parity << ' ' << format_double(m.alpha) << ' '
        << format_double(m.norm) << ' ' << m.profile.size();
    for (double c : m.profile) out << ' ' << format_double(c);
    out << '\n';
  }
}

StokesBasis load_basis(std::istream& in, const ChannelGeometry& expected) {
  const ChannelGeometry want = expected.resolved();
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw FormatError("basis cache: missing header");
  std::string key;
  int version = -1;
  while (std::getline(in, line) && line != "end_header") {
    const auto tok = split_whitespace(line);
    if (tok.size() < 2) continue;
    if (tok[0] == "key") key = std::string(tok[1]);
    if (tok[0] == "format_version") version = static_cast<int>(parse_integer(tok[1]));
  }
  if (version != kBasisCacheVersion) throw FormatError("basis cache: unsupported format version");
  if (key != basis_cache_key(want)) {
    throw FormatError("basis cache key " + key + " does not match geometry key " + basis_cache_key(want));
  }
  std::vector<StokesMode> modes;
  while (std::getline(in, line)) {
    const auto tok = split_whitespace(line);
    if (tok.empty()) continue;
    if (tok[0] != "mode" || tok.size() < 7) throw FormatError("basis cache: malformed mode record");
    StokesMode m;
    m.k = static_cast<int>(parse_integer(tok[2]));
    m.parity = static_cast<int>(parse_integer(tok[3]));
    m.alpha = parse_double(tok[4]);
    m.norm = parse_double(tok[5]);
    const auto count = static_cast<std::size_t>(parse_integer(tok[6]));
    if (tok.size() != 7 + count) throw FormatError("basis cache: coefficient count mismatch");
    for (std::size_t i = 0; i < count; ++i) m.profile.push_back(parse_double(tok[7 + i]));
    modes.push_back(std::move(m));
  }
  if (static_cast<int>(modes.size()) != want.modes) throw FormatError("basis cache: wrong number of modes");
  return StokesBasis(want, std::move(modes));
}

StokesBasis load_or_build_basis(const ChannelGeometry& geometry, const std::filesystem::path& directory,
                                bool* built) {
  const auto path = directory / basis_cache_filename(geometry);
  if (std::ifstream in(path); in) {
    try {
      StokesBasis basis = load_basis(in, geometry);
      if (built != nullptr) *built = false;
      return basis;
    } catch (const FormatError&) {
      // fall through and rebuild
    }
  }
  StokesBasis basis = assemble_basis(geometry);
  std::filesystem::create_directories(directory);
  std::ofstream out(path);
  save_basis(basis, out);
  if (built != nullptr) *built = true;
  return basis;
}

}  // namespace viscest
