#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "viscest/stokes_basis.hpp"

namespace viscest {

inline constexpr int kBasisCacheVersion = 1;

/// Content hash of (a, K, M, J, N1, N2, format version).
std::string basis_cache_key(const ChannelGeometry& geometry);
std::string basis_cache_filename(const ChannelGeometry& geometry);

/// Eigenvalues, profiles and normalisations; grid samples are not stored.
void save_basis(const StokesBasis& basis, std::ostream& out);

/// Throws FormatError on a malformed file or a key that differs from `expected`.
StokesBasis load_basis(std::istream& in, const ChannelGeometry& expected);

/// Loads `directory/basis-<key>.txt` if present, else assembles and writes it.
StokesBasis load_or_build_basis(const ChannelGeometry& geometry, const std::filesystem::path& directory,
                                bool* built = nullptr);

}  // namespace viscest
