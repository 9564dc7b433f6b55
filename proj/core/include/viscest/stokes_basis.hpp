#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace viscest {

/// Channel D = T_a x (-1, 1): periodic in x1, no-slip walls at x2 = +-1.
struct ChannelGeometry {
  double period = 6.283185307179586;  // a
  int max_wavenumber = 4;             // K, Fourier cutoff |k| <= K
  int wall_order = 32;                // M, wall-direction polynomial coefficients
  int modes = 16;                     // J, retained basis size
  int grid_x1 = 0;                    // N1, 0 selects the exact-quadrature default
  int grid_x2 = 0;                    // N2, 0 selects the exact-quadrature default

  /// Fills zero grid sizes with the smallest sizes for which triple products
  /// of basis fields integrate exactly.
  ChannelGeometry resolved() const;

  /// Throws DimensionError describing every violated constraint.
  void validate() const;

  double wavenumber(int k) const;
};

/// Relative disagreement between resolutions M and 2M above which an
/// eigenvalue is rejected as unconverged.
inline constexpr double kWallRefinementTolerance = 1e-10;

/// One eigenpair of the wall-direction problem for a fixed wavenumber.
/// For k = 0 the profile is u1(x2) expanded in the Dirichlet basis
/// P_m - P_{m+2}; for k != 0 it is the stream function psi(x2) in the
/// clamped basis P_m + s1 P_{m+2} + s2 P_{m+4}. Profiles are normalised so
/// that the one-dimensional energy form equals one.
struct WallEigenpair {
  double alpha = 0.0;
  std::vector<double> profile;
};

/// Smallest `count` eigenpairs for wavenumber index k, validated against a
/// solve at twice the resolution. Throws CapacityError when count exceeds M
/// and ResolutionError when the requested modes fail the refinement check.
std::vector<WallEigenpair> solve_wall_eigenproblem(int k, const ChannelGeometry& geometry, int count);

/// All eigenpairs for wavenumber k that pass the refinement check, ascending.
/// `first_unresolved` receives the smallest rejected eigenvalue (or +inf).
std::vector<WallEigenpair> converged_wall_spectrum(int k, const ChannelGeometry& geometry,
                                                   double* first_unresolved = nullptr);

/// Value and first two x2-derivatives of a wall profile at x2.
struct ProfileValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

ProfileValue evaluate_profile(int k, std::span<const double> profile, double x2);

/// parity 0: stream function psi = phi(x2) cos(kappa x1); parity 1: sin.
/// k = 0 modes always carry parity 0.
struct StokesMode {
  int k = 0;
  int parity = 0;
  double alpha = 0.0;
  std::vector<double> profile;
  double norm = 1.0;  // scales the profile to unit L2(D) norm
};

/// Tensor-product quadrature grid, point index p = i1 * N2 + i2.
struct QuadratureGrid {
  std::vector<double> x1;
  std::vector<double> x2;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
};

/// Velocity and gradient samples on the quadrature grid.
struct GridField {
  Eigen::VectorXd u1, u2;
  Eigen::VectorXd d1u1, d2u1;
  Eigen::VectorXd d1u2, d2u2;
};

class StokesBasis {
 public:
  /// Takes modes already sorted and normalised; evaluates them on the grid.
  StokesBasis(ChannelGeometry geometry, std::vector<StokesMode> modes);

  const ChannelGeometry& geometry() const { return geometry_; }
  std::span<const StokesMode> modes() const { return modes_; }
  const StokesMode& mode(int j) const { return modes_.at(static_cast<std::size_t>(j)); }
  int size() const { return static_cast<int>(modes_.size()); }
  std::span<const double> alphas() const { return alphas_; }

  const QuadratureGrid& grid() const { return grid_; }

  // Grid samples of every mode, one column per mode.
  const Eigen::MatrixXd& u1() const { return u1_; }
  const Eigen::MatrixXd& u2() const { return u2_; }
  const Eigen::MatrixXd& d1u1() const { return d1u1_; }
  const Eigen::MatrixXd& d2u1() const { return d2u1_; }
  const Eigen::MatrixXd& d1u2() const { return d1u2_; }
  const Eigen::MatrixXd& d2u2() const { return d2u2_; }

  /// Velocity of mode j at an arbitrary point (used for wall checks).
  std::pair<double, double> velocity(int j, double x1, double x2) const;

 private:
  ChannelGeometry geometry_;
  std::vector<StokesMode> modes_;
  std::vector<double> alphas_;
  QuadratureGrid grid_;
  Eigen::MatrixXd u1_, u2_, d1u1_, d2u1_, d1u2_, d2u2_;
};

/// Merges all wavenumbers, sorts by (alpha, |k|, parity) and keeps J modes.
StokesBasis assemble_basis(const ChannelGeometry& geometry);

/// u = sum_j c_j e_j sampled on the quadrature grid.
GridField pointwise_field(const StokesBasis& basis, std::span<const double> coefficients);

/// (f, g) in L2(D) by grid quadrature.
double l2_inner(const StokesBasis& basis, const GridField& f, const GridField& g);

/// (grad f, grad g) in L2(D) by grid quadrature.
double gradient_inner(const StokesBasis& basis, const GridField& f, const GridField& g);

/// G_ij = (e_i, e_j) by grid quadrature.
Eigen::MatrixXd gram_matrix(const StokesBasis& basis);

/// max_p |div u| / max_p |grad u| on the grid (0 for the zero field).
double scaled_divergence(const StokesBasis& basis, const GridField& field);

}  // namespace viscest
