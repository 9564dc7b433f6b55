#include "viscest/stokes_basis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>

#include "viscest/errors.hpp"
#include "viscest/quadrature.hpp"

namespace viscest {

namespace {

// Expansion of basis function m in Legendre polynomials: P_m + s1 P_{m+2} + s2 P_{m+4}.
struct ShenCoefficients {
  double s1;
  double s2;
};

ShenCoefficients shen(bool clamped, int m) {
  if (!clamped) return {-1.0, 0.0};
  const double d = 2.0 * m + 7.0;
  return {-2.0 * (2.0 * m + 5.0) / d, (2.0 * m + 3.0) / d};
}

// Highest Legendre degree used by an M-term basis, plus one.
int legendre_count(bool clamped, int m) { return m + (clamped ? 4 : 2); }

struct BasisSamples {
  Eigen::MatrixXd v, d1, d2;  // rows: points, cols: basis functions
};

BasisSamples sample_basis(bool clamped, int m, std::span<const double> x) {
  const int n = legendre_count(clamped, m);
  BasisSamples s{Eigen::MatrixXd(x.size(), m), Eigen::MatrixXd(x.size(), m),
                 Eigen::MatrixXd(x.size(), m)};
  LegendreTable table;
  for (std::size_t i = 0; i < x.size(); ++i) {
    legendre_table(n, x[i], table);
    for (int j = 0; j < m; ++j) {
      const auto [s1, s2] = shen(clamped, j);
      const auto row = static_cast<Eigen::Index>(i);
      s.v(row, j) = table.p[j] + s1 * table.p[j + 2];
      s.d1(row, j) = table.dp[j] + s1 * table.dp[j + 2];
      s.d2(row, j) = table.d2p[j] + s1 * table.d2p[j + 2];
      if (clamped) {
        s.v(row, j) += s2 * table.p[j + 4];
        s.d1(row, j) += s2 * table.dp[j + 4];
        s.d2(row, j) += s2 * table.d2p[j + 4];
      }
    }
  }
  return s;
}

struct PencilSolution {
  std::vector<double> alpha;
  std::vector<std::vector<double>> profiles;
};

// Galerkin weak form of the wall problem at resolution m.
//   k = 0:  (f', g') = alpha (f, g)
//   k != 0: (psi'', g'') + 2 kappa^2 (psi', g') + kappa^4 (psi, g)
//             = alpha [(psi', g') + kappa^2 (psi, g)]
// Both forms are symmetric positive definite, so the pencil is solved as
// B y = mu A y with mu = 1/alpha: the largest mu are the accurate ones.
PencilSolution solve_pencil(int k, double kappa, int m) {
  const bool clamped = k != 0;
  const QuadratureRule rule = gauss_legendre(m + 6);
  const BasisSamples s = sample_basis(clamped, m, rule.nodes);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(),
                                            static_cast<Eigen::Index>(rule.weights.size()));

  Eigen::MatrixXd a, b;
  const Eigen::MatrixXd mass = s.v.transpose() * w.asDiagonal() * s.v;
  const Eigen::MatrixXd grad = s.d1.transpose() * w.asDiagonal() * s.d1;
  if (clamped) {
    const double k2 = kappa * kappa;
    a = s.d2.transpose() * w.asDiagonal() * s.d2 + 2.0 * k2 * grad + k2 * k2 * mass;
    b = grad + k2 * mass;
  } else {
    a = grad;
    b = mass;
  }
  a = 0.5 * (a + a.transpose()).eval();
  b = 0.5 * (b + b.transpose()).eval();

  const Eigen::VectorXd scale = a.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd as = scale.asDiagonal() * a * scale.asDiagonal();
  const Eigen::MatrixXd bs = scale.asDiagonal() * b * scale.asDiagonal();

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(bs, as);
  if (solver.info() != Eigen::Success) {
    throw ResolutionError("wall eigenproblem failed to converge for k=" + std::to_string(k));
  }

  PencilSolution out;
  const Eigen::VectorXd& mu = solver.eigenvalues();
  for (Eigen::Index i = mu.size() - 1; i >= 0; --i) {
    if (!(mu(i) > 0.0)) continue;
    Eigen::VectorXd c = scale.asDiagonal() * solver.eigenvectors().col(i);
    c /= std::sqrt(mu(i));  // c^T B c = 1
    Eigen::Index lead = 0;
    c.cwiseAbs().maxCoeff(&lead);
    if (c(lead) < 0.0) c = -c;
    out.alpha.push_back(1.0 / mu(i));
    out.profiles.emplace_back(c.data(), c.data() + c.size());
  }
  return out;
}

}  // namespace

ChannelGeometry ChannelGeometry::resolved() const {
  ChannelGeometry g = *this;
  // Triple products reach x1-wavenumber 3K and x2-degree 3M + 9.
  if (g.grid_x1 <= 0) g.grid_x1 = 3 * max_wavenumber + 1;
  if (g.grid_x2 <= 0) g.grid_x2 = (3 * wall_order + 10) / 2;
  return g;
}

void ChannelGeometry::validate() const {
  std::ostringstream problems;
  if (!(period > 0.0) || !std::isfinite(period)) problems << "period a must be > 0; ";
  if (max_wavenumber < 0) problems << "Fourier cutoff K must be >= 0; ";
  if (wall_order < 8) problems << "wall resolution M must be >= 8; ";
  if (modes < 1) problems << "basis size J must be >= 1; ";
  if (grid_x1 < 3 * max_wavenumber + 1) {
    problems << "grid N1=" << grid_x1 << " must be >= 3K+1=" << 3 * max_wavenumber + 1 << "; ";
  }
  if (grid_x2 < wall_order + 2) {
    problems << "grid N2=" << grid_x2 << " must be >= M+2=" << wall_order + 2 << "; ";
  }
  const std::string msg = problems.str();
  if (!msg.empty()) throw DimensionError("invalid channel geometry: " + msg.substr(0, msg.size() - 2));
}

double ChannelGeometry::wavenumber(int k) const {
  return 2.0 * std::numbers::pi * k / period;
}

std::vector<WallEigenpair> converged_wall_spectrum(int k, const ChannelGeometry& geometry,
                                                   double* first_unresolved) {
  if (k < 0 || k > geometry.max_wavenumber) {
    throw DimensionError("wavenumber index " + std::to_string(k) + " outside [0, K]");
  }
  const double kappa = geometry.wavenumber(k);
  const PencilSolution coarse = solve_pencil(k, kappa, geometry.wall_order);
  const PencilSolution fine = solve_pencil(k, kappa, 2 * geometry.wall_order);

  std::vector<WallEigenpair> out;
  const std::size_t n = std::min(coarse.alpha.size(), fine.alpha.size());
  std::size_t i = 0;
  for (; i < n; ++i) {
    const double rel = std::abs(coarse.alpha[i] - fine.alpha[i]) / fine.alpha[i];
    if (!(rel <= kWallRefinementTolerance)) break;
    out.push_back({coarse.alpha[i], coarse.profiles[i]});
  }
  if (first_unresolved != nullptr) {
    *first_unresolved = i < fine.alpha.size() ? fine.alpha[i] : std::numeric_limits<double>::infinity();
  }
  return out;
}

std::vector<WallEigenpair> solve_wall_eigenproblem(int k, const ChannelGeometry& geometry, int count) {
  if (count < 1) throw DimensionError("solve_wall_eigenproblem: count must be >= 1");
  if (count > geometry.wall_order) {
    throw CapacityError("requested " + std::to_string(count) + " wall modes for k=" +
                        std::to_string(k) + " but M=" + std::to_string(geometry.wall_order) +
                        " supplies at most M");
  }
  std::vector<WallEigenpair> spectrum = converged_wall_spectrum(k, geometry);
  if (static_cast<int>(spectrum.size()) < count) {
    throw ResolutionError("only " + std::to_string(spectrum.size()) + " of " + std::to_string(count) +
                          " wall modes for k=" + std::to_string(k) + " agree between M=" +
                          std::to_string(geometry.wall_order) + " and M=" +
                          std::to_string(2 * geometry.wall_order));
  }
  spectrum.resize(static_cast<std::size_t>(count));
  return spectrum;
}

ProfileValue evaluate_profile(int k, std::span<const double> profile, double x2) {
  const bool clamped = k != 0;
  const int m = static_cast<int>(profile.size());
  const BasisSamples s = sample_basis(clamped, m, std::span<const double>(&x2, 1));
  const Eigen::Map<const Eigen::VectorXd> c(profile.data(), m);
  return {s.v.row(0).dot(c), s.d1.row(0).dot(c), s.d2.row(0).dot(c)};
}

StokesBasis::StokesBasis(ChannelGeometry geometry, std::vector<StokesMode> modes)
    : geometry_(geometry.resolved()), modes_(std::move(modes)) {
  geometry_.validate();
  const int n1 = geometry_.grid_x1;
  const int n2 = geometry_.grid_x2;
  const QuadratureRule wall = gauss_legendre(n2);

  grid_.x1.resize(n1);
  for (int i = 0; i < n1; ++i) grid_.x1[i] = geometry_.period * i / n1;
  grid_.x2 = wall.nodes;
  grid_.weights.resize(static_cast<Eigen::Index>(n1) * n2);
  for (int i = 0; i < n1; ++i) {
    for (int l = 0; l < n2; ++l) grid_.weights(i * n2 + l) = geometry_.period / n1 * wall.weights[l];
  }

  const Eigen::Index points = grid_.size();
  const auto cols = static_cast<Eigen::Index>(modes_.size());
  for (auto* m : {&u1_, &u2_, &d1u1_, &d2u1_, &d1u2_, &d2u2_}) m->setZero(points, cols);

  alphas_.reserve(modes_.size());
  std::vector<ProfileValue> wall_values(n2);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const StokesMode& mode = modes_[static_cast<std::size_t>(j)];
    alphas_.push_back(mode.alpha);
    for (int l = 0; l < n2; ++l) wall_values[l] = evaluate_profile(mode.k, mode.profile, grid_.x2[l]);
    const double kappa = geometry_.wavenumber(mode.k);
    for (int i = 0; i < n1; ++i) {
      const double c = std::cos(kappa * grid_.x1[i]);
      const double s = std::sin(kappa * grid_.x1[i]);
      for (int l = 0; l < n2; ++l) {
        const Eigen::Index p = i * n2 + l;
        const ProfileValue& f = wall_values[l];
        const double nv = mode.norm;
        if (mode.k == 0) {
          u1_(p, j) = nv * f.value;
          d2u1_(p, j) = nv * f.d1;
        } else if (mode.parity == 0) {
          // psi = phi cos(kappa x1), u = (psi_y, -psi_x)
          u1_(p, j) = nv * f.d1 * c;
          u2_(p, j) = nv * kappa * f.value * s;
          d1u1_(p, j) = -nv * kappa * f.d1 * s;
          d2u1_(p, j) = nv * f.d2 * c;
          d1u2_(p, j) = nv * kappa * kappa * f.value * c;
          d2u2_(p, j) = nv * kappa * f.d1 * s;
        } else {
          u1_(p, j) = nv * f.d1 * s;
          u2_(p, j) = -nv * kappa * f.value * c;
          d1u1_(p, j) = nv * kappa * f.d1 * c;
          d2u1_(p, j) = nv * f.d2 * s;
          d1u2_(p, j) = nv * kappa * kappa * f.value * s;
          d2u2_(p, j) = -nv * kappa * f.d1 * c;
        }
      }
    }
  }
}

std::pair<double, double> StokesBasis::velocity(int j, double x1, double x2) const {
  const StokesMode& m = mode(j);
  const ProfileValue f = evaluate_profile(m.k, m.profile, x2);
  if (m.k == 0) return {m.norm * f.value, 0.0};
  const double kappa = geometry_.wavenumber(m.k);
  const double c = std::cos(kappa * x1);
  const double s = std::sin(kappa * x1);
  if (m.parity == 0) return {m.norm * f.d1 * c, m.norm * kappa * f.value * s};
  return {m.norm * f.d1 * s, -m.norm * kappa * f.value * c};
}

StokesBasis assemble_basis(const ChannelGeometry& input) {
  const ChannelGeometry geometry = input.resolved();
  geometry.validate();

  std::vector<StokesMode> candidates;
  double unresolved_floor = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= geometry.max_wavenumber; ++k) {
    double first_unresolved = 0.0;
    const auto spectrum = converged_wall_spectrum(k, geometry, &first_unresolved);
    unresolved_floor = std::min(unresolved_floor, first_unresolved);
    // k = 0: |u|^2 integrates to a (f, f); k != 0: to (a/2)(phi'^2 + kappa^2 phi^2).
    const double norm = k == 0 ? 1.0 / std::sqrt(geometry.period) : std::sqrt(2.0 / geometry.period);
    for (const auto& pair : spectrum) {
      for (int parity = 0; parity < (k == 0 ? 1 : 2); ++parity) {
        candidates.push_back({k, parity, pair.alpha, pair.profile, norm});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const StokesMode& l, const StokesMode& r) {
    return std::tie(l.alpha, l.k, l.parity) < std::tie(r.alpha, r.k, r.parity);
  });

  const auto want = static_cast<std::size_t>(geometry.modes);
  if (candidates.size() < want) {
    throw CapacityError("basis size J=" + std::to_string(geometry.modes) + " exceeds the " +
                        std::to_string(candidates.size()) + " converged modes for K=" +
                        std::to_string(geometry.max_wavenumber) +
                        ", M=" + std::to_string(geometry.wall_order));
  }
  candidates.resize(want);
  if (candidates.back().alpha >= unresolved_floor) {
    std::ostringstream msg;
    msg << "mode J=" << geometry.modes << " (alpha=" << candidates.back().alpha
        << ") is not separated from the first unresolved eigenvalue " << unresolved_floor
        << "; increase M";
    throw ResolutionError(msg.str());
  }
  return StokesBasis(geometry, std::move(candidates));
}

GridField pointwise_field(const StokesBasis& basis, std::span<const double> coefficients) {
  if (static_cast<int>(coefficients.size()) != basis.size()) {
    throw DimensionError("pointwise_field: got " + std::to_string(coefficients.size()) +
                         " coefficients for a basis of size " + std::to_string(basis.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> c(coefficients.data(), basis.size());
  return {basis.u1() * c,   basis.u2() * c,   basis.d1u1() * c,
          basis.d2u1() * c, basis.d1u2() * c, basis.d2u2() * c};
}

double l2_inner(const StokesBasis& basis, const GridField& f, const GridField& g) {
  const auto& w = basis.grid().weights;
  return (w.array() * (f.u1.array() * g.u1.array() + f.u2.array() * g.u2.array())).sum();
}

double gradient_inner(const StokesBasis& basis, const GridField& f, const GridField& g) {
  const auto& w = basis.grid().weights;
  return (w.array() * (f.d1u1.array() * g.d1u1.array() + f.d2u1.array() * g.d2u1.array() +
                       f.d1u2.array() * g.d1u2.array() + f.d2u2.array() * g.d2u2.array()))
      .sum();
}

Eigen::MatrixXd gram_matrix(const StokesBasis& basis) {
  const auto& w = basis.grid().weights;
  return basis.u1().transpose() * w.asDiagonal() * basis.u1() +
         basis.u2().transpose() * w.asDiagonal() * basis.u2();
}

double scaled_divergence(const StokesBasis&, const GridField& field) {
  const double scale = std::max({field.d1u1.cwiseAbs().maxCoeff(), field.d2u1.cwiseAbs().maxCoeff(),
                                 field.d1u2.cwiseAbs().maxCoeff(), field.d2u2.cwiseAbs().maxCoeff()});
  if (scale == 0.0) return 0.0;
  return (field.d1u1 + field.d2u2).cwiseAbs().maxCoeff() / scale;
}

}  // namespace viscest
