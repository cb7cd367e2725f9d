#include "sdot/types.hpp"

#include <cmath>

namespace sdot {

DiracCloud DiracCloud::uniform(Points positions) {
  DiracCloud c;
  const auto n = static_cast<Eigen::Index>(positions.size());
  c.positions = std::move(positions);
  c.masses = Eigen::VectorXd::Constant(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
  c.potentials = Eigen::VectorXd::Zero(n);
  return c;
}

void DiracCloud::validate() const {
  const int n = size();
  if (n < 1) throw Error(ErrorCode::InvalidInput, "cloud must contain at least one site");
  if (masses.size() != n || potentials.size() != n)
    throw Error(ErrorCode::InvalidInput, "cloud masses/potentials size mismatch");
  for (const Point& p : positions)
    if (!p.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite site position");
  if (!potentials.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite potential");
  if (!masses.allFinite() || (masses.array() < 0.0).any())
    throw Error(ErrorCode::InvalidInput, "masses must be finite and nonnegative");
  if (std::abs(masses.sum() - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidInput, "masses must sum to one");
}

Eigen::VectorXd DiracCloud::flat_positions() const {
  Eigen::VectorXd out(2 * size());
  for (int i = 0; i < size(); ++i) out.segment<2>(2 * i) = positions[i];
  return out;
}

void DiracCloud::set_flat_positions(const Eigen::VectorXd& flat) {
  positions.resize(static_cast<std::size_t>(flat.size() / 2));
  for (int i = 0; i < size(); ++i) positions[i] = flat.segment<2>(2 * i);
}

}  // namespace sdot
