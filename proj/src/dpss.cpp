#include <Eigen/Eigenvalues>
#include <cmath>

#include "dds/tfanalysis.hpp"

namespace dds {

Eigen::MatrixXd dpss_tapers(int length, double nw, int count) {
  if (count < 1) throw DomainError("taper count must be >= 1");
  if (length < count) throw DomainError("taper length shorter than the taper count");
  if (count > 2.0 * nw + 1e-12) {
    throw DomainError("more than 2NW tapers requested; the extra tapers are poorly concentrated");
  }
  const double w = nw / length;

  // Slepian's tridiagonal matrix commutes with the time-bandwidth operator and
  // has the same eigenvectors, with well separated eigenvalues.
  Eigen::VectorXd diag(length), off(std::max(length - 1, 0));
  const double c = std::cos(kTwoPi * w);
  for (int n = 0; n < length; ++n) {
    const double h = 0.5 * (length - 1) - n;
    diag(n) = h * h * c;
  }
  for (int n = 0; n + 1 < length; ++n) off(n) = 0.5 * (n + 1) * (length - n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");

  // Eigenvalues come out ascending; the best concentrated tapers are last.
  Eigen::MatrixXd tapers(length, count);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd v = es.eigenvectors().col(length - 1 - k);
    v.normalize();
    // Sign convention: symmetric tapers sum positive, antisymmetric ones
    // start with a positive lobe.
    double s = v.sum();
    if (k % 2 == 1) {
      s = 0.0;
      for (int n = 0; n < length / 2; ++n) s += (length - 1 - 2.0 * n) * v(n);
    }
    if (s < 0.0) v = -v;
    tapers.col(k) = v;
  }
  return tapers;
}

}  // namespace dds
