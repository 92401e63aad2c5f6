#include "nopo/fock.hpp"

#include <cmath>

namespace nopo {

EffectiveModel build_effective_model(const Params& p, int n1, int n2) {
  validate(p);
  if (n1 < 4 || n2 < 4)
    throw std::invalid_argument("build_effective_model: need n1, n2 >= 4");
  EffectiveModel m;
  m.params = p;
  m.n1 = n1;
  m.n2 = n2;
  const int dim = m.dim();
  m.diag.resize(dim);
  m.chi_lo.assign(dim, 0.0);
  m.chi_hi.assign(dim, 0.0);
  m.eps_lo.assign(dim, 0.0);
  m.eps_hi.assign(dim, 0.0);
  m.l1.assign(dim, 0.0);
  m.l2.assign(dim, 0.0);
  m.l3.assign(dim, 0.0);

  const double eps = p.eps(), lam = p.lambda();
  const double c1 = std::sqrt(2.0 * p.gamma1), c2 = std::sqrt(2.0 * p.gamma2);
  const double c3 = std::sqrt(2.0 * lam);
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2) {
      const int i = i1 * n2 + i2;
      m.diag[i] = std::complex<double>(
          -(p.gamma1 * i1 + p.gamma2 * i2 + lam * i1 * i2),
          -(p.delta1 * i1 + p.delta2 * i2));
      // a1^dag a2 : |i1-1, i2+1> -> |i1, i2>, reads psi[i - n2 + 1]
      if (i1 >= 1 && i2 + 1 < n2)
        m.chi_lo[i] = p.chi * std::sqrt(double(i1) * (i2 + 1));
      // a2^dag a1 : reads psi[i + n2 - 1]
      if (i1 + 1 < n1 && i2 >= 1)
        m.chi_hi[i] = p.chi * std::sqrt(double(i1 + 1) * i2);
      // a1^dag a2^dag : reads psi[i - n2 - 1]
      if (i1 >= 1 && i2 >= 1)
        m.eps_lo[i] = eps * std::sqrt(double(i1) * i2);
      // a1 a2 : reads psi[i + n2 + 1]
      if (i1 + 1 < n1 && i2 + 1 < n2)
        m.eps_hi[i] = eps * std::sqrt(double(i1 + 1) * (i2 + 1));
      if (i1 + 1 < n1) m.l1[i] = c1 * std::sqrt(double(i1 + 1));
      if (i2 + 1 < n2) m.l2[i] = c2 * std::sqrt(double(i2 + 1));
      if (i1 + 1 < n1 && i2 + 1 < n2)
        m.l3[i] = c3 * std::sqrt(double(i1 + 1) * (i2 + 1));
    }
  return m;
}

Eigen::MatrixXcd dense_lower(int n) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) a(i - 1, i) = std::sqrt(double(i));
  return a;
}

namespace {
Eigen::MatrixXcd kron(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  Eigen::MatrixXcd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}
}  // namespace

Eigen::MatrixXcd dense_a1(const EffectiveModel& m) {
  return kron(dense_lower(m.n1), Eigen::MatrixXcd::Identity(m.n2, m.n2));
}

Eigen::MatrixXcd dense_a2(const EffectiveModel& m) {
  return kron(Eigen::MatrixXcd::Identity(m.n1, m.n1), dense_lower(m.n2));
}

Eigen::MatrixXcd dense_H(const EffectiveModel& m) {
  const Params& p = m.params;
  const Eigen::MatrixXcd a1 = dense_a1(m), a2 = dense_a2(m);
  const std::complex<double> i(0.0, 1.0);
  return p.delta1 * (a1.adjoint() * a1) + p.delta2 * (a2.adjoint() * a2) +
         p.chi * (a1.adjoint() * a2 + a2.adjoint() * a1) +
         i * p.eps() * (a1.adjoint() * a2.adjoint() - a1 * a2);
}

std::vector<Eigen::MatrixXcd> dense_jumps(const EffectiveModel& m) {
  const Params& p = m.params;
  const Eigen::MatrixXcd a1 = dense_a1(m), a2 = dense_a2(m);
  return {std::sqrt(2.0 * p.gamma1) * a1, std::sqrt(2.0 * p.gamma2) * a2,
          std::sqrt(2.0 * p.lambda()) * (a1 * a2)};
}

Eigen::MatrixXcd dense_D0(const EffectiveModel& m) {
  const int dim = m.dim(), n2 = m.n2;
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(dim, dim);
  const std::complex<double> mi(0.0, -1.0);
  for (int i = 0; i < dim; ++i) {
    D(i, i) = m.diag[i];
    if (m.chi_lo[i] != 0.0) D(i, i - n2 + 1) += mi * m.chi_lo[i];
    if (m.chi_hi[i] != 0.0) D(i, i + n2 - 1) += mi * m.chi_hi[i];
    if (m.eps_lo[i] != 0.0) D(i, i - n2 - 1) += m.eps_lo[i];
    if (m.eps_hi[i] != 0.0) D(i, i + n2 + 1) -= m.eps_hi[i];
  }
  return D;
}

}  // namespace nopo
