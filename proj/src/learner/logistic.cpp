#include <cmath>

#include "fsuc/error.hpp"
#include "fsuc/learner.hpp"

namespace fsuc {

double LogisticModel::score(std::span<const double> x) const {
  double s = c;
  for (Eigen::Index j = 0; j < a.size(); ++j) s += a[j] * x[j];
  return s;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z), overflow-safe.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y,
                           const LogisticOptions& opt) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n != static_cast<Eigen::Index>(y.size())) throw DomainError("X and y differ in length");
  size_t n_pos = 0;
  for (int v : y) n_pos += v == 1;
  if (n_pos == 0 || n_pos == y.size()) throw Error("degenerate node");

  Eigen::VectorXd mu = X.colwise().mean();
  Eigen::VectorXd sd(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    sd[j] = std::sqrt((X.col(j).array() - mu[j]).square().mean());
    if (!(sd[j] > 0.0)) sd[j] = 1.0;
  }
  Eigen::MatrixXd Z(n, d + 1);
  for (Eigen::Index j = 0; j < d; ++j) Z.col(j) = (X.col(j).array() - mu[j]) / sd[j];
  Z.col(d).setOnes();

  Eigen::VectorXd t(n), s(n);
  const double w_pos = opt.balance_classes ? 0.5 * n / n_pos : 1.0;
  const double w_neg = opt.balance_classes ? 0.5 * n / (n - n_pos) : 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    t[i] = y[i] == 1 ? 1.0 : 0.0;
    s[i] = (y[i] == 1 ? w_pos : w_neg) / n;
  }
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(d + 1, opt.l2);
  reg[d] = 0.0;

  auto objective = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd z = Z * w;
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) f += s[i] * (softplus(z[i]) - t[i] * z[i]);
    return f + 0.5 * (reg.array() * w.array().square()).sum();
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  double f = objective(w);
  LogisticModel m;
  for (m.iterations = 0; m.iterations < opt.max_iter; ++m.iterations) {
    Eigen::VectorXd z = Z * w, p(n), r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = sigmoid(z[i]);
      r[i] = s[i] * p[i] * (1.0 - p[i]);
    }
    Eigen::VectorXd g = Z.transpose() * (s.array() * (p - t).array()).matrix() +
                        (reg.array() * w.array()).matrix();
    if (g.lpNorm<Eigen::Infinity>() <= opt.tol) {
      m.converged = true;
      break;
    }
    Eigen::MatrixXd Hs = Z.transpose() * r.asDiagonal() * Z;
    Hs.diagonal() += reg;
    Hs(d, d) += 1e-12;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hs);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = -ldlt.solve(g);
    if (step.size() == 0 || !step.allFinite() || step.dot(g) >= 0.0) step = -g;  // gradient fallback

    double alpha = 1.0, f_new = f;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      Eigen::VectorXd trial = w + alpha * step;
      f_new = objective(trial);
      if (f_new <= f + 1e-4 * alpha * g.dot(step)) {
        w = trial;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // No descent possible at double precision: treat as stationary.
      m.converged = g.lpNorm<Eigen::Infinity>() <= std::sqrt(opt.tol);
      break;
    }
    f = f_new;
  }

  m.a.resize(d);
  m.c = w[d];
  for (Eigen::Index j = 0; j < d; ++j) {
    m.a[j] = w[j] / sd[j];
    m.c -= w[j] * mu[j] / sd[j];
  }
  if (!m.a.allFinite() || !std::isfinite(m.c)) throw Error("logistic fit diverged");
  return m;
}

}  // namespace fsuc
