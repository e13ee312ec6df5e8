#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>
#include <cmath>
#include <cstdint>
#include <algorithm>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pimfit/dataset.hpp"
#include "pimfit/design.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/link.hpp"
#include "pimfit/pseudo.hpp"

namespace pimfit {

struct SolverConfig {
  int max_iterations = 50;
  // Convergence on the inf-norm of the mean score (score sum / pseudo count);
  // the mean scaling keeps the threshold meaningful across sample sizes.
  double score_tolerance = 1e-8;
  double step_tolerance = 1e-8;
  int max_step_halvings = 10;
  // Linear predictors beyond +-eta_clamp are clamped for mean evaluation and
  // the fit is flagged, so a separated partition cannot poison aggregation.
  double eta_clamp = 30.0;
  int threads = 1;
};

struct PimFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
  Eigen::Index n_obs = 0;
  Eigen::Index n_pseudo = 0;
  int iterations = 0;
  double score_norm = 0.0;  // inf-norm of the mean score at beta
  bool clamped = false;
  LinkKind link = LinkKind::Probit;
  std::uint64_t design_fingerprint = 0;
  std::vector<std::string> coefficient_names;

  Eigen::VectorXd standard_errors() const {
    return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
};

namespace detail {

// Accumulators for one chunk of the pseudo-observation stream. Score and
// bread are enough for an iteration; the sandwich pass additionally tracks
// the per-original-index score sums S_h and the summed self outer products.
struct FitAccum {
  Eigen::VectorXd score;      // sum A e
  Eigen::MatrixXd bread;      // sum (dmu^2/V) z z^T, upper triangle
  Eigen::MatrixXd s_by_row;   // p x n, column h = S_h
  Eigen::MatrixXd self_meat;  // sum (A e)(A e)^T, upper triangle
  bool clamped = false;

  FitAccum(Eigen::Index p, Eigen::Index n, bool with_sandwich) {
    score = Eigen::VectorXd::Zero(p);
    bread = Eigen::MatrixXd::Zero(p, p);
    if (with_sandwich) {
      s_by_row = Eigen::MatrixXd::Zero(p, n);
      self_meat = Eigen::MatrixXd::Zero(p, p);
    }
  }

  void merge(const FitAccum& o) {
    score += o.score;
    bread += o.bread;
    if (s_by_row.size() > 0) {
      s_by_row += o.s_by_row;
      self_meat += o.self_meat;
    }
    clamped = clamped || o.clamped;
  }
};

// Core kernel over outer rows [i_begin, i_end). terms_t is p x n with one
// column per original row, so regressors are column differences.
template <bool WithBread, bool WithSandwich>
void accumulate_range(const Eigen::VectorXd& y, const Eigen::MatrixXd& terms_t,
                      const Eigen::VectorXd& beta, const LinkFunction& link,
                      double eta_clamp, Eigen::Index i_begin, Eigen::Index i_end,
                      FitAccum& acc) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = terms_t.rows();
  const double* tt = terms_t.data();
  const double* b = beta.data();
  double* u = acc.score.data();
  double* br = WithBread ? acc.bread.data() : nullptr;
  double* sm = WithSandwich ? acc.self_meat.data() : nullptr;
  double* sbr = WithSandwich ? acc.s_by_row.data() : nullptr;
  std::vector<double> zbuf(static_cast<std::size_t>(p));
  double* z = zbuf.data();
  bool clamped = false;

  for (Eigen::Index i = i_begin; i < i_end; ++i) {
    const double yi = y[i];
    const double* ti = tt + i * p;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double* tj = tt + j * p;
      double eta = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) {
        z[k] = tj[k] - ti[k];
        eta += z[k] * b[k];
      }
      if (eta > eta_clamp) {
        eta = eta_clamp;
        clamped = true;
      } else if (eta < -eta_clamp) {
        eta = -eta_clamp;
        clamped = true;
      }
      const LinkPoint lp = link.at(eta);
      const double yj = y[j];
      const double ind = yi < yj ? 1.0 : (yi > yj ? 0.0 : 0.5);
      const double e = ind == 1.0   ? lp.one_minus_mu
                       : ind == 0.0 ? -lp.mu
                                    : 0.5 - lp.mu;
      const double w_a = lp.dmu / lp.variance();
      const double w_e = w_a * e;  // A e = w_e * z
      for (Eigen::Index k = 0; k < p; ++k) u[k] += w_e * z[k];
      if constexpr (WithBread) {
        const double cb = lp.dmu * w_a;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double czk = cb * z[k];
          for (Eigen::Index l = 0; l <= k; ++l) br[k * p + l] += czk * z[l];
        }
      }
      if constexpr (WithSandwich) {
        double* si = sbr + i * p;
        double* sj = sbr + j * p;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double sk = w_e * z[k];
          si[k] += sk;
          sj[k] += sk;
        }
        const double cm = w_e * w_e;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double czk = cm * z[k];
          for (Eigen::Index l = 0; l <= k; ++l) sm[k * p + l] += czk * z[l];
        }
      }
    }
  }
  acc.clamped = acc.clamped || clamped;
}

// Splits the outer row range into `parts` chunks of roughly equal pair count
// (outer row i owns n-1-i pairs).
inline std::vector<Eigen::Index> pair_balanced_bounds(Eigen::Index n, int parts) {
  std::vector<Eigen::Index> bounds{0};
  const double total = 0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0);
  double acc = 0.0;
  int next_cut = 1;
  for (Eigen::Index i = 0; i + 1 < n && next_cut < parts; ++i) {
    acc += static_cast<double>(n - 1 - i);
    if (acc >= total * next_cut / parts) {
      bounds.push_back(i + 1);
      ++next_cut;
    }
  }
  while (static_cast<int>(bounds.size()) < parts) bounds.push_back(n);
  bounds.push_back(n);
  return bounds;
}

// One full pass over the stream. Chunk boundaries depend only on the thread
// count and chunk results are merged in chunk order, so results are
// reproducible for a fixed thread count.
template <bool WithBread, bool WithSandwich>
FitAccum run_pass(const Eigen::VectorXd& y, const Eigen::MatrixXd& terms_t,
                  const Eigen::VectorXd& beta, const LinkFunction& link,
                  double eta_clamp, int threads) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = terms_t.rows();
  const int workers = std::max(1, threads);
  if (workers == 1 || n < 256) {
    FitAccum acc(p, n, WithSandwich);
    accumulate_range<WithBread, WithSandwich>(y, terms_t, beta, link, eta_clamp,
                                              0, n, acc);
    return acc;
  }
  const auto bounds = pair_balanced_bounds(n, workers);
  std::vector<FitAccum> parts(static_cast<std::size_t>(workers),
                              FitAccum(p, n, WithSandwich));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      accumulate_range<WithBread, WithSandwich>(
          y, terms_t, beta, link, eta_clamp, bounds[static_cast<std::size_t>(w)],
          bounds[static_cast<std::size_t>(w) + 1], parts[static_cast<std::size_t>(w)]);
    });
  }
  for (auto& t : pool) t.join();
  FitAccum acc = std::move(parts[0]);
  for (int w = 1; w < workers; ++w) acc.merge(parts[static_cast<std::size_t>(w)]);
  return acc;
}

// The accumulation kernels write entries (row, col) with row <= col only.
inline void symmetrize_from_upper(Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < c; ++r) m(c, r) = m(r, c);
}

inline double mean_score_inf_norm(const Eigen::VectorXd& score, Eigen::Index n_pseudo) {
  return score.cwiseAbs().maxCoeff() / static_cast<double>(n_pseudo);
}

}  // namespace detail

struct SandwichParts {
  Eigen::MatrixXd bread;
  Eigen::MatrixXd meat;
};

// Grouped meat: pseudo-observations are cross-correlated exactly when they
// share an original row, so
//   M = sum_h S_h S_h^T - sum_pairs (A e)(A e)^T,
// where S_h collects the scores of every pseudo-observation touching row h;
// the subtraction removes the double count of each pair with itself. This is
// O(n^2 p^2) instead of the O(n^4) po-by-po double loop.
inline Eigen::MatrixXd meat_from_groups(const Eigen::MatrixXd& s_by_row,
                                        const Eigen::MatrixXd& self_meat_upper) {
  Eigen::MatrixXd meat = s_by_row * s_by_row.transpose();
  Eigen::MatrixXd self = self_meat_upper;
  detail::symmetrize_from_upper(self);
  meat -= self;
  return meat;
}

inline Eigen::MatrixXd covariance_from_parts(const SandwichParts& parts) {
  const Eigen::Index p = parts.bread.rows();
  if (parts.meat.cwiseAbs().maxCoeff() == 0.0)
    return Eigen::MatrixXd::Zero(p, p);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(parts.bread);
  // Pivot-ratio singularity check: LDLT reports "success" on semidefinite
  // input and its rcond estimate is untrustworthy there.
  const Eigen::VectorXd d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      d.minCoeff() <= 1e-12 * d.maxCoeff())
    throw NumericalError("singular bread matrix in sandwich covariance");
  const Eigen::MatrixXd half = ldlt.solve(parts.meat);
  Eigen::MatrixXd sigma = ldlt.solve(half.transpose()).transpose();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return sigma;
}

// Sandwich parts from the streaming representation used by the fitter.
inline SandwichParts sandwich_parts(const Eigen::VectorXd& y,
                                    const Eigen::MatrixXd& terms_t,
                                    const Eigen::VectorXd& beta,
                                    const LinkFunction& link,
                                    double eta_clamp = 30.0, int threads = 1) {
  auto acc = detail::run_pass<true, true>(y, terms_t, beta, link, eta_clamp, threads);
  SandwichParts parts;
  parts.bread = acc.bread;
  detail::symmetrize_from_upper(parts.bread);
  parts.meat = meat_from_groups(acc.s_by_row, acc.self_meat);
  return parts;
}

// Sandwich parts from explicit pseudo-observations (same arithmetic as the
// streaming path; handy for pooling externally expanded sets and for tests).
inline SandwichParts sandwich_parts(std::span<const PseudoObservation> pseudo,
                                    const Eigen::VectorXd& beta,
                                    const LinkFunction& link) {
  const Eigen::Index p = beta.size();
  Eigen::Index max_row = 0;
  for (const auto& po : pseudo) max_row = std::max({max_row, po.i, po.j});
  SandwichParts parts;
  parts.bread = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd s_by_row = Eigen::MatrixXd::Zero(p, max_row + 1);
  Eigen::MatrixXd self_meat = Eigen::MatrixXd::Zero(p, p);
  for (const auto& po : pseudo) {
    const double eta = po.z.dot(beta);
    const LinkPoint lp = link.at(eta);
    const double e = po.indicator - lp.mu;
    const double w_a = lp.dmu / lp.variance();
    const Eigen::VectorXd s = (w_a * e) * po.z;
    parts.bread.noalias() += (lp.dmu * w_a) * po.z * po.z.transpose();
    s_by_row.col(po.i) += s;
    s_by_row.col(po.j) += s;
    self_meat.noalias() += s * s.transpose();
  }
  parts.meat = s_by_row * s_by_row.transpose() - self_meat;
  return parts;
}

inline Eigen::MatrixXd sandwich_covariance(std::span<const PseudoObservation> pseudo,
                                           const Eigen::VectorXd& beta,
                                           const LinkFunction& link) {
  return covariance_from_parts(sandwich_parts(pseudo, beta, link));
}

// Solves the pseudo-observation estimating equations by Fisher scoring with
// step halving, then fills in the sandwich covariance at the solution.
inline PimFit fit_pim(const Dataset& data, const DesignSpec& spec,
                      const SolverConfig& solver = {}) {
  data.validate();
  spec.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index p = spec.p();
  if (n < p + 2)
    throw DesignError("need at least p + 2 = " + std::to_string(p + 2) +
                      " rows, got " + std::to_string(n));

  const Eigen::MatrixXd terms = term_matrix(data, spec);
  {
    // Pairwise differences span the centered term columns; a rank check here
    // catches unidentifiable designs before any expensive pass.
    Eigen::MatrixXd centered = terms.rowwise() - terms.colwise().mean();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
      throw DesignError("design difference matrix is rank deficient (rank " +
                        std::to_string(qr.rank()) + " < " + std::to_string(p) + ")");
  }
  const Eigen::MatrixXd terms_t = terms.transpose();
  const LinkFunction link(spec.link);
  const Eigen::Index n_pseudo = n * (n - 1) / 2;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  PimFit fit;
  fit.n_obs = n;
  fit.n_pseudo = n_pseudo;
  fit.link = spec.link;
  fit.design_fingerprint = spec.fingerprint();
  fit.coefficient_names = spec.coefficient_names();

  auto pass = [&](const Eigen::VectorXd& at) {
    return detail::run_pass<true, false>(data.y, terms_t, at, link,
                                         solver.eta_clamp, solver.threads);
  };

  detail::FitAccum current = pass(beta);
  bool converged = false;
  double score_norm = detail::mean_score_inf_norm(current.score, n_pseudo);
  fit.clamped = current.clamped;

  for (int iter = 0; iter < solver.max_iterations && !converged; ++iter) {
    if (score_norm <= solver.score_tolerance) {
      converged = true;
      break;
    }
    Eigen::MatrixXd bread = current.bread;
    detail::symmetrize_from_upper(bread);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(bread);
    if (ldlt.info() != Eigen::Success)
      throw NumericalError("bread matrix factorization failed");
    const Eigen::VectorXd delta = ldlt.solve(current.score);
    if (!delta.allFinite())
      throw NumericalError("non-finite Fisher scoring step");

    double step = 1.0;
    detail::FitAccum candidate(p, n, false);
    Eigen::VectorXd beta_cand;
    double cand_norm = 0.0;
    for (int h = 0;; ++h) {
      beta_cand = beta + step * delta;
      candidate = pass(beta_cand);
      cand_norm = detail::mean_score_inf_norm(candidate.score, n_pseudo);
      if (cand_norm <= score_norm || h >= solver.max_step_halvings) break;
      step *= 0.5;
    }
    const double max_move = (step * delta).cwiseAbs().maxCoeff();
    beta = beta_cand;
    current = std::move(candidate);
    score_norm = cand_norm;
    fit.clamped = fit.clamped || current.clamped;
    fit.iterations = iter + 1;
    if (max_move <= solver.step_tolerance ||
        score_norm <= solver.score_tolerance) {
      converged = true;
    }
  }

  if (!converged) {
    std::vector<double> last(beta.data(), beta.data() + beta.size());
    throw SolverError("estimating equations did not converge after " +
                          std::to_string(solver.max_iterations) + " iterations",
                      std::move(last), score_norm);
  }

  fit.beta = beta;
  fit.score_norm = score_norm;
  const SandwichParts parts = sandwich_parts(data.y, terms_t, beta, link,
                                             solver.eta_clamp, solver.threads);
  fit.covariance = covariance_from_parts(parts);
  return fit;
}

}  // namespace pimfit
