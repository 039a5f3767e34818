#include "hetfuse/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hetfuse {

Eigen::MatrixXd latin_hypercube(Rng& rng, int n, int d) {
  if (n < 1 || d < 1) fail("latin_hypercube: n and d must be positive");
  Eigen::MatrixXd samples(n, d);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (int i = 0; i < n; ++i) {
      samples(i, j) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                      static_cast<double>(n);
    }
  }
  return samples;
}

void BoxBounds::validate() const {
  if (lo.size() != hi.size() || lo.size() == 0) fail("bounds: bad shape");
  for (int i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) fail("bounds: lo must be strictly below hi");
  }
}

void BoxBounds::clamp(Eigen::VectorXd& x) const {
  x = x.cwiseMax(lo).cwiseMin(hi);
}

namespace {

constexpr double kPenalty = 1e100;

double safe_eval(const Objective& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : kPenalty;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& start,
                             const BoxBounds& box, long max_evals) {
  box.validate();
  const int d = box.dim();
  if (start.size() != d) fail("nelder_mead: start point dimension mismatch");
  if (max_evals < 1) fail("nelder_mead: eval budget must be positive");

  long evals = 0;
  auto eval = [&](Eigen::VectorXd x) {
    box.clamp(x);
    ++evals;
    return std::make_pair(safe_eval(f, x), x);
  };

  // simplex seeded along the coordinate axes, flipped away from the walls
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> fs;
  {
    Eigen::VectorXd x0 = start;
    box.clamp(x0);
    auto [f0, p0] = eval(x0);
    xs.push_back(p0);
    fs.push_back(f0);
    for (int i = 0; i < d && evals < max_evals; ++i) {
      const double step = 0.05 * (box.hi[i] - box.lo[i]);
      Eigen::VectorXd xi = x0;
      xi[i] += (x0[i] + step <= box.hi[i]) ? step : -step;
      auto [fi, pi] = eval(xi);
      xs.push_back(pi);
      fs.push_back(fi);
    }
  }
  while (static_cast<int>(xs.size()) < d + 1) {
    xs.push_back(xs.front());
    fs.push_back(fs.front());
  }

  std::vector<int> order(xs.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[static_cast<std::size_t>(a)] < fs[static_cast<std::size_t>(b)]; });
  };
  sort_simplex();

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  while (evals < max_evals) {
    const int best = order.front();
    const int worst = order.back();
    const int second_worst = order[order.size() - 2];

    // convergence: f-spread and x-spread both negligible
    const double fspread = fs[static_cast<std::size_t>(worst)] - fs[static_cast<std::size_t>(best)];
    double xspread = 0.0;
    for (std::size_t k = 1; k < xs.size(); ++k) {
      xspread = std::max(xspread, (xs[static_cast<std::size_t>(order[k])] - xs[static_cast<std::size_t>(best)]).cwiseAbs().maxCoeff());
    }
    if (fspread <= 1e-12 * (1.0 + std::abs(fs[static_cast<std::size_t>(best)])) && xspread <= 1e-11) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += xs[static_cast<std::size_t>(order[k])];
    centroid /= static_cast<double>(d >= 1 ? order.size() - 1 : 1);

    auto [fr, xr] = eval(centroid + alpha * (centroid - xs[static_cast<std::size_t>(worst)]));
    if (fr < fs[static_cast<std::size_t>(best)]) {
      if (evals < max_evals) {
        auto [fe, xe] = eval(centroid + gamma * (xr - centroid));
        if (fe < fr) {
          xs[static_cast<std::size_t>(worst)] = xe;
          fs[static_cast<std::size_t>(worst)] = fe;
        } else {
          xs[static_cast<std::size_t>(worst)] = xr;
          fs[static_cast<std::size_t>(worst)] = fr;
        }
      } else {
        xs[static_cast<std::size_t>(worst)] = xr;
        fs[static_cast<std::size_t>(worst)] = fr;
      }
    } else if (fr < fs[static_cast<std::size_t>(second_worst)]) {
      xs[static_cast<std::size_t>(worst)] = xr;
      fs[static_cast<std::size_t>(worst)] = fr;
    } else if (evals < max_evals) {
      const bool outside = fr < fs[static_cast<std::size_t>(worst)];
      const Eigen::VectorXd toward = outside ? xr : xs[static_cast<std::size_t>(worst)];
      auto [fc, xc] = eval(centroid + rho * (toward - centroid));
      if (fc < std::min(fr, fs[static_cast<std::size_t>(worst)])) {
        xs[static_cast<std::size_t>(worst)] = xc;
        fs[static_cast<std::size_t>(worst)] = fc;
      } else {
        // shrink toward the best vertex
        for (std::size_t k = 1; k < order.size() && evals < max_evals; ++k) {
          const int idx = order[k];
          auto [fk, xk] = eval(xs[static_cast<std::size_t>(best)] +
                               sigma * (xs[static_cast<std::size_t>(idx)] - xs[static_cast<std::size_t>(best)]));
          xs[static_cast<std::size_t>(idx)] = xk;
          fs[static_cast<std::size_t>(idx)] = fk;
        }
      }
    }
    sort_simplex();
  }

  sort_simplex();
  NelderMeadResult res;
  res.x = xs[static_cast<std::size_t>(order.front())];
  res.f = fs[static_cast<std::size_t>(order.front())];
  res.evals = evals;
  return res;
}

MultistartResult multistart_minimize(const Objective& f, const BoxBounds& box, int restarts,
                                     long max_evals_per_restart, std::uint64_t seed) {
  box.validate();
  if (restarts < 1) fail("multistart: need at least one restart");
  const int d = box.dim();

  Rng rng(seed);
  const Eigen::MatrixXd unit = latin_hypercube(rng, restarts, d);
  Eigen::MatrixXd starts(restarts, d);
  for (int r = 0; r < restarts; ++r) {
    starts.row(r) = box.lo.transpose().array() +
                    unit.row(r).array() * (box.hi - box.lo).transpose().array();
  }
  return multistart_minimize_from(f, box, starts, max_evals_per_restart);
}

MultistartResult multistart_minimize_from(const Objective& f, const BoxBounds& box,
                                          const Eigen::MatrixXd& starts,
                                          long max_evals_per_restart) {
  box.validate();
  const int restarts = static_cast<int>(starts.rows());
  if (restarts < 1) fail("multistart: need at least one start point");
  if (starts.cols() != box.dim()) fail("multistart: start point dimension mismatch");

  std::vector<NelderMeadResult> results(static_cast<std::size_t>(restarts));
  parallel_for(static_cast<std::size_t>(restarts), [&](std::size_t r) {
    results[r] = nelder_mead(f, starts.row(static_cast<int>(r)), box, max_evals_per_restart);
  });

  MultistartResult out;
  out.best_index = 0;
  out.f = std::numeric_limits<double>::infinity();
  out.restart_f.reserve(results.size());
  for (std::size_t r = 0; r < results.size(); ++r) {
    out.restart_f.push_back(results[r].f);
    out.evals += results[r].evals;
    if (results[r].f < out.f) {
      out.f = results[r].f;
      out.best_index = static_cast<int>(r);
    }
  }
  out.x = results[static_cast<std::size_t>(out.best_index)].x;
  return out;
}

}  // namespace hetfuse
