#include "evpred/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace evpred {

namespace {

struct Simplex {
  std::vector<std::vector<double>> vertices;
  std::vector<double> values;
};

struct NelderMeadRun {
  std::vector<double> best;
  double value;
  int iterations;
  bool converged;
};

NelderMeadRun run_once(const std::function<double(const std::vector<double>&)>& eval, const std::vector<double>& x0,
                       const NelderMeadOptions& opt) {
  const std::size_t n = x0.size();
  Simplex s;
  s.vertices.assign(n + 1, x0);
  for (std::size_t j = 0; j < n; ++j) s.vertices[j + 1][j] += opt.initial_step;
  s.values.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) s.values[i] = eval(s.vertices[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  int it = 0;
  bool converged = false;
  for (; it < opt.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double fspread = s.values[worst] - s.values[best];
    if (std::isnan(fspread)) fspread = std::numeric_limits<double>::infinity();
    double xspread = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        xspread = std::max(xspread, std::abs(s.vertices[i][j] - s.vertices[best][j]));
    if (fspread < opt.ftol && xspread < opt.xtol) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += s.vertices[order[k]][j];
    for (double& c : centroid) c /= static_cast<double>(n);

    auto along = [&](double coef, std::vector<double>& out) {
      for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coef * (s.vertices[worst][j] - centroid[j]);
    };

    along(-1.0, trial);
    const double fr = eval(trial);
    if (fr < s.values[best]) {
      along(-2.0, trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        s.vertices[worst] = trial2;
        s.values[worst] = fe;
      } else {
        s.vertices[worst] = trial;
        s.values[worst] = fr;
      }
      continue;
    }
    if (fr < s.values[second]) {
      s.vertices[worst] = trial;
      s.values[worst] = fr;
      continue;
    }
    // Contraction: outside if the reflection beat the worst point, inside otherwise.
    const bool outside = fr < s.values[worst];
    along(outside ? -0.5 : 0.5, trial2);
    const double fc = eval(trial2);
    if (fc < (outside ? fr : s.values[worst])) {
      s.vertices[worst] = trial2;
      s.values[worst] = fc;
      continue;
    }
    // Shrink towards the best vertex.
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j)
        s.vertices[i][j] = s.vertices[best][j] + 0.5 * (s.vertices[i][j] - s.vertices[best][j]);
      s.values[i] = eval(s.vertices[i]);
    }
  }
  const auto best_it = std::min_element(s.values.begin(), s.values.end());
  const auto b = static_cast<std::size_t>(best_it - s.values.begin());
  return {s.vertices[b], s.values[b], it, converged};
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt) {
  if (x0.empty()) throw std::invalid_argument("nelder_mead needs at least one coordinate");
  const double bound = opt.coordinate_bound;
  for (double& v : x0) v = std::clamp(v, -bound, bound);
  std::vector<double> clamped(x0.size());
  auto eval = [&](const std::vector<double>& x) {
    for (std::size_t j = 0; j < x.size(); ++j) clamped[j] = std::clamp(x[j], -bound, bound);
    const double v = f(std::span<const double>(clamped));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  NelderMeadRun run = run_once(eval, x0, opt);
  NelderMeadResult out{run.best, run.value, run.iterations, run.converged};
  for (int rebuild = 0; rebuild < opt.max_rebuilds; ++rebuild) {
    NelderMeadRun next = run_once(eval, out.x, opt);
    out.iterations += next.iterations;
    const double gain = out.value - next.value;
    if (next.value <= out.value) {
      out.x = next.best;
      out.value = next.value;
    }
    out.converged = next.converged;
    if (!(gain >= opt.ftol)) break;
  }
  for (double& v : out.x) v = std::clamp(v, -bound, bound);
  return out;
}

}  // namespace evpred
