#include "mfsmp/forward.hpp"

#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "mfsmp/parallel.hpp"
#include "mfsmp/rng.hpp"

namespace mfsmp {

void parallel_for(int n, int workers, const std::function<void(int, int)>& fn) {
  if (workers <= 1 || n < 2 * workers) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

void fill_noise(std::uint64_t seed, const TimeGrid& grid, int particles, Mat& dW, Mat& dY,
                int workers) {
  const double sdt = std::sqrt(grid.dt());
  dW.resize(particles, grid.steps);
  dY.resize(particles, grid.steps);
  parallel_for(particles, workers, [&](int begin, int end) {
    for (int j = begin; j < end; ++j)
      for (int i = 0; i < grid.steps; ++i) {
        dW(j, i) = sdt * rng::normal(seed, static_cast<std::uint64_t>(j),
                                     static_cast<std::uint64_t>(i), 0);
        dY(j, i) = sdt * rng::normal(seed, static_cast<std::uint64_t>(j),
                                     static_cast<std::uint64_t>(i), 1);
      }
  });
}

ForwardEnsemble simulate_forward_given_noise(const CoefficientSet& model, const Policy& policy,
                                             const TimeGrid& grid, const Mat& dW, const Mat& dY,
                                             std::uint64_t seed, int workers) {
  const int N_p = static_cast<int>(dW.rows());
  if (N_p < 2)
    throw SimulationError("simulate_forward: need at least 2 particles for empirical means");
  if (dW.cols() != grid.steps || dY.rows() != N_p || dY.cols() != grid.steps)
    throw SimulationError("simulate_forward: noise shape does not match grid");
  const int n = model.dims.n;
  const int k = model.dims.k_u;
  const int d_f = policy.features().dim();
  const double dt = grid.dt();
  const int nodes = grid.nodes();

  ForwardEnsemble ens;
  ens.grid = grid;
  ens.particles = N_p;
  ens.seed = seed;
  ens.dW = dW;
  ens.dY = dY;
  ens.x.assign(nodes, Mat(N_p, n));
  ens.u.assign(nodes, Mat(N_p, k));
  ens.psi.assign(nodes, Mat(N_p, d_f));
  ens.rho = Mat(N_p, nodes);
  ens.W = Mat::Zero(N_p, nodes);
  ens.Y = Mat::Zero(N_p, nodes);
  ens.x_mean = Mat(nodes, n);
  ens.u_mean = Mat(nodes, k);

  ens.x[0] = model.x0.transpose().replicate(N_p, 1);
  ens.rho.col(0).setOnes();

  Vec log_rho = Vec::Zero(N_p);
  Vec y_sum = Vec::Zero(N_p);  // running sums for the feature map
  Vec y_max = Vec::Zero(N_p);

  for (int i = 0; i < nodes; ++i) {
    const double t = grid.node(i);

    // Policy features use Y samples at nodes <= i only.
    parallel_for(N_p, workers, [&](int begin, int end) {
      for (int j = begin; j < end; ++j) {
        const double y_avg = y_sum[j] / (i + 1);
        ens.psi[i].row(j) = policy.features().eval(t, ens.Y(j, i), y_avg, y_max[j]).transpose();
        ens.u[i].row(j) = policy.value(i, ens.psi[i].row(j).transpose()).transpose();
      }
    });

    // Ordered reductions: empirical mean-field curves under P.
    ens.x_mean.row(i) = ens.x[i].colwise().mean();
    ens.u_mean.row(i) = ens.u[i].colwise().mean();

    if (i == grid.steps) break;

    const Vec xm = ens.x_mean.row(i).transpose();
    const Vec um = ens.u_mean.row(i).transpose();
    parallel_for(N_p, workers, [&](int begin, int end) {
      StateArgs a;
      a.t = t;
      a.x_mean = xm;
      a.u_mean = um;
      for (int j = begin; j < end; ++j) {
        a.x = ens.x[i].row(j).transpose();
        a.u = ens.u[i].row(j).transpose();
        const double hv = model.h(a);
        const Vec drift = model.b(a) - model.sigma2(a) * hv;
        const Vec xn = a.x + drift * dt + model.sigma1(a) * ens.dW(j, i) +
                       model.sigma2(a) * ens.dY(j, i);
        ens.x[i + 1].row(j) = xn.transpose();
        log_rho[j] += hv * ens.dY(j, i) - 0.5 * hv * hv * dt;
        ens.rho(j, i + 1) = std::exp(log_rho[j]);
        ens.W(j, i + 1) = ens.W(j, i) + ens.dW(j, i);
        ens.Y(j, i + 1) = ens.Y(j, i) + ens.dY(j, i);
      }
    });
    if (!ens.x[i + 1].allFinite()) {
      for (int j = 0; j < N_p; ++j)
        if (!ens.x[i + 1].row(j).allFinite())
          throw SimulationError("simulate_forward: non-finite state at particle " +
                                std::to_string(j) + ", node " + std::to_string(i + 1));
    }
    for (int j = 0; j < N_p; ++j) {
      y_sum[j] += ens.Y(j, i + 1);
      y_max[j] = std::max(y_max[j], ens.Y(j, i + 1));
    }
  }
  return ens;
}

ForwardEnsemble simulate_forward(const CoefficientSet& model, const Policy& policy,
                                 const TimeGrid& grid, int particles, std::uint64_t seed,
                                 int workers) {
  Mat dW, dY;
  fill_noise(seed, grid, particles, dW, dY, workers);
  return simulate_forward_given_noise(model, policy, grid, dW, dY, seed, workers);
}

Vec girsanov_weights(const ForwardEnsemble& ens, int node) {
  if (node < 0 || node >= ens.nodes())
    throw SimulationError("girsanov_weights: node index out of range");
  const Vec col = ens.rho.col(node);
  const double total = col.sum();
  if (!(total > 0.0)) throw SimulationError("girsanov_weights: degenerate density column");
  return col / total;
}

namespace {

double fit_slope(const std::vector<double>& eps, const std::vector<double>& moment) {
  const int n = static_cast<int>(eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(eps[i]);
    const double ly = std::log(moment[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

PerturbationScaling perturbation_scaling(const CoefficientSet& model, const Policy& other,
                                         const Policy& base, const std::vector<double>& eps_list,
                                         const TimeGrid& grid, int particles, std::uint64_t seed) {
  if (eps_list.size() < 3)
    throw SimulationError("perturbation_scaling: need at least 3 epsilon values");
  for (size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0))
      throw SimulationError("perturbation_scaling: epsilon values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw SimulationError("perturbation_scaling: epsilon values must be strictly decreasing");
  }

  Mat dW, dY;
  fill_noise(seed, grid, particles, dW, dY);
  const ForwardEnsemble ref = simulate_forward_given_noise(model, base, grid, dW, dY, seed);

  PerturbationScaling out;
  out.eps.assign(eps_list.begin(), eps_list.end());
  bool all_zero = true;
  for (double eps : eps_list) {
    const BlendPolicy blended(base, other, eps);
    const ForwardEnsemble pert = simulate_forward_given_noise(model, blended, grid, dW, dY, seed);
    double m4 = 0.0, m2 = 0.0;
    for (int j = 0; j < particles; ++j) {
      double sup_x = 0.0, sup_rho = 0.0;
      for (int i = 0; i < ref.nodes(); ++i) {
        sup_x = std::max(sup_x, (pert.x[i].row(j) - ref.x[i].row(j)).norm());
        sup_rho = std::max(sup_rho, std::abs(pert.rho(j, i) - ref.rho(j, i)));
      }
      m4 += std::pow(sup_x, 4);
      m2 += sup_rho * sup_rho;
    }
    m4 /= particles;
    m2 /= particles;
    out.x_moment.push_back(m4);
    out.rho_moment.push_back(m2);
    if (m4 != 0.0 || m2 != 0.0) all_zero = false;
  }

  if (all_zero) {
    out.degenerate = true;
    return out;
  }
  auto positive = [](const std::vector<double>& v) {
    for (double x : v)
      if (!(x > 0.0)) return false;
    return true;
  };
  out.x_slope = positive(out.x_moment) ? fit_slope(out.eps, out.x_moment)
                                       : std::numeric_limits<double>::quiet_NaN();
  out.rho_slope = positive(out.rho_moment) ? fit_slope(out.eps, out.rho_moment)
                                           : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace mfsmp
