#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "cflab/ball.hpp"

namespace cflab {

// One value per ball vertex, indexed by VertexIndex.
using ScalarField = Eigen::VectorXd;

// phi_p(t) = |t|^{p-2} t with phi_p(0) = 0 (the continuous extension used
// for every p > 1; for p < 2 the formula alone is singular at 0).
double signed_power(double t, double p);

// E_p(f) = sum over ordered pairs (g, gs) with both endpoints in the ball of
// |f(gs) - f(g)|^p; every undirected edge contributes twice.  Requires
// p >= 1.
double dirichlet_energy(const Ball& ball, const ScalarField& f, double p);

// (E_p(f) + |f(identity)|^p)^{1/p}.
double dp_norm(const Ball& ball, const ScalarField& f, double p);

// Delta_p f(g) = sum_{s in S} phi_p(f(gs) - f(g)).  g must have all its
// neighbours inside the ball (std::out_of_range otherwise).  Requires p > 1.
double p_laplacian(const Ball& ball, const ScalarField& f, double p,
                   VertexIndex g);

// max |Delta_p f| over all vertices with every neighbour inside the ball.
double harmonic_residual(const Ball& ball, const ScalarField& f, double p);

struct SolverConfig {
  double residual_tol = 1e-10;   // max |Delta_p h| over free vertices
  double subproblem_tol = 1e-12; // derivative tolerance of 1-d minimisations
  int max_sweeps = 20'000;
};

struct SolverReport {
  bool converged = false;
  int sweeps = 0;
  double final_residual = 0.0;
  double final_energy = 0.0;
  // One entry per sweep, recorded after the sweep.
  std::vector<double> energy_trace;
  std::vector<double> residual_trace;
};

struct DirichletSolution {
  ScalarField field;
  SolverReport report;
};

// Minimises E_p over fields agreeing with boundary_values on the sphere S_R
// (coordinate descent; each 1-d problem is solved by safeguarded
// bisection/Newton on the strictly increasing derivative).  boundary_values
// must cover exactly the radius-R sphere.  Requires p > 1.  The energy is
// convex, so the minimiser is unique whenever p > 1 and the report's
// convergence flag certifies the residual tolerance; initial only affects
// the iteration count.
DirichletSolution solve_dirichlet(const Ball& ball,
                                  const std::map<VertexIndex, double>&
                                      boundary_values,
                                  double p, const SolverConfig& config = {},
                                  const ScalarField* initial = nullptr);

struct Decomposition {
  ScalarField lp_part;        // u = f - h, zero on the boundary sphere
  ScalarField harmonic_part;  // h, p-harmonic inside, f's trace on the sphere
  SolverReport report;
};

// Finite-radius Royden-type splitting f = u + h.
Decomposition decompose(const Ball& ball, const ScalarField& f, double p,
                        const SolverConfig& config = {});

}  // namespace cflab
