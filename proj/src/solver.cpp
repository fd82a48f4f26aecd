#include "pilqr/solver.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "pilqr/rollout.hpp"

namespace pilqr {

namespace {

struct TrajectoryMetrics {
  double merit = 0.0;
  double cost = 0.0;
  double ise = 0.0;
  double max_violation = 0.0;
  double l1_preview = 0.0;  // L1 norm of the previewed residual stacks
};

TrajectoryMetrics measure_trajectory(const OcpDefinition& ocp, const TrajectoryPair& traj,
                                     double sigma) {
  TrajectoryMetrics out;
  out.cost = evaluate_total_cost(ocp, traj);
  const ConstraintStack stack = evaluate_constraint_stack(ocp, traj);
  const int N = ocp.horizon;
  for (int n = 0; n < N; ++n) {
    const ConstraintRecord& rec = stack.stage[static_cast<std::size_t>(n)];
    if (rec.g1.size() > 0) {
      out.l1_preview += rec.g1.cwiseAbs().sum();
      out.ise += rec.g1.squaredNorm() * ocp.dt;
      out.max_violation = std::max(out.max_violation, rec.g1.cwiseAbs().maxCoeff());
    }
    if (rec.g2.size() > 0) {
      if (n > 0) {  // the step-0 residual is fixed by x0 and carries no merit weight
        out.l1_preview += rec.g2.cwiseAbs().sum();
      }
      out.ise += rec.g2.squaredNorm() * ocp.dt;
      out.max_violation = std::max(out.max_violation, rec.g2.cwiseAbs().maxCoeff());
    }
  }
  if (stack.terminal.size() > 0) {
    out.l1_preview += stack.terminal.cwiseAbs().sum();
    out.ise += stack.terminal.squaredNorm();
    out.max_violation = std::max(out.max_violation, stack.terminal.cwiseAbs().maxCoeff());
  }
  out.merit = out.cost + sigma * out.l1_preview;
  return out;
}

IterationReport report_from(const TrajectoryMetrics& m, double alpha) {
  IterationReport rep;
  rep.merit = m.merit;
  rep.cost = m.cost;
  rep.ise = m.ise;
  rep.alpha = alpha;
  rep.max_violation = m.max_violation;
  return rep;
}

struct ProjectedProblem {
  std::vector<ProjectionStage> projections;
  std::vector<ProjectedStage> stages;
  RelativeDegreeReport degree;   // degree.ok == false aborts the solve
  bool rank_warning = false;     // some stacked constraint lost row rank
  double worst_residual = 0.0;
};

ProjectedProblem project_problem(const LqApproximation& lin) {
  ProjectedProblem out;
  const int N = lin.horizon();
  out.projections.reserve(static_cast<std::size_t>(N));
  out.stages.reserve(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    const bool last = n + 1 == N;
    const Matrix& C_next = last ? lin.terminal_C : lin.constraints[static_cast<std::size_t>(n) + 1].C;
    const Vector& d_next = last ? lin.terminal_d : lin.constraints[static_cast<std::size_t>(n) + 1].d;
    const PreviewStack stack = build_preview_stack(lin.stages[static_cast<std::size_t>(n)],
                                                   lin.constraints[static_cast<std::size_t>(n)],
                                                   C_next, d_next);
    out.degree = check_relative_degree(stack, n);
    if (!out.degree.ok) {
      return out;
    }
    ProjectionStage ps = compute_projection(stack);
    if (!ps.full_row_rank) {
      out.rank_warning = true;
      out.worst_residual = std::max(out.worst_residual, ps.restoration_residual);
    }
    out.stages.push_back(project_stage(lin.stages[static_cast<std::size_t>(n)], ps));
    out.projections.push_back(std::move(ps));
  }
  return out;
}

RiccatiOptions riccati_options(const SolverSettings& settings) {
  RiccatiOptions options;
  options.check_conditions = true;
  options.check_stride = settings.validation_mode ? 1 : std::max(1, settings.fast_check_stride);
  options.check_value_psd = settings.validation_mode;
  return options;
}

void validate_settings(const SolverSettings& s) {
  if (s.alpha_decay <= 1.0 || s.max_linesearch_steps < 0 || s.max_iterations < 1 ||
      s.merit_rel_tol <= 0.0 || s.ise_max <= 0.0 || s.fast_check_stride < 1 ||
      (s.sigma && *s.sigma <= 0.0)) {
    throw std::invalid_argument("[solver] invalid settings (positivity/ordering violated)");
  }
}

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIterations:
      return "max-iterations";
    case SolveStatus::Stalled:
      return "stalled";
    case SolveStatus::RelativeDegreeViolation:
      return "relative-degree-violation";
  }
  return "unknown";
}

double merit(const OcpDefinition& ocp, const TrajectoryPair& traj, double sigma) {
  return measure_trajectory(ocp, traj, sigma).merit;
}

LineSearchResult line_search(const OcpDefinition& ocp, const TrajectoryPair& nominal,
                             const std::vector<ProjectionStage>& projections,
                             const std::vector<ValueStage>& values,
                             const SolverSettings& settings, double sigma) {
  LineSearchResult out;

  // alpha = 0 reference: feedback-only rollout, reproduces the nominal exactly
  // on deterministic dynamics.
  const Policy reference_policy = assemble_policy(projections, values, nominal, 0.0);
  const TrajectoryPair reference_traj = rollout_policy(ocp, reference_policy);
  const TrajectoryMetrics reference = measure_trajectory(ocp, reference_traj, sigma);
  out.reference_merit = reference.merit;

  // fallback candidate if every step length fails
  out.policy = reference_policy;
  out.trajectory = reference_traj;
  out.report = report_from(reference, 0.0);
  double best_merit = std::numeric_limits<double>::infinity();

  for (int k = 0; k <= settings.max_linesearch_steps; ++k) {
    const double alpha = std::pow(1.0 / settings.alpha_decay, k);
    Policy candidate = assemble_policy(projections, values, nominal, alpha);
    TrajectoryPair traj;
    TrajectoryMetrics metrics;
    try {
      traj = rollout_policy(ocp, candidate);
      metrics = measure_trajectory(ocp, traj, sigma);
    } catch (const DivergenceError&) {
      continue;  // diverging candidate counts as infinite merit
    } catch (const std::runtime_error&) {
      continue;  // non-finite cost/constraint evaluation, same treatment
    }
    if (!std::isfinite(metrics.merit)) {
      continue;
    }
    if (metrics.merit < out.reference_merit) {
      out.policy = std::move(candidate);
      out.trajectory = std::move(traj);
      out.report = report_from(metrics, alpha);
      out.stalled = false;
      return out;
    }
    if (metrics.merit < best_merit) {
      best_merit = metrics.merit;
      out.policy = std::move(candidate);
      out.trajectory = std::move(traj);
      out.report = report_from(metrics, alpha);
    }
  }
  out.stalled = true;
  out.report.stalled = true;
  return out;
}

SolveResult solve(const OcpDefinition& ocp, const Policy& initial_policy,
                  const SolverSettings& settings) {
  validate_definition(ocp);
  validate_policy(initial_policy);
  validate_settings(settings);

  SolveResult res;
  if (ocp.g2) {
    const Vector v = ocp.g2(ocp.x0, 0);
    const double tol = kDefaultRankTol * (1.0 + (ocp.x0.size() ? ocp.x0.cwiseAbs().maxCoeff() : 0.0));
    if (v.size() > 0 && v.cwiseAbs().maxCoeff() > tol) {
      res.warnings.push_back("[solver] initial state violates the pure-state constraint by " +
                             std::to_string(v.cwiseAbs().maxCoeff()) +
                             "; the violation at step 0 cannot be acted on");
    }
  }

  TrajectoryPair traj = rollout_policy(ocp, initial_policy);
  // The merit weight is a plain tuning parameter; convergence is insensitive
  // to it over a broad range, so an unset value falls back to 1.
  res.sigma_used = settings.sigma.value_or(1.0);
  const double sigma = res.sigma_used;
  double merit_prev = measure_trajectory(ocp, traj, sigma).merit;

  Policy policy = initial_policy;
  const bool fixed_budget = settings.fixed_iteration_count > 0;
  const int iteration_budget =
      fixed_budget ? settings.fixed_iteration_count : settings.max_iterations;
  const RiccatiOptions roptions = riccati_options(settings);

  res.status = SolveStatus::MaxIterations;
  int consecutive_stalls = 0;
  bool rank_warned = false;

  for (int iteration = 1; iteration <= iteration_budget; ++iteration) {
    LqApproximation lin = linearize_and_quadratize(ocp, traj);
    for (std::string& w : lin.warnings) {
      res.warnings.push_back(std::move(w));
    }

    ProjectedProblem proj = project_problem(lin);
    if (!proj.degree.ok) {
      res.status = SolveStatus::RelativeDegreeViolation;
      res.warnings.push_back(proj.degree.message);
      break;
    }
    if (proj.rank_warning && !rank_warned) {
      rank_warned = true;
      res.warnings.push_back(
          "[solver] stacked constraint lost row rank during iteration " +
          std::to_string(iteration) + "; using the least-squares restoring action (residual " +
          std::to_string(proj.worst_residual) + ")");
    }

    const std::vector<ValueStage> values =
        backward_pass(proj.stages, lin.terminal_q, lin.terminal_q_vec, lin.terminal_Q, roptions);

    if (!fixed_budget) {
      // Convergence precheck: the backward pass predicts the attainable cost
      // s0 at dx0 = 0; when it matches the current cost and the iterate is
      // feasible there is nothing left to gain from a line search.
      double current_cost = lin.terminal_q;
      for (const LqStage& st : lin.stages) {
        current_cost += st.q;
      }
      const double predicted_gain = std::abs(current_cost - values.front().s0);
      if (predicted_gain <= settings.merit_rel_tol * std::max(1.0, std::abs(merit_prev))) {
        const TrajectoryMetrics m = measure_trajectory(ocp, traj, sigma);
        if (m.ise < settings.ise_max) {
          res.status = SolveStatus::Converged;
          policy = assemble_policy(proj.projections, values, traj, 1.0);
          if (res.reports.empty()) {
            // converged before any line search (already optimal); synthesize a
            // report so callers always see at least one record
            IterationReport rep = report_from(m, 0.0);
            rep.iteration = 0;
            rep.converged = true;
            res.reports.push_back(rep);
            if (settings.observer) {
              settings.observer(rep);
            }
          } else {
            res.reports.back().converged = true;
          }
          break;
        }
      }
    }

    LineSearchResult ls =
        line_search(ocp, traj, proj.projections, values, settings, sigma);
    ls.report.iteration = iteration;

    if (ls.stalled) {
      ++consecutive_stalls;
      res.reports.push_back(ls.report);
      if (settings.observer) {
        settings.observer(ls.report);
      }
      if (!fixed_budget && consecutive_stalls >= 2) {
        res.status = SolveStatus::Stalled;
        res.warnings.push_back("[solver] two consecutive line-search stalls at iteration " +
                               std::to_string(iteration) + "; keeping the best iterate");
        break;
      }
      continue;  // retain the nominal trajectory and try a fresh linearization
    }

    consecutive_stalls = 0;
    const bool merit_settled =
        std::abs(ls.report.merit - merit_prev) / std::max(std::abs(merit_prev), 1e-8) <
        settings.merit_rel_tol;
    if (!fixed_budget && merit_settled && ls.report.ise < settings.ise_max) {
      ls.report.converged = true;
      res.status = SolveStatus::Converged;
    }
    merit_prev = ls.report.merit;
    policy = std::move(ls.policy);
    traj = std::move(ls.trajectory);
    res.reports.push_back(ls.report);
    if (settings.observer) {
      settings.observer(ls.report);
    }
    if (ls.report.converged) {
      break;
    }
  }

  res.policy = std::move(policy);
  res.trajectory = std::move(traj);
  return res;
}

Policy make_zero_policy(const OcpDefinition& ocp) {
  return make_constant_policy(Matrix::Zero(ocp.input_dim, ocp.state_dim),
                              Vector::Zero(ocp.input_dim), Vector::Zero(ocp.state_dim),
                              ocp.horizon);
}

Policy make_lqr_initial_policy(const OcpDefinition& ocp, const Vector& u_ss) {
  const int m = ocp.state_dim;
  const int p = ocp.input_dim;
  Matrix A(m, m), B(m, p);
  if (ocp.dynamics_jacobians) {
    ocp.dynamics_jacobians(ocp.x0, u_ss, 0, A, B);
  } else {
    A = finite_difference_jacobian(
        [&](const Vector& x) { return ocp.dynamics(x, u_ss, 0); }, ocp.x0,
        gradient_step(ocp.x0));
    B = finite_difference_jacobian(
        [&](const Vector& u) { return ocp.dynamics(ocp.x0, u, 0); }, u_ss, gradient_step(u_ss));
  }

  Matrix Q = Matrix::Identity(m, m);
  Matrix R = Matrix::Identity(p, p);
  if (ocp.stage_cost_expansion) {
    const StageCostExpansion ex = ocp.stage_cost_expansion(ocp.x0, u_ss, 0);
    Matrix Qc = 0.5 * (ex.dxx + ex.dxx.transpose());
    Matrix Rc = 0.5 * (ex.duu + ex.duu.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> esq(Qc);
    Qc = esq.eigenvectors() * esq.eigenvalues().cwiseMax(0.0).asDiagonal() *
         esq.eigenvectors().transpose();
    Eigen::LLT<Matrix> llt(Rc);
    if (llt.info() == Eigen::Success) {
      Q = Qc + 1e-9 * Matrix::Identity(m, m);
      R = Rc;
    }
  }

  Matrix S = Q;
  Matrix K = Matrix::Zero(p, m);
  for (int it = 0; it < 1000; ++it) {
    const Matrix H = R + B.transpose() * S * B;
    K = -H.ldlt().solve(B.transpose() * S * A);
    Matrix S_next = Q + A.transpose() * S * (A + B * K);
    S_next = 0.5 * (S_next + S_next.transpose()).eval();
    const double delta = (S_next - S).cwiseAbs().maxCoeff();
    S = S_next;
    if (delta <= 1e-10 * (1.0 + S.cwiseAbs().maxCoeff())) {
      break;
    }
  }
  return make_constant_policy(K, u_ss, ocp.x0, ocp.horizon);
}

}  // namespace pilqr
