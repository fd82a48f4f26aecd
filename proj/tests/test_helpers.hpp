#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pilqr/problem.hpp"
#include "pilqr/projection.hpp"
#include "pilqr/rollout.hpp"

namespace pilqr::testing {

// Deterministic across platforms: raw mt19937 draws converted by hand instead
// of going through std::uniform_real_distribution, whose output is
// implementation-defined.
struct TestRng {
  std::mt19937 gen;

  explicit TestRng(unsigned seed) : gen(seed) {}

  double uniform() { return (static_cast<double>(gen()) + 0.5) / 4294967296.0; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen() % static_cast<std::uint32_t>(hi - lo + 1));
  }

  double gauss() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vector vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) {
      v(i) = gauss();
    }
    return v;
  }

  Matrix matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        m(r, c) = gauss();
      }
    }
    return m;
  }

  // symmetric positive definite with unit ridge
  Matrix spd(int n, double ridge = 1.0) {
    const Matrix f = matrix(n, n);
    return f.transpose() * f / static_cast<double>(n) + ridge * Matrix::Identity(n, n);
  }
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max(1.0, b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Plain discrete-time LQR recursion, written independently of the library
// recursion: S_N = Qf; K_n = (R + B'S+B)^-1 (P + B'S+A); S_n = Q + A'S+A - K'(R+B'S+B)K.
struct LqrResult {
  std::vector<Matrix> K;  // u = -K x
  std::vector<Matrix> S;
};

inline LqrResult textbook_lqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                              const Matrix& P, const Matrix& Qf, int N) {
  LqrResult out;
  out.K.resize(N);
  out.S.resize(N + 1);
  out.S[N] = Qf;
  for (int n = N - 1; n >= 0; --n) {
    const Matrix H = R + B.transpose() * out.S[n + 1] * B;
    const Matrix G = P + B.transpose() * out.S[n + 1] * A;
    out.K[n] = H.ldlt().solve(G);
    out.S[n] = Q + A.transpose() * out.S[n + 1] * A - out.K[n].transpose() * H * out.K[n];
    out.S[n] = 0.5 * (out.S[n] + out.S[n].transpose());
  }
  return out;
}

// Projection stages and projected stages for every step of one linearization,
// wiring the terminal constraint into the last preview.
struct ProjectedChain {
  std::vector<ProjectionStage> projections;
  std::vector<ProjectedStage> stages;
};

inline ProjectedChain project_all(const LqApproximation& lin) {
  ProjectedChain out;
  const int N = lin.horizon();
  for (int n = 0; n < N; ++n) {
    const bool last = n + 1 == N;
    const Matrix& C_next = last ? lin.terminal_C : lin.constraints[n + 1].C;
    const Vector& d_next = last ? lin.terminal_d : lin.constraints[n + 1].d;
    const PreviewStack stack =
        build_preview_stack(lin.stages[n], lin.constraints[n], C_next, d_next);
    out.projections.push_back(compute_projection(stack));
    out.stages.push_back(project_stage(lin.stages[n], out.projections.back()));
  }
  return out;
}

}  // namespace pilqr::testing
