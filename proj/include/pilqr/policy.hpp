#pragma once

#include <stdexcept>
#include <vector>

#include "pilqr/problem.hpp"

namespace pilqr {

// Time-indexed affine feedback law u_n = feedforward_n + gain_n (x - reference_n).
struct Policy {
  std::vector<Vector> feedforward;  // length N
  std::vector<Matrix> gain;         // length N
  std::vector<Vector> reference;    // length N (nominal states the gains are anchored to)

  int horizon() const { return static_cast<int>(feedforward.size()); }

  Vector operator()(const Vector& x, int n) const {
    return feedforward[static_cast<std::size_t>(n)] +
           gain[static_cast<std::size_t>(n)] * (x - reference[static_cast<std::size_t>(n)]);
  }
};

// Open-loop policy replaying fixed inputs (zero gain).
Policy make_open_loop_policy(const std::vector<Vector>& inputs, int state_dim);

// Constant-gain policy u = u_ref + K (x - x_ref), repeated over the horizon.
Policy make_constant_policy(const Matrix& K, const Vector& u_ref, const Vector& x_ref, int horizon);

void validate_policy(const Policy& policy);

}  // namespace pilqr
